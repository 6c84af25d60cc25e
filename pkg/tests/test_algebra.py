import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dsbacklund.algebra import (EXPONENT_CAP, Jet, Mat2, Mat2Jet, jet_exp, locate,
                                mat_inv, mat_mul)
from dsbacklund.errors import ExponentOverflow, SingularMatrix

finite = st.floats(-3, 3, allow_nan=False, allow_infinity=False)
cplx = st.builds(complex, finite, finite)
mat2 = st.builds(Mat2, cplx, cplx, cplx, cplx)


def close(a, b, tol=1e-12):
    np.testing.assert_allclose(a.as_array(), b.as_array(), rtol=0, atol=tol)


class TestMatMul:
    def test_identity_left(self):
        m = Mat2(1 + 2j, -1, 0.5j, 3)
        close(Mat2.identity() @ m, m)

    def test_hand_product(self):
        a = Mat2(1, 1j, 0, 1)
        b = Mat2(1, 0, 1j, 1)
        assert mat_mul(a, b).m11 == 0

    def test_inverse_roundtrip(self):
        m = Mat2(2 + 1j, 0.3, -0.4j, 1.5)
        close(m @ mat_inv(m), Mat2.identity())

    @settings(max_examples=60)
    @given(mat2, mat2)
    def test_det_multiplicative(self, a, b):
        lhs = (a @ b).det()
        rhs = a.det() * b.det()
        assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(rhs), 100)

    def test_array_entries_broadcast(self):
        x = np.linspace(0, 1, 5)
        m = Mat2(x, 1.0, 0.0, x + 1)
        p = m @ Mat2.identity()
        assert p.as_array().shape == (5, 2, 2)


class TestMatInv:
    def test_hand_adjugate(self):
        inv = mat_inv(Mat2(1, 1, 1, 2))
        np.testing.assert_allclose(inv.as_array(), [[2, -1], [-1, 1]])

    def test_identity(self):
        close(mat_inv(Mat2.identity()), Mat2.identity())

    def test_singular(self):
        with pytest.raises(SingularMatrix):
            mat_inv(Mat2(1, 1, 1, 1))

    def test_singular_reports_location(self):
        x = np.array([0.0, 1.0, 2.0])
        m = Mat2(1.0, 1.0, 1.0, x)
        with pytest.raises(SingularMatrix) as info:
            mat_inv(m, where=(x, 0 * x))
        assert info.value.where == (1.0, 0.0)

    @settings(max_examples=60)
    @given(mat2)
    def test_double_inverse(self, m):
        if abs(m.det()) < 1e-6 * max(1.0, float(m.frob()) ** 2):
            return
        scale = max(1.0, float(m.frob()))
        close(mat_inv(mat_inv(m)), m, tol=1e-12 * scale**4 / abs(m.det()) + 1e-12)


class TestJet:
    def test_exp_zero(self):
        z = jet_exp(Jet(0j, 0j, 0j))
        assert z.val == 1 and z.dx == 0 and z.dy == 0

    def test_exp_euler(self):
        assert abs(jet_exp(Jet(1j * np.pi)).val + 1) < 1e-15

    def test_exp_matches_difference(self):
        theta, x, h = 0.7 - 0.4j, 0.3, 1e-5
        f = lambda s: np.exp(theta * s)
        z = jet_exp(Jet(theta * x, theta, 0))
        fd = (f(x + h) - f(x - h)) / (2 * h)
        assert abs(z.dx - fd) / abs(fd) < 1e-8

    def test_overflow_cap(self):
        with pytest.raises(ExponentOverflow):
            jet_exp(Jet(EXPONENT_CAP + 1.0, 0, 0))

    def test_product_rule_against_fd(self):
        h = 1e-4
        f = lambda x, y: Jet(np.sin(x) * y, np.cos(x) * y, np.sin(x))
        g = lambda x, y: jet_exp(Jet(0.3j * x + 0.2 * y, 0.3j, 0.2))
        x, y = 0.4, -0.2
        prod = f(x, y) * g(x, y) / (1 + g(x, y))
        val = lambda x, y: (f(x, y) * g(x, y) / (1 + g(x, y))).val
        assert abs(prod.dx - (val(x + h, y) - val(x - h, y)) / (2 * h)) < 1e-8
        assert abs(prod.dy - (val(x, y + h) - val(x, y - h)) / (2 * h)) < 1e-8

    def test_matrix_jets_against_fd(self):
        def A(x, y):
            return Mat2Jet(jet_exp(Jet(0.5 * x - 0.2j * y, 0.5, -0.2j)), Jet(x * y, y, x),
                           Jet.const(2.0), jet_exp(Jet(-0.3 * x, -0.3, 0)))

        def B(x, y):
            return Mat2Jet(Jet(x, 1, 0), Jet(y * y, 0, 2 * y), jet_exp(Jet(1j * x * y, 1j * y, 1j * x)),
                           Jet.const(1 - 1j))

        x, y, h = 0.3, 0.7, 1e-4
        P = A(x, y) @ B(x, y)
        fd = ((A(x + h, y) @ B(x + h, y)).value().as_array()
              - (A(x - h, y) @ B(x - h, y)).value().as_array()) / (2 * h)
        np.testing.assert_allclose(P.dx.as_array(), fd, atol=1e-7)

    def test_zero_jet_roundtrip(self):
        m = Mat2(1, 2j, 3, 4)
        mj = Mat2Jet.from_mat2(m)
        close(mj.value(), m, 0)
        assert np.all(mj.dx.as_array() == 0)


def test_locate_first_true():
    mask = np.array([[False, False], [True, True]])
    X, Y = np.meshgrid([10.0, 20.0], [1.0, 2.0])
    assert locate(mask, X, Y) == (10.0, 2.0)
