"""Pole-ansatz dressing steps ``B_l(lam) = Q_l + 2 lam_l/(lam^2 - lam_l^2) P_l``.

The closed forms for Q_l and P_l are written in terms of the previous
eigenfunction evaluated at the pole, ``Phi_{l-1}(lam_l)``, and the
"F-block" of exponentials ``f_l^{ij}(t) exp{i m (x - y)}``. They are
equivalent to ``Q_l = F + (2/lam_l) P_l`` with

    P_l = (F (a_l, b_l)^T) (-Phi^22, Phi^21) / (sigma_l D_l),
    D_l = a_l Phi^22 - b_l Phi^21,

so that ``B_l(lam_l') = F + sigma_l P_l`` annihilates ``(a_l, b_l)^T``.
:func:`solve_QP_oracle` recovers the same matrices by plain linear algebra.
"""

from dataclasses import dataclass, fields, replace
from typing import NamedTuple

import numpy as np

from .algebra import Jet, Mat2, Mat2Jet, jet_exp, locate, mat_inv, value
from .errors import DegeneratePoles, IllConditioned, OnPole, VanishingDenominator
from .laxpair import seed_eigenfunction

#: Relative pole-proximity guard for :func:`bt_matrix`.
POLE_GUARD = 1e-10
#: Relative threshold below which ``a Phi^22 - b Phi^21`` counts as zero.
DENOMINATOR_TOL = 1e-12
#: Default cap on the number of chained dressing steps.
MAX_DEPTH = 8


@dataclass(frozen=True)
class StepParams:
    """Spectral and gauge data of one dressing step.

    ``f11 .. f22`` are the amplitudes of ``f_l^{ij}(t)``; with nonzero
    ``nu11 .. nu22`` they become ``f * exp(nu * t)``.
    """

    lambda_l: complex
    lambda_lp: complex
    a_l: complex = 1.0
    b_l: complex = 0.0
    f11: complex = 1.0
    f12: complex = 0.0
    f21: complex = 0.0
    f22: complex = 1.0
    m1: complex = 0.0
    m1p: complex = 0.0
    m2: complex = 0.0
    m2p: complex = 0.0
    nu11: complex = 0.0
    nu12: complex = 0.0
    nu21: complex = 0.0
    nu22: complex = 0.0

    def __post_init__(self):
        for f in fields(self):
            v = complex(getattr(self, f.name))
            if not np.isfinite(v):
                raise ValueError(f"step parameter {f.name} is not finite")
            object.__setattr__(self, f.name, v)
        lam, lamp = self.lambda_l, self.lambda_lp
        if lam == 0 or lamp == 0:
            raise DegeneratePoles("lambda_l and lambda_lp must be nonzero")
        if abs(lam * lam - lamp * lamp) <= 1e-14 * abs(lam * lam):
            raise DegeneratePoles("lambda_l^2 == lambda_lp^2")
        if self.a_l == 0 and self.b_l == 0:
            raise ValueError("(a_l, b_l) must not both vanish")

    @property
    def is_reduced(self):
        return self.b_l == 0 and self.f12 == 0 and self.f21 == 0

    def with_(self, **changes):
        return replace(self, **changes)


def sigma(step):
    """``2 lam'^2 / (lam (lam'^2 - lam^2))``, equal to ``2/lam - 2 lam/(lam^2 - lam'^2)``."""
    lam, lamp = complex(step.lambda_l), complex(step.lambda_lp)
    d = lamp * lamp - lam * lam
    if d == 0 or lam == 0:
        raise DegeneratePoles("sigma undefined for lambda_l^2 == lambda_lp^2")
    return 2 * lamp * lamp / (lam * d)


def sigma_difference_form(step):
    """The other printed form of sigma, kept separate for the identity check."""
    lam, lamp = complex(step.lambda_l), complex(step.lambda_lp)
    d = lam * lam - lamp * lamp
    if d == 0 or lam == 0:
        raise DegeneratePoles("sigma undefined for lambda_l^2 == lambda_lp^2")
    return 2 / lam - 2 * lam / d


def epsilon_prime(step):
    lam, lamp = complex(step.lambda_l), complex(step.lambda_lp)
    d = lam * lam - lamp * lamp
    if d == 0:
        raise DegeneratePoles("epsilon' undefined for lambda_l^2 == lambda_lp^2")
    return 2 * lamp / d


def pole_weight(lam_pole, lam):
    """``2 lam_pole / (lam^2 - lam_pole^2)``; depends on ``lam`` only through ``lam^2``."""
    lam2 = lam * lam
    p2 = lam_pole * lam_pole
    d = lam2 - p2
    if abs(d) < POLE_GUARD * abs(p2):
        raise OnPole(f"lambda={lam} is on the pole +-{lam_pole}")
    return 2 * lam_pole / d


class Coefficients(NamedTuple):
    """Jets of the coefficient functions of one step at a set of points."""

    R: Jet
    Rp: Jet
    M: Jet
    Mp: Jet
    L: Jet
    Lp: Jet
    N: Jet
    Np: Jet
    F: Jet
    Fp: Jet
    block: Mat2Jet


def fblock(step, x, y, t):
    """The matrix of ``f^{ij}(t) exp{i m (x-y)}`` with x/y jets.

    Exponent constants: ``m1`` (11), ``m1p`` (12), ``m2`` (21), ``m2p`` (22).
    """
    def ent(f, nu, m):
        w = jet_exp(Jet(1j * m * (x - y) + nu * t, 1j * m, -1j * m))
        return w * f

    return Mat2Jet(
        ent(step.f11, step.nu11, step.m1),
        ent(step.f12, step.nu12, step.m1p),
        ent(step.f21, step.nu21, step.m2),
        ent(step.f22, step.nu22, step.m2p),
    )


def coefficients(step, x, y, t):
    a, b = step.a_l, step.b_l
    l2, lp2 = step.lambda_l ** 2, step.lambda_lp ** 2
    blk = fblock(step, x, y, t)
    F11, F12, F21, F22 = blk.entries()
    return Coefficients(
        R=F11 * (-b),
        Rp=(F11 * (l2 * a) + F12 * ((l2 - lp2) * b)) / lp2,
        M=(F11 * (-(l2 - lp2) * a) - F12 * (l2 * b)) / lp2,
        Mp=F12 * a,
        L=F21 * (-b),
        Lp=(F21 * (l2 * a) + F22 * ((l2 - lp2) * b)) / lp2,
        N=(F21 * (-(l2 - lp2) * a) - F22 * (l2 * b)) / lp2,
        Np=F22 * a,
        F=F11 * a + F12 * b,
        Fp=F21 * a + F22 * b,
        block=blk,
    )


class QP(NamedTuple):
    Q: Mat2
    P: Mat2


def pole_denominator(step, phi_pole):
    return phi_pole.m22 * step.a_l - phi_pole.m21 * step.b_l


def build_QP(step, phi_pole, x, y, t, coeffs=None):
    """Closed-form ``Q_l``, ``P_l`` from ``Phi_{l-1}(lam_l)`` (a Mat2Jet).

    Raises :class:`VanishingDenominator` where ``a Phi^22 - b Phi^21`` is zero
    relative to its terms, reporting the first offending ``(x, y)``.
    """
    c = coeffs if coeffs is not None else coefficients(step, x, y, t)
    p21, p22 = phi_pole.m21, phi_pole.m22
    D = pole_denominator(step, phi_pole)
    scale = np.abs(step.a_l) * np.abs(value(p22)) + np.abs(step.b_l) * np.abs(value(p21))
    bad = np.abs(value(D)) <= DENOMINATOR_TOL * scale
    if np.any(bad):
        raise VanishingDenominator("a_l Phi^22 - b_l Phi^21 vanishes", locate(bad, x, y))
    inv_D = 1.0 / D
    s = sigma(step)
    Q = Mat2Jet(
        (c.R * p21 + c.Rp * p22) * inv_D,
        (c.M * p21 + c.Mp * p22) * inv_D,
        (c.L * p21 + c.Lp * p22) * inv_D,
        (c.N * p21 + c.Np * p22) * inv_D,
    )
    g = inv_D * (1.0 / s)
    P = Mat2Jet(
        -c.F * p22 * g,
        c.F * p21 * g,
        -c.Fp * p22 * g,
        c.Fp * p21 * g,
    )
    return QP(Q, P)


def bt_matrix(qp, lambda_l, lam):
    """``Q + 2 lam_l/(lam^2 - lam_l^2) P``."""
    return qp.Q + qp.P * pole_weight(complex(lambda_l), complex(lam))


def reduced_bt_matrix(step, theta_prev, x, y, t, lam):
    """Upper-triangular dressing matrix of the reduced case, transcribed
    directly (``b_l = 0``, ``f12 = f21 = 0``).

    ``theta_prev`` is ``Phi_{l-1}^21(lam_l) / Phi_{l-1}^22(lam_l)``. The
    (2,2) exponential uses ``m2p``, the constant of the 22 entry of the F-block.
    """
    lam2, l2, lp2 = complex(lam) ** 2, step.lambda_l ** 2, step.lambda_lp ** 2
    e1 = step.f11 * np.exp(1j * step.m1 * (x - y) + step.nu11 * t)
    e2 = step.f22 * np.exp(1j * step.m2p * (x - y) + step.nu22 * t)
    return Mat2(
        (l2 / lp2) * (1 - (lp2 - l2) / (lam2 - l2)) * e1,
        (1 + l2 / (lam2 - l2)) * (1 - l2 / lp2) * e1 * theta_prev,
        0 * e1,
        e2,
    )


class InverseStep(NamedTuple):
    """``B^-1(lam) = Qp + 2 lam'/(lam^2 - lam'^2) Pp``."""

    Qp: Mat2
    Pp: Mat2
    lambda_lp: complex


def invert_step(qp, step):
    """Closed-form inverse: ``Qp = Q^-1`` and the rank-1 residue ``Pp``.

    With ``B(lam) = F + c(lam) P`` one has ``det B = det F * lam_l^2
    (lam^2 - lam'^2) / (lam'^2 (lam^2 - lam_l^2))``, which puts the poles of
    ``B^-1`` at ``+-lam'``; ``Pp`` follows from ``adj B(lam')``.
    """
    Q, P = qp.Q.value(), qp.P.value()
    l, lp = step.lambda_l, step.lambda_lp
    F = Q - P * (2 / l)
    B_zero = F + P * sigma(step)
    Pp = B_zero.adj() * (lp * (lp * lp - l * l) / (2 * l * l) / F.det())
    return InverseStep(mat_inv(Q), Pp, lp)


def bt_inverse_matrix(inv, lam):
    return inv.Qp + inv.Pp * pole_weight(complex(inv.lambda_lp), complex(lam))


def quotient_phi11(step, coeffs, phi_pole, phi_lam, lam, denominator="consistent"):
    """Entry (1,1) of ``Phi_l(lam)`` transcribed as ``N_l / D_l``.

    ``denominator="printed"`` uses the transposed ordering ``a Phi^21 - b Phi^22``;
    ``"consistent"`` uses ``a Phi^22 - b Phi^21`` as in the Q/P block. The
    undefined factor multiplying ``F_l`` is ``2 lam_l / (sigma (lam^2 - lam_l^2))``.
    """
    c = coeffs
    p21, p22 = value(phi_pole.m21), value(phi_pole.m22)
    f = pole_weight(step.lambda_l, complex(lam)) / sigma(step)
    F = value(c.F)
    num = (value(c.R) * p21 * value(phi_lam.m11)
           + (value(c.Rp) - f * F) * p22 * value(phi_lam.m11)
           + (value(c.M) + f * F) * p21 * value(phi_lam.m21)
           + value(c.Mp) * p22 * value(phi_lam.m21))
    if denominator == "printed":
        den = step.a_l * p21 - step.b_l * p22
    elif denominator == "consistent":
        den = step.a_l * p22 - step.b_l * p21
    else:
        raise ValueError(f"unknown denominator variant {denominator!r}")
    return num / den


class OracleResult(NamedTuple):
    Q: Mat2
    P: Mat2
    Qp: Mat2
    Pp: Mat2
    cond: float


_ORACLE_LAMBDAS = (0.731 + 0.412j, 1.377 - 0.291j, -0.523 + 1.118j)


def _lstsq(A, rhs, what, max_cond):
    cond = np.linalg.cond(A)
    if not np.isfinite(cond) or cond > max_cond:
        raise IllConditioned(f"{what} system has condition number {cond:.3g}")
    sol, *_ = np.linalg.lstsq(A, rhs, rcond=None)
    return sol, cond


def solve_QP_oracle(step, phi_pole, block, lambdas=_ORACLE_LAMBDAS, max_cond=1e10):
    """Recover Q, P, Q', P' at one point by linear least squares.

    Unknowns ``vec(Q)``, ``vec(P)`` satisfy

    * ``Q - (2/lam_l) P = F``     (exponential part of Q is the F-block),
    * ``P (Phi^21, Phi^22)^T = 0`` (row factor of the rank-1 residue),
    * ``B(lam') (a_l, b_l)^T = 0`` (kernel of B at the zero of det B).

    Then ``vec(Q')``, ``vec(P')`` solve ``B(lam_k) B^-1(lam_k) = I`` at three
    sample values ``lam_k``. ``phi_pole`` and ``block`` are scalar Mat2s.
    """
    l, lp = complex(step.lambda_l), complex(step.lambda_lp)
    ph = phi_pole.value().as_array()
    Fm = block.value().as_array()
    u = np.array([step.a_l, step.b_l])
    w = ph[1, :]
    s_zero = pole_weight(l, lp)

    # x = [Q11, Q12, Q21, Q22, P11, P12, P21, P22]
    A = np.zeros((8, 8), dtype=complex)
    rhs = np.zeros(8, dtype=complex)
    for k in range(4):
        A[k, k], A[k, 4 + k] = 1.0, -2.0 / l
        rhs[k] = Fm.flat[k]
    for i in range(2):
        A[4 + i, 4 + 2 * i] = w[0]
        A[4 + i, 5 + 2 * i] = w[1]
        A[6 + i, 2 * i] = u[0]
        A[6 + i, 2 * i + 1] = u[1]
        A[6 + i, 4 + 2 * i] = s_zero * u[0]
        A[6 + i, 5 + 2 * i] = s_zero * u[1]
    sol, cond_qp = _lstsq(A, rhs, "Q/P", max_cond)
    Q = Mat2.from_array(sol[:4].reshape(2, 2))
    P = Mat2.from_array(sol[4:].reshape(2, 2))

    rows, rhs2 = [], []
    eye = np.eye(2)
    for lam in lambdas:
        B = (Q + P * pole_weight(l, complex(lam))).as_array()
        c = pole_weight(lp, complex(lam))
        # B @ (Qp + c Pp) = I, unknowns y = [vec(Qp), vec(Pp)]
        for i in range(2):
            for j in range(2):
                row = np.zeros(8, dtype=complex)
                for k in range(2):
                    row[2 * k + j] = B[i, k]
                    row[4 + 2 * k + j] = c * B[i, k]
                rows.append(row)
                rhs2.append(eye[i, j])
    sol2, cond_inv = _lstsq(np.array(rows), np.array(rhs2, dtype=complex),
                            "inverse", max_cond)
    Qp = Mat2.from_array(sol2[:4].reshape(2, 2))
    Pp = Mat2.from_array(sol2[4:].reshape(2, 2))
    return OracleResult(Q, P, Qp, Pp, float(max(cond_qp, cond_inv)))


class EigenEvaluator:
    """Eigenfunction ``Phi_n`` built by chaining dressing steps onto the seed.

    Immutable; every call to :meth:`evaluate` or :meth:`dressings` uses its
    own cache of ``Phi_k(lam)`` values, keyed by ``(k, lam)``.
    """

    def __init__(self, seed, steps=(), max_depth=MAX_DEPTH):
        steps = tuple(steps)
        if len(steps) > max_depth:
            raise ValueError(f"depth {len(steps)} exceeds cap {max_depth}")
        poles = [s.lambda_l ** 2 for s in steps]
        for i, p in enumerate(poles):
            for q in poles[:i]:
                if abs(p - q) <= 1e-12 * abs(p):
                    raise DegeneratePoles("dressing steps must have distinct lambda_l^2")
        self.seed = seed
        self.steps = steps
        self.max_depth = max_depth

    @property
    def depth(self):
        return len(self.steps)

    def truncated(self, n):
        return EigenEvaluator(self.seed, self.steps[:n], self.max_depth)

    def _phi(self, level, lam, pts, cache):
        key = ("phi", level, lam)
        if key not in cache:
            x, y, t = pts
            if level == 0:
                cache[key] = seed_eigenfunction(self.seed, lam, x, y, t)
            else:
                qp = self._qp(level, pts, cache)
                B = bt_matrix(qp, self.steps[level - 1].lambda_l, lam)
                cache[key] = B @ self._phi(level - 1, lam, pts, cache)
        return cache[key]

    def _qp(self, level, pts, cache):
        key = ("qp", level)
        if key not in cache:
            step = self.steps[level - 1]
            phi_pole = self._phi(level - 1, step.lambda_l, pts, cache)
            cache[key] = build_QP(step, phi_pole, *pts)
        return cache[key]

    def evaluate(self, x, y, t, lam):
        """``Phi_n(x, y, t, lam)`` as a Mat2Jet (arrays broadcast)."""
        return self._phi(self.depth, complex(lam), (x, y, t), {})

    def dressings(self, x, y, t):
        """List of ``QP`` (with jets) for steps ``1..n``."""
        cache = {}
        return [self._qp(k, (x, y, t), cache) for k in range(1, self.depth + 1)]

    def pole_values(self, x, y, t):
        """``Phi_{l-1}(lam_l)`` for every step, as Mat2Jets."""
        cache = {}
        return [self._phi(k - 1, self.steps[k - 1].lambda_l, (x, y, t), cache)
                for k in range(1, self.depth + 1)]


def apply_step(prev, step):
    """Evaluator for ``Phi_n = B_n Phi_{n-1}`` with one more dressing step."""
    return EigenEvaluator(prev.seed, prev.steps + (step,), prev.max_depth)
