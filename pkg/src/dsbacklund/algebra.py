"""Complex 2x2 matrices with first-order (d/dx, d/dy) jets.

Every entry may be a Python complex or a numpy array; arrays broadcast, so a
whole grid of points is carried through the algebra at once.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ExponentOverflow, SingularMatrix

#: Largest admissible real part of an exponent passed to :func:`jet_exp`.
EXPONENT_CAP = 200.0
#: Relative determinant threshold used by :func:`mat_inv`.
SINGULAR_TOL = 1e-12


def locate(mask, *coords):
    """Return the coordinates of the first True entry of ``mask``.

    ``coords`` are arrays (or scalars) broadcastable against ``mask``.
    """
    mask, *coords = np.broadcast_arrays(np.asarray(mask), *coords)
    idx = np.unravel_index(int(np.argmax(mask)), mask.shape)
    if not coords:
        return idx
    return tuple(float(np.real(c[idx])) for c in coords)


class Jet:
    """A value together with its exact x- and y-derivatives."""

    __slots__ = ("val", "dx", "dy")
    __array_ufunc__ = None

    def __init__(self, val, dx=0.0, dy=0.0):
        self.val = val
        self.dx = dx
        self.dy = dy

    @classmethod
    def const(cls, val):
        return cls(val, 0.0 * val, 0.0 * val)

    def __repr__(self):
        return f"Jet(val={self.val!r}, dx={self.dx!r}, dy={self.dy!r})"

    def __add__(self, other):
        if isinstance(other, Jet):
            return Jet(self.val + other.val, self.dx + other.dx, self.dy + other.dy)
        return Jet(self.val + other, self.dx, self.dy)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.val, -self.dx, -self.dy)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Jet):
            return Jet(
                self.val * other.val,
                self.dx * other.val + self.val * other.dx,
                self.dy * other.val + self.val * other.dy,
            )
        return Jet(self.val * other, self.dx * other, self.dy * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            inv = 1.0 / other.val
            v = self.val * inv
            return Jet(v, (self.dx - v * other.dx) * inv, (self.dy - v * other.dy) * inv)
        return Jet(self.val / other, self.dx / other, self.dy / other)

    def __rtruediv__(self, other):
        inv = 1.0 / self.val
        v = other * inv
        return Jet(v, -v * self.dx * inv, -v * self.dy * inv)


def value(z):
    """Strip the jet from ``z`` (no-op for plain numbers and arrays)."""
    return z.val if isinstance(z, Jet) else z


def jet_exp(z, cap=EXPONENT_CAP):
    """Exponential of a jet; refuses exponents whose real part exceeds ``cap``."""
    zv = value(z)
    re = np.real(zv)
    if np.any(re > cap):
        raise ExponentOverflow(f"exponent real part {np.max(re):.3g} exceeds cap {cap}")
    e = np.exp(zv)
    if not isinstance(z, Jet):
        return Jet(e, 0.0 * e, 0.0 * e)
    return Jet(e, e * z.dx, e * z.dy)


@dataclass(frozen=True, eq=False)
class Mat2:
    """2x2 matrix ``[[m11, m12], [m21, m22]]`` over any ring (complex, array, Jet)."""

    m11: object
    m12: object
    m21: object
    m22: object

    @classmethod
    def identity(cls):
        return cls(1.0 + 0j, 0j, 0j, 1.0 + 0j)

    @classmethod
    def from_array(cls, a):
        a = np.asarray(a, dtype=complex)
        return cls(a[0, 0], a[0, 1], a[1, 0], a[1, 1])

    def entries(self):
        return (self.m11, self.m12, self.m21, self.m22)

    def map(self, fn):
        return type(self)(*(fn(e) for e in self.entries()))

    def __add__(self, other):
        return type(self)(*(a + b for a, b in zip(self.entries(), other.entries())))

    def __sub__(self, other):
        return type(self)(*(a - b for a, b in zip(self.entries(), other.entries())))

    def __neg__(self):
        return self.map(lambda e: -e)

    def __mul__(self, s):
        """Multiplication by a scalar (or scalar jet / array)."""
        return type(self)(*(e * s for e in self.entries()))

    __rmul__ = __mul__

    def __matmul__(self, other):
        return mat_mul(self, other)

    def det(self):
        return self.m11 * self.m22 - self.m12 * self.m21

    def adj(self):
        return type(self)(self.m22, -self.m12, -self.m21, self.m11)

    def trace(self):
        return self.m11 + self.m22

    def value(self):
        return Mat2(*(value(e) for e in self.entries()))

    def frob(self):
        """Pointwise Frobenius norm of the value part."""
        return np.sqrt(sum(np.abs(value(e)) ** 2 for e in self.entries()))

    def as_array(self):
        """Value part as an array of shape ``(..., 2, 2)``."""
        ents = np.broadcast_arrays(*(np.asarray(value(e), dtype=complex)
                                     for e in self.entries()))
        return np.stack(ents, axis=-1).reshape(ents[0].shape + (2, 2))


class Mat2Jet(Mat2):
    """Mat2 whose entries are :class:`Jet` objects."""

    @classmethod
    def from_mat2(cls, m):
        return cls(*(e if isinstance(e, Jet) else Jet.const(e) for e in m.entries()))

    @property
    def dx(self):
        return Mat2(*(e.dx for e in self.entries()))

    @property
    def dy(self):
        return Mat2(*(e.dy for e in self.entries()))


def _result_type(a, b):
    return Mat2Jet if isinstance(a, Mat2Jet) or isinstance(b, Mat2Jet) else Mat2


def mat_mul(a, b):
    """Matrix product; jets follow the product rule entrywise."""
    return _result_type(a, b)(
        a.m11 * b.m11 + a.m12 * b.m21,
        a.m11 * b.m12 + a.m12 * b.m22,
        a.m21 * b.m11 + a.m22 * b.m21,
        a.m21 * b.m12 + a.m22 * b.m22,
    )


def is_singular(m, tol=SINGULAR_TOL):
    """Pointwise test ``|det| <= tol * max(1, ||m||^2)``."""
    d = np.abs(value(m.det()))
    return d <= tol * np.maximum(1.0, m.frob() ** 2)


def mat_inv(m, tol=SINGULAR_TOL, where=None):
    """Adjugate-over-determinant inverse.

    Raises :class:`SingularMatrix` if any point is singular to within the
    scale-aware tolerance. ``where`` optionally supplies coordinate arrays
    used to report the first offending point.
    """
    bad = is_singular(m, tol)
    if np.any(bad):
        loc = locate(bad, *where) if where else None
        raise SingularMatrix("matrix is singular", loc)
    return m.adj() * (1.0 / m.det())
