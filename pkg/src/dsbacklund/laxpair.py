"""Lax data (M, U, V) of the Davey-Stewartson system and the seed eigenfunction.

Spatial problem ``M Phi = U Phi`` with ``M = diag(d/dx, d/dy)`` acting row-wise,
time problem ``Phi_t = V Phi`` where ``V`` contains the second-order operator
``i(dxx + dyy) - 2[(alpha + lam^-2) dx - (beta - lam^-2) dy]``.
"""

from dataclasses import dataclass, fields, replace
from typing import NamedTuple

import numpy as np

from .algebra import Jet, Mat2, Mat2Jet, jet_exp
from .errors import DegenerateSeed, StencilTooSmall, ZeroLambda


def _inv_lam2(lam):
    lam = complex(lam)
    if lam == 0:
        raise ZeroLambda("spectral parameter must be nonzero")
    return 1.0 / (lam * lam)


@dataclass(frozen=True)
class SeedParams:
    """Constants of the trivial background and of its Jost solution."""

    q0: complex
    r0: complex
    m0: complex
    n0: complex
    a: complex
    b: complex
    alpha: complex = 0j
    beta: complex = 0j
    K: complex = 0j
    xi1: complex = 0j
    xi2: complex = 0j
    A10: complex = 0j
    A20: complex = 0j

    def __post_init__(self):
        for f in fields(self):
            v = complex(getattr(self, f.name))
            if not np.isfinite(v):
                raise ValueError(f"seed parameter {f.name} is not finite")
            object.__setattr__(self, f.name, v)

    def is_consistent(self, tol=1e-12):
        """True when the constants satisfy both Lax equations on the background."""
        ref = consistent_seed(self.q0, self.r0, self.m0, self.n0, self.alpha,
                              self.beta, self.K, self.A10)
        scale = 1.0 + max(abs(self.q0), abs(self.r0), abs(ref.xi1), abs(ref.xi2))
        return all(abs(getattr(self, k) - getattr(ref, k)) <= tol * scale
                   for k in ("a", "b", "xi1", "xi2", "A20"))

    def with_(self, **changes):
        return replace(self, **changes)


def seed_dispersion(a, b, m, K, A0):
    """Time exponent of a seed column with mixing constant ``m``.

    Substituting the exponential column into the time problem gives
    ``xi = i Lambda + i(theta^2 + chi^2) - 2[(alpha+lam^-2) theta - (beta-lam^-2) chi] + i A0``;
    the lam-, alpha- and beta-dependence cancels identically, leaving this form.
    """
    return 1j * (K * K + A0 + a * a * m * m + b * b / (m * m))


def consistent_seed(q0, r0, m0, n0, alpha=0j, beta=0j, K=0j, A0=0j):
    """SeedParams with ``a = -q0/2``, ``b = -r0/2``, ``A10 = A20 = A0`` and
    ``xi1``, ``xi2`` fixed by the dispersion relation."""
    m0, n0 = complex(m0), complex(n0)
    _check_mixing(m0, n0)
    a, b = -complex(q0) / 2, -complex(r0) / 2
    return SeedParams(
        q0=q0, r0=r0, m0=m0, n0=n0, a=a, b=b, alpha=alpha, beta=beta, K=K,
        xi1=seed_dispersion(a, b, m0, K, A0),
        xi2=seed_dispersion(a, b, n0, K, A0),
        A10=A0, A20=A0,
    )


def _check_mixing(m0, n0):
    if m0 == 0 or n0 == 0:
        raise DegenerateSeed("mixing constants m0, n0 must be nonzero")
    if m0 == n0:
        raise DegenerateSeed("m0 == n0 makes the seed eigenfunction singular")


def build_U(q, r, alpha, beta, lam):
    """Spatial Lax matrix ``[[-i(alpha+lam^-2), -q/2], [-r/2, i(beta-lam^-2)]]``."""
    il2 = _inv_lam2(lam)
    return Mat2(-1j * (alpha + il2), -q / 2, -r / 2, 1j * (beta - il2))


def big_lambda(alpha, beta, K, lam):
    il2 = _inv_lam2(lam)
    return K * K - (alpha + il2) ** 2 - (beta - il2) ** 2


def gauge_factor(alpha, beta, lam, x, y):
    """Scalar ``Psi/Phi = exp{i(alpha+lam^-2)x - i(beta-lam^-2)y}``."""
    il2 = _inv_lam2(lam)
    return np.exp(1j * (alpha + il2) * x - 1j * (beta - il2) * y)


def seed_exponents(p, lam):
    """``(theta1, theta2, chi1, chi2)`` of the seed eigenfunction."""
    il2 = _inv_lam2(lam)
    k1, k2 = p.alpha + il2, p.beta - il2
    return (
        -1j * k1 + p.a * p.m0,
        -1j * k1 + p.a * p.n0,
        p.b / p.m0 + 1j * k2,
        p.b / p.n0 + 1j * k2,
    )


def seed_eigenfunction(p, lam, x, y, t):
    """Seed eigenfunction with exact x/y jets.

    Columns are ``(1, m0)^T exp(theta1 x + chi1 y + xi1 t)`` and
    ``(1, n0)^T exp(theta2 x + chi2 y + xi2 t)``; ``x``, ``y``, ``t`` may be
    arrays.
    """
    _check_mixing(p.m0, p.n0)
    th1, th2, ch1, ch2 = seed_exponents(p, lam)
    e1 = jet_exp(Jet(th1 * x + ch1 * y + p.xi1 * t, th1, ch1))
    e2 = jet_exp(Jet(th2 * x + ch2 * y + p.xi2 * t, th2, ch2))
    return Mat2Jet(e1, e2, e1 * p.m0, e2 * p.n0)


def apply_M(phi):
    """``M Phi``: x-derivative of the first row, y-derivative of the second."""
    return Mat2(phi.m11.dx, phi.m12.dx, phi.m21.dy, phi.m22.dy)


def spatial_lax_residual(phi, U):
    """Pointwise Frobenius norm of ``M Phi - U Phi``."""
    return (apply_M(phi) - U @ phi.value()).frob()


class LocalFields(NamedTuple):
    """Field data entering V at one point (or a grid of points)."""

    q_x: complex
    r_y: complex
    A1: complex
    A2: complex


def default_steps(x):
    h = 1e-3 * (1.0 + np.abs(x))
    return h, h, 1e-3


_OFFSETS = (-1.0, 0.0, 1.0)


def sample_stencil(fn, x, y, t, hx, hy, ht):
    """Evaluate ``fn(x, y, t) -> Mat2`` on the 3x3x3 stencil around each point.

    Returns a complex array of shape ``(3, 3, 3, *point_shape, 2, 2)`` indexed
    ``[ix, iy, it]``; ``x``, ``y`` (and the steps) may be arrays.
    """
    return np.stack([
        np.stack([
            np.stack([fn(x + i * hx, y + j * hy, t + k * ht).as_array() for k in _OFFSETS])
            for j in _OFFSETS])
        for i in _OFFSETS])


def time_lax_residual(phi_samples, hx, hy, ht, local, p, lam):
    """Frobenius norm of ``Phi_t - V Phi`` at the stencil centre.

    ``phi_samples`` has shape ``(nx, ny, nt, *point_shape, 2, 2)`` with odd
    stencil sizes of at least 3; derivatives are second-order central
    differences. Returns a float, or an array over the point dimensions.
    """
    s = np.asarray(phi_samples)
    if s.ndim < 5 or any(n < 3 or n % 2 == 0 for n in s.shape[:3]):
        raise StencilTooSmall(f"need an odd stencil of at least 3x3x3, got {s.shape[:3]}")
    cx, cy, ct = (n // 2 for n in s.shape[:3])
    hx = np.asarray(hx)[..., None, None]
    hy = np.asarray(hy)[..., None, None]
    f0 = s[cx, cy, ct]
    fx = (s[cx + 1, cy, ct] - s[cx - 1, cy, ct]) / (2 * hx)
    fy = (s[cx, cy + 1, ct] - s[cx, cy - 1, ct]) / (2 * hy)
    fxx = (s[cx + 1, cy, ct] - 2 * f0 + s[cx - 1, cy, ct]) / hx**2
    fyy = (s[cx, cy + 1, ct] - 2 * f0 + s[cx, cy - 1, ct]) / hy**2
    ft = (s[cx, cy, ct + 1] - s[cx, cy, ct - 1]) / (2 * ht)

    il2 = _inv_lam2(lam)
    k1, k2 = p.alpha + il2, p.beta - il2
    lam_big = big_lambda(p.alpha, p.beta, p.K, lam)
    vphi = 1j * (fxx + fyy) - 2 * (k1 * fx - k2 * fy) + 1j * lam_big * f0
    col = lambda v: np.asarray(v)[..., None]
    vphi[..., 0, :] += 1j * col(local.A1) * f0[..., 0, :] + 1j * col(local.q_x) * f0[..., 1, :]
    vphi[..., 1, :] += 1j * col(local.A2) * f0[..., 1, :] + 1j * col(local.r_y) * f0[..., 0, :]
    res = np.sqrt(np.sum(np.abs(ft - vphi) ** 2, axis=(-2, -1)))
    return float(res) if res.ndim == 0 else res


def seed_time_residual(p, lam, x, y, t, steps=None):
    """Time-Lax residual of the seed eigenfunction at one point (or array)."""
    hx, hy, ht = steps or default_steps(x)
    samples = sample_stencil(lambda X, Y, T: seed_eigenfunction(p, lam, X, Y, T),
                             x, y, t, hx, hy, ht)
    return time_lax_residual(samples, hx, hy, ht,
                             LocalFields(0j, 0j, p.A10, p.A20), p, lam)
