"""Physical fields q_n, r_n, A1, A2 of the dressed solutions."""

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .algebra import locate, value
from .backlund import EigenEvaluator, MAX_DEPTH, StepParams
from .errors import QuadratureUnstable, VanishingDenominator
from .laxpair import SeedParams

THREADS_ENV = "DSBT_THREADS"
#: Step used for the x/y derivatives of q_n, r_n (fourth-order stencil).
FIELD_FD_STEP = 1e-3


def thread_count():
    """Worker count from ``DSBT_THREADS``; defaults to all available cores."""
    env = os.environ.get(THREADS_ENV)
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


@dataclass(frozen=True)
class GridSpec:
    x_min: float
    x_max: float
    nx: int
    y_min: float
    y_max: float
    ny: int
    t: float = 0.0

    def __post_init__(self):
        if self.nx < 4 or self.ny < 4:
            raise ValueError("grid needs at least 4 nodes per axis")
        if not (self.x_max > self.x_min and self.y_max > self.y_min):
            raise ValueError("grid bounds must be increasing")

    @property
    def x(self):
        return np.linspace(self.x_min, self.x_max, self.nx)

    @property
    def y(self):
        return np.linspace(self.y_min, self.y_max, self.ny)

    @property
    def hx(self):
        return (self.x_max - self.x_min) / (self.nx - 1)

    @property
    def hy(self):
        return (self.y_max - self.y_min) / (self.ny - 1)

    def mesh(self):
        """``X, Y`` of shape ``(ny, nx)``: y is the slow (row) index."""
        return np.meshgrid(self.x, self.y)

    def at_time(self, t):
        return GridSpec(self.x_min, self.x_max, self.nx, self.y_min, self.y_max, self.ny, t)

    def refined(self):
        """Same window with the spacing halved."""
        return GridSpec(self.x_min, self.x_max, 2 * self.nx - 1,
                        self.y_min, self.y_max, 2 * self.ny - 1, self.t)


@dataclass
class FieldGrid:
    """Sampled fields on ``spec``; arrays have shape ``(ny, nx)``."""

    spec: GridSpec
    q: np.ndarray
    r: np.ndarray
    A1: np.ndarray
    A2: np.ndarray
    n_steps: int
    q_x: Optional[np.ndarray] = None
    q_y: Optional[np.ndarray] = None
    r_x: Optional[np.ndarray] = None
    r_y: Optional[np.ndarray] = None


def _check_denominator(den, what, where):
    bad = np.abs(value(den)) == 0
    if np.any(bad):
        raise VanishingDenominator(f"{what} vanishes", locate(bad, *where) if where else None)


def next_q(Q, q_prev, where=None):
    """``q_n = -2 Q^12_x / Q^22 + (Q^11 / Q^22) q_{n-1}``."""
    _check_denominator(Q.m22, "Q^22", where)
    return (-2 * Q.m12.dx + value(Q.m11) * q_prev) / value(Q.m22)


def next_r(Q, r_prev, where=None):
    """``r_n = -2 Q^21_y / Q^11 + (Q^22 / Q^11) r_{n-1}``."""
    _check_denominator(Q.m11, "Q^11", where)
    return (-2 * Q.m21.dy + value(Q.m22) * r_prev) / value(Q.m11)


def field_values(evaluator, x, y, t):
    """``(q_n, r_n)`` at the given points by running the recursion."""
    seed = evaluator.seed
    shape = np.broadcast(x, y, t).shape
    q = np.full(shape, seed.q0, dtype=complex)
    r = np.full(shape, seed.r0, dtype=complex)
    for Q, _ in evaluator.dressings(x, y, t):
        q, r = next_q(Q, q, (x, y)), next_r(Q, r, (x, y))
    return q, r


def field_derivatives(evaluator, x, y, t, h=FIELD_FD_STEP):
    """``q, r`` and their x/y derivatives (fourth-order central differences)."""
    q, r = field_values(evaluator, x, y, t)
    out = {"q": q, "r": r}
    for axis in ("x", "y"):
        def at(k):
            if axis == "x":
                return field_values(evaluator, x + k * h, y, t)
            return field_values(evaluator, x, y + k * h, t)
        (qm2, rm2), (qm1, rm1), (qp1, rp1), (qp2, rp2) = at(-2), at(-1), at(1), at(2)
        out["q_" + axis] = (qm2 - 8 * qm1 + 8 * qp1 - qp2) / (12 * h)
        out["r_" + axis] = (rm2 - 8 * rm1 + 8 * rp1 - rp2) / (12 * h)
    return out


def reconstruct_potentials(q, r, q_x, q_y, r_x, r_y, spec, A10, A20):
    """Integrate ``A1_x = -(q_y r + r_y q)/2`` along x from ``x_min`` and
    ``A2_y = -(q_x r + r_x q)/2`` along y from ``y_min`` (trapezoid rule)."""
    A1x = -0.5 * (q_y * r + r_y * q)
    A2y = -0.5 * (q_x * r + r_x * q)
    A1 = A10 + cumulative_trapezoid(A1x, dx=spec.hx, axis=1, initial=0)
    A2 = A20 + cumulative_trapezoid(A2y, dx=spec.hy, axis=0, initial=0)
    if not (np.all(np.isfinite(A1)) and np.all(np.isfinite(A2))):
        raise QuadratureUnstable("potential quadrature produced non-finite values")
    return A1, A2


def _row_chunks(n, k):
    bounds = np.linspace(0, n, min(n, k) + 1).astype(int)
    return [slice(a, b) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


def chain_fields(seed, steps, spec, threads=None, h=FIELD_FD_STEP):
    """Evaluate ``q_n, r_n`` on the grid and reconstruct ``A1, A2``.

    Rows of the grid are split among ``threads`` workers; the result does
    not depend on the split.
    """
    evaluator = seed if isinstance(seed, EigenEvaluator) else EigenEvaluator(seed, steps)
    X, Y = spec.mesh()
    if evaluator.depth == 0:
        s = evaluator.seed
        const = lambda v: np.full(X.shape, v, dtype=complex)
        zero = const(0j)
        return FieldGrid(spec, const(s.q0), const(s.r0), const(s.A10), const(s.A20), 0,
                         zero, zero.copy(), zero.copy(), zero.copy())

    chunks = _row_chunks(spec.ny, threads or thread_count())

    def work(sl):
        return field_derivatives(evaluator, X[sl], Y[sl], spec.t, h)

    if len(chunks) == 1:
        parts = [work(chunks[0])]
    else:
        with ThreadPoolExecutor(len(chunks)) as pool:
            parts = list(pool.map(work, chunks))
    d = {k: np.concatenate([p[k] for p in parts], axis=0) for k in parts[0]}
    s = evaluator.seed
    A1, A2 = reconstruct_potentials(d["q"], d["r"], d["q_x"], d["q_y"], d["r_x"], d["r_y"],
                                    spec, s.A10, s.A20)
    return FieldGrid(spec, d["q"], d["r"], A1, A2, evaluator.depth,
                     d["q_x"], d["q_y"], d["r_x"], d["r_y"])


def fields_at(seed, steps, spec, **kw):
    """``t -> FieldGrid`` closure for residual checks that need time shifts."""
    evaluator = EigenEvaluator(seed, steps)
    return lambda t: chain_fields(evaluator, (), spec.at_time(t), **kw)


@dataclass(frozen=True)
class CompactParams:
    """Data of the closed product formula for q_n (reduced case only).

    ``mbar0 = a (m0 - n0)``, ``mbar0p = b (1/m0 - 1/n0)``; ``delta`` is the
    time rate of ``Phi^21/Phi^22`` on the seed.
    """

    steps: tuple
    q0: complex
    m0: complex
    n0: complex
    mbar0: complex
    mbar0p: complex
    delta: complex

    @classmethod
    def from_chain(cls, seed, steps, delta=None):
        steps = tuple(steps)
        for i, s in enumerate(steps):
            if not s.is_reduced:
                raise ValueError(f"step {i} is not reduced (need b_l = 0, f12 = f21 = 0)")
        if len(steps) > MAX_DEPTH:
            raise ValueError(f"depth {len(steps)} exceeds cap {MAX_DEPTH}")
        if delta is None:
            delta = fit_delta(seed)
        return cls(steps, seed.q0, seed.m0, seed.n0, seed.a * (seed.m0 - seed.n0),
                   seed.b * (1 / seed.m0 - 1 / seed.n0), complex(delta))


def fit_delta(seed, t0=0.0, dt=1e-2):
    """Time rate of ``Phi^21/Phi^22`` fitted from two samples of the seed."""
    from .laxpair import seed_eigenfunction

    def ratio(t):
        phi = seed_eigenfunction(seed, 1.0, 0.0, 0.0, t)
        return phi.m21.val / phi.m22.val

    return complex(np.log(ratio(t0 + dt) / ratio(t0)) / dt)


def compact_q(cp, n, x, y, t, denominator="primed", mbar_sign=1, include_q0=True):
    """Closed product form of ``q_n``.

    ``denominator="primed"`` uses ``m2p`` (the 22 exponent) in every
    ``Q^22`` product; ``"printed"`` uses ``m2p`` in the leading term and
    ``m2`` in the remaining ones. ``mbar_n = mbar0 + mbar_sign * i m1_n`` is
    the x-rate of ``Q_n^12``. ``include_q0`` multiplies the last term by q0.
    """
    if not 1 <= n <= len(cp.steps):
        raise ValueError(f"n must be in 1..{len(cp.steps)}")
    if denominator not in ("primed", "printed"):
        raise ValueError(f"unknown denominator reading {denominator!r}")
    st = cp.steps
    xy = x - y

    def f11(l):
        s = st[l - 1]
        return s.f11 * np.exp(s.nu11 * t)

    def f22(l):
        s = st[l - 1]
        return s.f22 * np.exp(s.nu22 * t)

    def m2(l, lead):
        s = st[l - 1]
        return s.m2p if (denominator == "primed" or lead) else s.m2

    def A(k):
        return math.prod([st[n - l].lambda_l ** 2 / st[n - l].lambda_lp ** 2
                        for l in range(1, k + 1)])

    def Fp(k):
        return math.prod([f11(n - l + 1) for l in range(1, k + 1)])

    def Gp(k):
        return math.prod([f22(n - l + 1) for l in range(1, k + 1)])

    def e1(k):
        return np.exp(1j * sum(st[n - j].m1 for j in range(1, k + 1)) * xy)

    def e2(k, lead=False):
        return np.exp(1j * sum(m2(n - j + 1, lead) for j in range(1, k + 1)) * xy)

    def Q12(l):
        s = st[l - 1]
        T = (cp.m0 / cp.n0) * (1 - s.lambda_l ** 2 / s.lambda_lp ** 2)
        mbarp = -1j * s.m1 + cp.mbar0p
        return T * f11(l) * np.exp(1j * s.m1 * x) * np.exp(cp.mbar0 * x + mbarp * y + cp.delta * t)

    def mbar(l):
        return mbar_sign * 1j * st[l - 1].m1 + cp.mbar0

    q = -2 * mbar(n) * Q12(n) / (Gp(1) * e2(1, lead=True))
    q = q + A(n) * Fp(n) * e1(n) / (Gp(n) * e2(n)) * (cp.q0 if include_q0 else 1.0)
    for K in range(1, n):
        q = q - 2 * A(K) * Fp(K) * e1(K) / (Gp(K + 1) * e2(K + 1)) * mbar(n - K) * Q12(n - K)
    return q
