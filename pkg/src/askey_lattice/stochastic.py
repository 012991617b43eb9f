"""Birth-and-death generator, its exact kernel and the fermion-walk analogues.

The generator is similar to ``-H``: ``L = -Phi0 H Phi0^{-1}`` with
``Phi0 = diag(phi_0)``, so its kernel follows from the closed-form
eigensystem. :func:`expm` is the independent check.
"""
from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import families as fam
from .errors import ConfigError, InvalidDistribution
from .families import FamilyInstance
from .fermion import ExcitationSet
from .spectral import analytic_eigensystem

NEG_TOL = 1e-12
SUM_TOL = 1e-10


@dataclass(frozen=True)
class BDGenerator:
    """Tridiagonal rate matrix; column ``y`` holds the rates out of ``y``."""

    matrix: np.ndarray

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    def column_sums(self) -> np.ndarray:
        """Off-diagonal rates summed first, then the diagonal added."""
        L = self.matrix
        n = self.size
        off = np.zeros(n)
        off[1:] += np.diag(L, 1)  # death: y -> y-1
        off[:-1] += np.diag(L, -1)  # birth: y -> y+1
        return off + np.diag(L)


def bd_generator(inst: FamilyInstance) -> BDGenerator:
    """``L[x+1, x] = B(x)``, ``L[x-1, x] = D(x)``, ``L[x, x] = -(B(x) + D(x))``.

    On a truncated lattice the birth rate out of the last site is kept on the
    diagonal, so the last column sum is ``-B(M)`` (the truncation leak).
    """
    xs = fam.sites(inst)
    B = np.array([fam.coeff_B(inst, x) for x in xs])
    D = np.array([fam.coeff_D(inst, x) for x in xs])
    n = inst.size
    L = np.zeros((n, n))
    idx = np.arange(n - 1)
    L[idx + 1, idx] = B[:-1]
    L[idx, idx + 1] = D[1:]
    # same summation order as column_sums so finite lattices sum to 0 exactly
    off = np.zeros(n)
    off[1:] += D[1:]
    off[:-1] += B[:-1]
    if not inst.finite:
        off[-1] += B[-1]
    L[np.arange(n), np.arange(n)] = -off
    return BDGenerator(L)


@dataclass(frozen=True)
class TransitionKernel:
    """``P[x, y] = P(x, y; t)``: probability of ``x`` at ``t`` starting from ``y``."""

    matrix: np.ndarray
    t: float

    def column_sums(self) -> np.ndarray:
        return self.matrix.sum(axis=0)

    def column_sum_defect(self) -> float:
        """``max_y |sum_x P(x, y) - 1|``; nonzero on a truncated lattice."""
        return float(np.abs(self.column_sums() - 1.0).max())

    def column(self, y: int) -> np.ndarray:
        return self.matrix[:, y]


# double evaluation is kept while max phi_0(x)/phi_0(y) times the lattice
# size stays below this; beyond it the mode sum is done in extended precision
GRADING_LIMIT = 1e-12 / np.finfo(float).eps


def _spectral_columns(inst: FamilyInstance, t: float, ys: Sequence[int]) -> np.ndarray:
    """Columns ``ys`` of the kernel; graded finite lattices go through mpmath."""
    logw = np.array([fam.log_weight(inst, x).log for x in fam.sites(inst)])
    spread = 0.5 * (logw.max() - logw.min())
    if inst.finite and spread + math.log(inst.size) > math.log(GRADING_LIMIT):
        return _extended_columns(inst, t, ys)
    es = analytic_eigensystem(inst)
    V = es.vectors
    ys = list(ys)
    S = (V * np.exp(-es.energies * t)) @ V[ys].T
    return S * V[:, :1] / V[ys, 0][None, :]


_local = threading.local()


def _extended_modes(inst: FamilyInstance, prec: int):
    """``(ctx, P[k][x], w[x], h[k], E[k], lost bits)`` at ``prec``, cached per thread."""
    cache = getattr(_local, "modes", None)
    if cache is None:
        cache = _local.modes = {}
    key = (inst, prec)
    if key in cache:
        return cache[key]
    data, ns = inst.data, inst.p
    n = inst.size
    ctx = fam._mp_context(prec)
    mp_ns = fam._mp_namespace(ns, ctx)
    lost = 0.0
    P = []
    for k in range(n):
        row = []
        for x in range(n):
            series = data.series(mp_ns, k, x)
            value, scale = series.raw_sum()
            lost = max(lost, fam._lost_bits(value, scale) if value != 0 else 2.0 * prec)
            row.append(series.scaled(value))
        P.append(row)
    w = [ctx.one]
    for x in range(n - 1):
        w.append(w[-1] * data.B(mp_ns, x) / data.D(mp_ns, x + 1))
    h = [1 / ctx.fsum(w[x] * P[k][x] ** 2 for x in range(n)) for k in range(n)]
    E = [data.energy(mp_ns, k) for k in range(n)]
    if len(cache) > 16:
        cache.clear()
    cache[key] = out = (ctx, P, w, h, E, lost)
    return out


def _extended_columns(inst: FamilyInstance, t: float, ys: Sequence[int]) -> np.ndarray:
    """The same mode sum in extended precision, rounded once at the end.

    ``P(x, y) = w(x) sum_n h_n P_n(x) P_n(y) exp(-E(n) t)`` with the weight
    ``w`` from the running product of ``B/D`` and ``1/h_n = sum_x w P_n^2``
    (exact on a finite lattice). When ``phi_0`` spans many decades the terms
    exceed the entries they sum to by that ratio, and double rounding of the
    terms alone would swamp the result.
    """
    n = inst.size
    ys = list(ys)
    prec = 2 * 53 + fam.GUARD_BITS
    while True:
        ctx, P, w, h, E, lost = _extended_modes(inst, prec)
        ctx.prec = prec
        decay = [ctx.exp(-e * ctx.mpf(t)) for e in E]
        out = np.empty((n, len(ys)))
        big = ctx.zero
        for j, y in enumerate(ys):
            coef = [h[k] * P[k][y] * decay[k] for k in range(n)]
            for x in range(n):
                terms = [w[x] * coef[k] * P[k][x] for k in range(n)]
                out[x, j] = float(ctx.fsum(terms))
                big = max(big, max(abs(v) for v in terms))
        needed = 53 + lost + max(0.0, float(ctx.log(big, 2))) + fam.GUARD_BITS
        if prec >= needed or prec >= fam.MAX_PREC:
            return out
        prec = min(fam.MAX_PREC, max(int(needed) + fam.GUARD_BITS, 2 * prec))


def _check_time(t: float) -> float:
    t = float(t)
    if not (math.isfinite(t) and t >= 0):
        raise ConfigError(f"time must be finite and nonnegative, got {t!r}")
    return t


def bd_kernel(inst: FamilyInstance, t: float) -> TransitionKernel:
    """``phi_hat_0(x) / phi_hat_0(y) sum_n exp(-E(n) t) phi_hat_n(x) phi_hat_n(y)``.

    ``t = 0`` gives the identity exactly. Truncated lattices use the exposed
    modes only and are not renormalised; see
    :meth:`TransitionKernel.column_sum_defect`.
    """
    t = _check_time(t)
    if t == 0:
        return TransitionKernel(np.eye(inst.size), 0.0)
    return TransitionKernel(_spectral_columns(inst, t, fam.sites(inst)), t)


@dataclass(frozen=True)
class Trajectory:
    """Distributions ``probs[i]`` at times ``ts[i]``."""

    ts: np.ndarray
    probs: np.ndarray

    def totals(self) -> np.ndarray:
        return self.probs.sum(axis=1)


def check_distribution(p0: Sequence[float], size: int) -> np.ndarray:
    """Validate a probability vector; tiny negatives are clamped to zero.

    Raises
    ------
    InvalidDistribution
        Wrong length, an entry below ``-1e-12`` or a total off by more than
        ``1e-10``.
    """
    p = np.asarray(p0, dtype=float).ravel()
    if p.shape != (size,):
        raise InvalidDistribution(f"expected {size} entries, got {p.size}")
    if not np.all(np.isfinite(p)):
        raise InvalidDistribution("entries must be finite")
    if p.min() < -NEG_TOL:
        raise InvalidDistribution(f"negative entry {p.min()!r}")
    total = math.fsum(p)
    if abs(total - 1.0) > SUM_TOL:
        raise InvalidDistribution(f"entries sum to {total!r}, not 1")
    return np.maximum(p, 0.0)


def bd_evolve(inst: FamilyInstance, p0: Sequence[float], ts: Iterable[float]) -> Trajectory:
    """``p(t) = P(t) p0`` on an ascending, nonnegative time grid."""
    p = check_distribution(p0, inst.size)
    ts = np.array([float(t) for t in ts])
    if ts.size and (not np.all(np.isfinite(ts)) or ts.min() < 0 or np.any(np.diff(ts) < 0)):
        raise ConfigError("time grid must be finite, nonnegative and ascending")
    probs = np.array([bd_kernel(inst, t).matrix @ p for t in ts]).reshape(len(ts), inst.size)
    return Trajectory(ts, probs)


def stationary(inst: FamilyInstance) -> np.ndarray:
    """``phi_hat_0(x)^2``, the long-time limit of every kernel column."""
    return analytic_eigensystem(inst, 1).vectors[:, 0] ** 2


def relaxation_time(inst: FamilyInstance) -> float:
    """``50 / E(1)``: the time after which the kernel is treated as stationary."""
    return 50.0 / fam.energy(inst, 1)


def fermion_walk_single(inst: FamilyInstance, y: int, t: float) -> np.ndarray:
    """Coefficients of a single fermion walker started at ``y``.

    ``phi_hat_0(x) / phi_hat_0(y) sum_n phi_hat_n(x) phi_hat_n(y) exp(-E(n) t)``;
    the raw coefficients, not renormalised.
    """
    y = fam._check_site(inst, y)
    t = _check_time(t)
    if t == 0:
        out = np.zeros(inst.size)
        out[y] = 1.0
        return out
    return _spectral_columns(inst, t, [y])[:, 0]


def multi_walker_decay(inst: FamilyInstance, J: ExcitationSet | Iterable[int], t: float) -> float:
    """``exp(-t sum_{j in J} E(j))``."""
    J = (J if isinstance(J, ExcitationSet) else ExcitationSet.of(J)).check(inst)
    t = _check_time(t)
    return math.exp(-t * math.fsum(fam.energy(inst, j) for j in J.modes))


# ---------------------------------------------------------------------------
# matrix exponential oracle
# ---------------------------------------------------------------------------

TAYLOR_ORDER = 24
# each squaring doubles the relative error; beyond this many squarings the
# oracle carries the extra bits in mpmath
DOUBLE_SQUARINGS = 8


def expm(a: np.ndarray) -> np.ndarray:
    """Matrix exponential by scaling and squaring with a truncated Taylor series.

    The matrix is scaled by ``2^-k`` to norm ``<= 1/2``, exponentiated by a
    degree-24 Taylor polynomial and squared ``k`` times. When every
    off-diagonal entry is nonnegative it is first shifted to ``a + s I >= 0``
    with ``exp(-s 2^-k)`` applied to the scaled step, so every intermediate
    matrix is entrywise nonnegative and small entries keep their relative
    accuracy. The ``k`` squarings multiply the relative error by ``2^k``, so
    for ``k > 8`` the computation runs with ``k`` extra bits in mpmath.
    """
    a = np.array(a, dtype=float)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError("matrix must be square")
    if n == 0:
        return a
    off = a - np.diag(np.diag(a))
    shift = max(float(-np.diag(a).min()), 0.0) if off.min() >= 0 else 0.0
    b = a + shift * np.eye(n)
    norm = float(np.abs(b).sum(axis=0).max())
    k = max(0, math.ceil(math.log2(norm / 0.5))) if norm > 0.5 else 0
    if k <= DOUBLE_SQUARINGS:
        b = b / 2.0**k
        term = np.eye(n)
        out = np.eye(n)
        for j in range(1, TAYLOR_ORDER + 1):
            term = term @ b / j
            out = out + term
        out *= math.exp(-shift / 2.0**k)
        for _ in range(k):
            out = out @ out
        return out
    return _expm_extended(a, shift, k)


def _expm_extended(a: np.ndarray, shift: float, k: int) -> np.ndarray:
    n = a.shape[0]
    ctx = fam._mp_context(53 + k + fam.GUARD_BITS)
    scale = ctx.ldexp(1, -k)
    # the shift is applied here: in double it would round the small diagonals
    bm = [
        [(ctx.mpf(v) + (shift if i == j else 0)) * scale for j, v in enumerate(row)]
        for i, row in enumerate(a)
    ]
    cols = list(zip(*bm))

    def mul(x, y_cols):
        return [[ctx.fdot(r, c) for c in y_cols] for r in x]

    eye = [[ctx.one if i == j else ctx.zero for j in range(n)] for i in range(n)]
    term = eye
    out = [row[:] for row in eye]
    for j in range(1, TAYLOR_ORDER + 1):
        term = [[v / j for v in row] for row in mul(term, cols)]
        out = [[u + v for u, v in zip(ro, rt)] for ro, rt in zip(out, term)]
    damp = ctx.exp(-ctx.mpf(shift) * scale)
    out = [[v * damp for v in row] for row in out]
    for _ in range(k):
        out = mul(out, list(zip(*out)))
    return np.array([[float(v) for v in row] for row in out])
