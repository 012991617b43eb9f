"""Free-fermion ground state: Fermi level, correlations, entropy, evolution.

The single-particle Hamiltonian is ``H - mu`` with ``H`` the tridiagonal
matrix of :mod:`spectral`; the many-body ground state fills every mode with
``E(n) < mu``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import families as fam
from .errors import (
    CDUnavailable,
    DegenerateFermiLevel,
    DiagonalNotSupported,
    InvalidExcitationSet,
    LatticeRangeError,
    ModeCapExceeded,
    OutOfBand,
)
from .families import FamilyInstance
from .parallel import pmap
from .series import SignedLog
from .spectral import analytic_eigensystem, lattice_dict

DEGENERACY_TOL = 1e-12


# ---------------------------------------------------------------------------
# Fermi level
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FermiLevel:
    """Chemical potential ``mu`` with filled modes ``0..K``.

    :func:`fermi_level` only produces levels strictly inside the band. A
    level with every mode filled (``K = N``) can be built directly.
    """

    mu: float
    K: int

    @property
    def filled(self) -> range:
        return range(self.K + 1)


def fermi_level(inst: FamilyInstance, mu: float) -> FermiLevel:
    """The unique ``K`` with ``E(K) < mu < E(K+1)``.

    Raises
    ------
    OutOfBand
        ``mu <= 0``, ``mu >= E(N)`` (finite) or ``mu`` at or above the
        spectral supremum (semi-infinite).
    DegenerateFermiLevel
        ``|mu - E(n)| < 1e-12 (1 + E(n))`` for some ``n``.
    ModeCapExceeded
        The filled set reaches beyond the exposed modes of a truncated lattice.
    """
    mu = float(mu)
    if not math.isfinite(mu) or mu <= 0:
        raise OutOfBand(f"mu={mu!r} is not above the ground energy 0")
    sup = fam.energy_sup(inst)
    if mu >= sup:
        raise OutOfBand(f"mu={mu!r} is not below the top of the band {sup!r}")
    n = 0
    while True:
        e = fam.energy(inst, n)
        if abs(mu - e) < DEGENERACY_TOL * (1.0 + e):
            raise DegenerateFermiLevel(f"mu={mu!r} coincides with E({n})={e!r}")
        if e > mu:
            break
        n += 1
    K = n - 1
    if K > inst.n_max:
        raise ModeCapExceeded(f"Fermi level K={K} above exposed cap n_max={inst.n_max}")
    return FermiLevel(mu, K)


def _level(inst: FamilyInstance, mu: "float | FermiLevel") -> FermiLevel:
    if isinstance(mu, FermiLevel):
        if not 0 <= mu.K <= inst.n_max:
            if inst.finite:
                raise LatticeRangeError(f"K={mu.K} outside 0..{inst.n_max}")
            raise ModeCapExceeded(f"K={mu.K} above exposed cap n_max={inst.n_max}")
        return mu
    return fermi_level(inst, mu)


def gap_midpoints(inst: FamilyInstance) -> list[float]:
    """``(E(n) + E(n+1)) / 2`` for every gap inside the exposed band."""
    top = inst.n_max if inst.finite else inst.n_max + 1
    es = [fam.energy(inst, n) for n in range(top + 1)]
    return [0.5 * (a + b) for a, b in zip(es[:-1], es[1:])]


def ground_energy(inst: FamilyInstance, mu: "float | FermiLevel") -> float:
    """``sum_{k<=K} (E(k) - mu)``."""
    lvl = _level(inst, mu)
    return math.fsum(fam.energy(inst, k) - lvl.mu for k in lvl.filled)


# ---------------------------------------------------------------------------
# correlations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CorrelationMatrix:
    """Ground-state two-point function ``C[x, y] = <c_x^dag c_y>``."""

    entries: np.ndarray
    level: FermiLevel
    metadata: dict = field(default_factory=dict)

    @property
    def size(self) -> int:
        return self.entries.shape[0]

    def trace(self) -> float:
        return float(math.fsum(np.diag(self.entries)))

    def idempotency_defect(self) -> float:
        C = self.entries
        return float(np.abs(C @ C - C).max())


def _symmetric_outer(V: np.ndarray) -> np.ndarray:
    C = V @ V.T
    upper = np.triu(C)
    return upper + np.triu(C, 1).T


def correlation_matrix(inst: FamilyInstance, mu: "float | FermiLevel") -> CorrelationMatrix:
    """``C[x, y] = sum_{k<=K} phi_hat_k(x) phi_hat_k(y)`` (exactly symmetric)."""
    lvl = _level(inst, mu)
    V = analytic_eigensystem(inst, lvl.K + 1).vectors
    meta = {
        "family": inst.family.value,
        "params": inst.param_dict(),
        "lattice": lattice_dict(inst),
        "mu": lvl.mu,
        "K": lvl.K,
    }
    return CorrelationMatrix(_symmetric_outer(V), lvl, meta)


def correlation_cd(inst: FamilyInstance, mu: "float | FermiLevel", x: int, y: int) -> float:
    """Off-diagonal correlation from the Christoffel-Darboux kernel.

    ``alpha_K d_K^2 phi_0(x) phi_0(y) / alpha_{K+1}
    * (P_{K+1}(x) P_K(y) - P_{K+1}(y) P_K(x)) / (eta(x) - eta(y))``,
    with every factor combined in logs.

    Raises
    ------
    DiagonalNotSupported
        ``x == y``; use :func:`correlation_matrix` for diagonal entries.
    CDUnavailable
        All modes of a finite lattice are filled (``K = N``).
    """
    x = fam._check_site(inst, x)
    y = fam._check_site(inst, y)
    if x == y:
        raise DiagonalNotSupported("the kernel form is only used off the diagonal")
    lvl = _level(inst, mu)
    K = lvl.K
    if inst.finite and K >= inst.lattice.N:
        raise CDUnavailable("K = N: the kernel needs the mode N+1, which does not exist")
    data, p = inst.data, inst.p
    pre = (data.leading(p, K) / data.leading(p, K + 1)) * data.log_norm(p, K)
    pre = pre * SignedLog(1, 0.5 * (data.log_weight(p, x).log + data.log_weight(p, y).log))
    pre = pre / (fam.eta(inst, x) - fam.eta(inst, y))
    a = fam._series_log(data, p, K + 1, x) * fam._series_log(data, p, K, y)
    b = fam._series_log(data, p, K + 1, y) * fam._series_log(data, p, K, x)
    top = max(a.log, b.log)
    if top == -math.inf:
        return 0.0
    diff = a.sign * math.exp(a.log - top) - b.sign * math.exp(b.log - top)
    if diff == 0.0:
        return 0.0
    return pre.sign * math.copysign(math.exp(pre.log + top + math.log(abs(diff))), diff)


def block_correlation(inst: FamilyInstance, mu: "float | FermiLevel", L: int) -> CorrelationMatrix:
    """Leading ``(L+1) x (L+1)`` block of the correlation matrix."""
    L = fam._check_site(inst, L)
    C = correlation_matrix(inst, mu)
    meta = dict(C.metadata, L=L)
    return CorrelationMatrix(C.entries[: L + 1, : L + 1].copy(), C.level, meta)


def binary_entropy_sum(lam: np.ndarray) -> float:
    """``-sum [l ln l + (1-l) ln(1-l)]`` with ``0 ln 0 = 0``; input clipped to [0, 1]."""
    lam = np.clip(np.asarray(lam, dtype=float), 0.0, 1.0)
    out = 0.0
    for v in (lam, 1.0 - lam):
        nz = v[v > 0]
        out -= float(np.sum(nz * np.log(nz)))
    return max(out, 0.0)


def entanglement_entropy(inst: FamilyInstance, mu: "float | FermiLevel", L: int) -> float:
    """Entropy of the block ``0..L`` from the eigenvalues of its correlations."""
    block = block_correlation(inst, mu, L)
    return binary_entropy_sum(np.linalg.eigvalsh(block.entries))


def entropy_sweep(
    inst: FamilyInstance, mu: "float | FermiLevel", Ls: Iterable[int] | None = None
) -> list[tuple[int, float]]:
    """``(L, S(L))`` pairs; blocks are evaluated in parallel."""
    lvl = _level(inst, mu)
    Ls = list(fam.sites(inst) if Ls is None else Ls)
    C = correlation_matrix(inst, lvl).entries

    def one(L: int) -> float:
        L = fam._check_site(inst, L)
        return binary_entropy_sum(np.linalg.eigvalsh(C[: L + 1, : L + 1]))

    return list(zip(Ls, pmap(one, Ls)))


# ---------------------------------------------------------------------------
# time evolution
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AmplitudeVector:
    """Site amplitudes of a one-particle state at time ``t``."""

    amplitudes: np.ndarray
    t: float
    mu: float

    @property
    def re(self) -> np.ndarray:
        return self.amplitudes.real

    @property
    def im(self) -> np.ndarray:
        return self.amplitudes.imag

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


def _phases(energies: np.ndarray, mu: float, t: float) -> np.ndarray:
    return np.exp(-1j * (energies - mu) * t)


def transition_amplitude(inst: FamilyInstance, mu: float, x: int, y: int, t: float) -> complex:
    """``sum_n phi_hat_n(y) phi_hat_n(x) exp(-i (E(n) - mu) t)``."""
    x = fam._check_site(inst, x)
    y = fam._check_site(inst, y)
    es = analytic_eigensystem(inst)
    terms = es.vectors[x] * es.vectors[y] * _phases(es.energies, float(mu), float(t))
    return complex(terms.sum())


def _coefficients(inst: FamilyInstance, beta: Sequence[complex]) -> np.ndarray:
    beta = np.asarray(beta, dtype=complex).ravel()
    if len(beta) > inst.n_modes:
        if inst.finite:
            raise LatticeRangeError(f"{len(beta)} coefficients for {inst.n_modes} modes")
        raise ModeCapExceeded(f"{len(beta)} coefficients, only n<={inst.n_max} exposed")
    return beta


def evolve_single_particle(
    inst: FamilyInstance, mu: float, beta: Sequence[complex], t: float
) -> AmplitudeVector:
    """``sum_n beta_n phi_hat_n(x) exp(-i (E(n) - mu) t)`` for every site.

    ``beta`` may be shorter than the number of modes; missing entries are 0.
    """
    beta = _coefficients(inst, beta)
    es = analytic_eigensystem(inst, len(beta))
    amp = es.vectors @ (beta * _phases(es.energies, float(mu), float(t)))
    return AmplitudeVector(amp, float(t), float(mu))


def site_coefficients(inst: FamilyInstance, y: int) -> np.ndarray:
    """Mode coefficients ``beta_n = phi_hat_n(y)`` of a particle created at ``y``."""
    y = fam._check_site(inst, y)
    return np.array(analytic_eigensystem(inst).vectors[y], dtype=complex)


# ---------------------------------------------------------------------------
# excitations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExcitationSet:
    """Distinct occupied mode indices, stored in increasing order."""

    modes: tuple[int, ...] = ()

    def __post_init__(self):
        ms = tuple(int(m) for m in self.modes)
        if any(m != orig for m, orig in zip(ms, self.modes)) or any(m < 0 for m in ms):
            raise InvalidExcitationSet(f"modes must be nonnegative integers: {self.modes!r}")
        if len(set(ms)) != len(ms):
            raise InvalidExcitationSet(f"repeated mode in {self.modes!r}")
        object.__setattr__(self, "modes", tuple(sorted(ms)))

    @classmethod
    def of(cls, modes: Iterable[int]) -> "ExcitationSet":
        return cls(tuple(modes))

    def __len__(self) -> int:
        return len(self.modes)

    def check(self, inst: FamilyInstance) -> "ExcitationSet":
        if self.modes and self.modes[-1] > inst.n_max:
            raise InvalidExcitationSet(
                f"mode {self.modes[-1]} outside the exposed range 0..{inst.n_max}"
            )
        return self


def excitation_energy(inst: FamilyInstance, mu: float, J: ExcitationSet | Iterable[int]) -> float:
    """``sum_{j in J} (E(j) - mu)``; the state evolves with phase ``exp(-i E t)``."""
    J = (J if isinstance(J, ExcitationSet) else ExcitationSet.of(J)).check(inst)
    return math.fsum(fam.energy(inst, j) - float(mu) for j in J.modes)


def excitation_phase(inst: FamilyInstance, mu: float, J: ExcitationSet | Iterable[int], t: float) -> complex:
    return complex(np.exp(-1j * excitation_energy(inst, mu, J) * float(t)))


def subset_energies(energies: Sequence[float], mu: float) -> np.ndarray:
    """Energy ``sum_{j in S} (E_j - mu)`` of every subset ``S``, indexed by bitmask."""
    e = np.asarray(energies, dtype=float) - float(mu)
    n = len(e)
    masks = np.arange(1 << n, dtype=np.int64)
    bits = (masks[:, None] >> np.arange(n)) & 1
    return bits @ e


def brute_force_ground(inst: FamilyInstance, mu: float) -> tuple[float, ExcitationSet, float]:
    """Exhaustive minimum over all excitation sets of a finite lattice.

    Returns ``(minimum, minimiser, runner-up)``; a strict minimum has the
    runner-up above the minimum.
    """
    if not inst.finite:
        raise LatticeRangeError("exhaustive enumeration needs a finite lattice")
    es = [fam.energy(inst, n) for n in fam.modes(inst)]
    E = subset_energies(es, mu)
    order = np.argsort(E, kind="stable")
    best = int(order[0])
    J = ExcitationSet(tuple(j for j in range(len(es)) if best >> j & 1))
    second = float(E[order[1]]) if len(E) > 1 else math.inf
    return float(E[best]), J, second
