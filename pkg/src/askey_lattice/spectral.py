"""Tridiagonal Hamiltonian, its closed-form eigensystem and oracle checks.

The Hamiltonian factorises as ``H = A^T A`` with ``A`` upper bidiagonal,
``(A phi)(x) = sqrt(B(x)) phi(x) - sqrt(D(x+1)) phi(x+1)``. The factor is
kept alongside the tridiagonal entries so that the oracle can resolve small
eigenvalues of strongly graded matrices to relative accuracy.
"""
from __future__ import annotations

import functools
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import families as fam
from .errors import ModeCapExceeded
from .families import FamilyInstance
from .tridiag import factored_eigh, tridiag_eigh


@dataclass(frozen=True)
class TridiagonalHamiltonian:
    """Symmetric tridiagonal matrix ``diag`` / ``offdiag``.

    ``sqrt_B`` and ``sqrt_D`` (length n and n-1, the latter holding
    ``sqrt(D(x+1))``) describe the bidiagonal factor when known.
    """

    diag: np.ndarray
    offdiag: np.ndarray
    sqrt_B: np.ndarray | None = None
    sqrt_D: np.ndarray | None = None

    @property
    def size(self) -> int:
        return len(self.diag)

    def dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.offdiag, 1) + np.diag(self.offdiag, -1)

    def matvec(self, v: np.ndarray) -> np.ndarray:
        """``H @ v`` for a vector or a matrix of column vectors."""
        v = np.asarray(v)
        d = self.diag.reshape((-1,) + (1,) * (v.ndim - 1))
        e = self.offdiag.reshape((-1,) + (1,) * (v.ndim - 1))
        out = d * v
        out[:-1] += e * v[1:]
        out[1:] += e * v[:-1]
        return out

    def norm(self) -> float:
        """Max-row-sum norm; an upper bound on the spectral norm."""
        a = np.abs(self.diag).copy()
        a[:-1] += np.abs(self.offdiag)
        a[1:] += np.abs(self.offdiag)
        return float(a.max()) if len(a) else 0.0


@dataclass(frozen=True)
class EigenSystem:
    """Ascending ``energies`` and matching orthonormal column ``vectors``."""

    energies: np.ndarray
    vectors: np.ndarray

    @property
    def n_modes(self) -> int:
        return len(self.energies)


def build_hamiltonian(inst: FamilyInstance) -> TridiagonalHamiltonian:
    """Hamiltonian on the (truncated) lattice ``0..last_site``."""
    xs = fam.sites(inst)
    B = np.array([fam.coeff_B(inst, x) for x in xs])
    D = np.array([fam.coeff_D(inst, x) for x in xs])
    sB = np.sqrt(B)
    sD = np.sqrt(D[1:])
    # one rounding where the product is representable, two beyond that
    with np.errstate(over="ignore"):
        prod = B[:-1] * D[1:]
    off = -np.where(np.isfinite(prod), np.sqrt(prod), sB[:-1] * sD)
    return TridiagonalHamiltonian(diag=B + D, offdiag=off, sqrt_B=sB, sqrt_D=sD)


def analytic_eigensystem(inst: FamilyInstance, n_modes: int | None = None) -> EigenSystem:
    """Closed-form ``phi_hat_n(x) = d_n phi_0(x) P_n(x)`` for the exposed modes.

    Parameters
    ----------
    n_modes : int, optional
        Number of modes (``0..n_modes-1``); defaults to all exposed modes.

    Raises
    ------
    ModeCapExceeded
        For a truncated lattice when more than ``n_max + 1`` modes are asked for.
    """
    available = inst.n_modes
    k = available if n_modes is None else int(n_modes)
    if k > available:
        if inst.finite:
            raise fam.LatticeRangeError(f"{k} modes requested, lattice has {available}")
        raise ModeCapExceeded(f"{k} modes requested, only n<={inst.n_max} exposed")
    if k < 0:
        raise fam.LatticeRangeError(f"negative mode count {k}")
    full = _eigensystem(inst)
    return EigenSystem(energies=full.energies[:k], vectors=full.vectors[:, :k])


@functools.lru_cache(maxsize=64)
def _eigensystem(inst: FamilyInstance) -> EigenSystem:
    # instances are immutable and hash on (family, params, lattice)
    k = inst.n_modes
    xs = fam.sites(inst)
    logw = np.array([fam.log_weight(inst, x).log for x in xs])
    vecs = np.empty((inst.size, k))
    for n in range(k):
        half = 0.5 * (fam.log_norm_sq(inst, n).log + logw)
        # P_n alone can overflow on long truncated lattices; combine in logs
        for x in xs:
            lp = fam.log_poly(inst, n, x)
            vecs[x, n] = lp.sign * math.exp(half[x] + lp.log) if lp.sign else 0.0
    energies = np.array([fam.energy(inst, n) for n in range(k)])
    energies.flags.writeable = False
    vecs.flags.writeable = False
    return EigenSystem(energies=energies, vectors=vecs)


def oracle_diagonalize(H: TridiagonalHamiltonian) -> EigenSystem:
    """Independent numerical eigen-decomposition of ``H``.

    Uses one-sided Jacobi on the bidiagonal factor when ``H`` carries it and
    implicit-shift QL on the tridiagonal entries otherwise. Eigenvector signs
    make the first non-negligible component positive.
    """
    if H.sqrt_B is not None and H.sqrt_D is not None:
        w, z = factored_eigh(H.sqrt_B, H.sqrt_D)
    else:
        w, z = tridiag_eigh(H.diag, H.offdiag)
    return EigenSystem(energies=w, vectors=z)


# ---------------------------------------------------------------------------
# verification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Check:
    name: str
    defect: float
    tol: float
    passed: bool

    @classmethod
    def make(cls, name: str, defect: float, tol: float) -> "Check":
        return cls(name, float(defect), float(tol), bool(defect <= tol))


@dataclass(frozen=True)
class VerificationReport:
    family: str
    params: dict
    lattice: dict
    n_checked: int
    checks: tuple[Check, ...]
    degenerate_gap: bool = False
    notes: tuple[str, ...] = field(default_factory=tuple)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks) and not self.degenerate_gap

    def check(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["checks"] = [asdict(c) for c in self.checks]
        out["notes"] = list(self.notes)
        out["passed"] = self.passed
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, default=_json_number)


def _json_number(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    raise TypeError(type(v))


def lattice_dict(inst: FamilyInstance) -> dict:
    lat = inst.lattice
    if inst.finite:
        return {"kind": "finite", "N": lat.N}
    return {"kind": "semi-infinite", "M": lat.M, "eps_tail": lat.eps_tail,
            "n_max": lat.n_max, "tail_bound": lat.tail_bound}


def eigen_residuals(H: TridiagonalHamiltonian, es: EigenSystem) -> np.ndarray:
    """``||H v_n - E_n v_n||_inf / (1 + E_n)`` per column."""
    r = H.matvec(es.vectors) - es.vectors * es.energies
    return np.abs(r).max(axis=0) / (1.0 + np.abs(es.energies))


def verify(inst: FamilyInstance, tol: float = 1e-9) -> VerificationReport:
    """Compare the closed-form eigensystem with the matrix and the oracle.

    Checks: ``residual`` (max over exposed n of the scaled eigen-residual),
    ``orthonormality`` (Gram defect), ``completeness`` (finite lattices),
    ``zero_mode`` (``||H phi_hat_0||_inf``), ``spectrum`` (max of
    ``|E_n - oracle_n| / (1 + E_n)``) and ``psd`` (smallest oracle
    eigenvalue against ``-1e-10 ||H||``).
    """
    H = build_hamiltonian(inst)
    es = analytic_eigensystem(inst)
    orc = oracle_diagonalize(H)
    k = es.n_modes
    V = es.vectors
    hnorm = H.norm()
    checks = [
        Check.make("residual", eigen_residuals(H, es).max(), tol),
        Check.make("orthonormality", np.abs(V.T @ V - np.eye(k)).max(), tol),
    ]
    notes = []
    if inst.finite:
        checks.append(Check.make("completeness", np.abs(V @ V.T - np.eye(inst.size)).max(), tol))
    else:
        notes.append("completeness skipped on a truncated lattice")
    checks.append(Check.make("zero_mode", np.abs(H.matvec(V[:, 0])).max(), tol))
    spec_dev = np.abs(es.energies - orc.energies[:k]) / (1.0 + es.energies)
    checks.append(Check.make("spectrum", spec_dev.max(), tol))
    checks.append(Check.make("psd", max(0.0, -orc.energies[0]), 1e-10 * hnorm))
    gaps = np.diff(orc.energies)
    degenerate = bool(len(gaps) and gaps.min() < 1e-12 * hnorm)
    if degenerate:
        notes.append("oracle eigenvalues closer than 1e-12 ||H||")
    return VerificationReport(
        family=inst.family.value,
        params=inst.param_dict(),
        lattice=lattice_dict(inst),
        n_checked=k,
        checks=tuple(checks),
        degenerate_gap=degenerate,
        notes=tuple(notes),
    )
