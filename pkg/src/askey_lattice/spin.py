"""XX spin chains obtained from the fermion chains by Jordan-Wigner.

``H_s = sum_x s J_x (S+_x S-_{x+1} + S-_x S+_{x+1}) + sum_x h_x n_x`` with
``J_x = sqrt(B(x) D(x+1))``, ``h_x = B(x) + D(x) - mu`` and ``n_x`` the
up-spin projector; ``s = +1`` for the standard variant and ``-1`` for the
alternative one. The all-down state is the (normalised) vacuum with energy 0.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import families as fam
from .errors import ConfigError, SectorTooLarge
from .families import FamilyInstance
from .fermion import evolve_single_particle
from .tridiag import dense_eigh

VARIANTS = ("standard", "alternative")
MAX_SITES_TWO_MAGNONS = 11


def _check_variant(variant: str) -> str:
    if variant not in VARIANTS:
        raise ConfigError(f"variant must be one of {VARIANTS}, got {variant!r}")
    return variant


@dataclass(frozen=True)
class SpinChainSpec:
    """Couplings ``J`` (length sites-1), fields ``h`` (length sites), variant, ``mu``."""

    couplings: tuple[float, ...]
    fields: tuple[float, ...]
    variant: str = "standard"
    mu: float = 0.0

    def __post_init__(self):
        _check_variant(self.variant)
        if len(self.couplings) != max(len(self.fields) - 1, 0):
            raise ConfigError("need exactly one coupling per neighbouring pair of sites")

    @property
    def sites(self) -> int:
        return len(self.fields)

    @property
    def hopping_sign(self) -> int:
        return 1 if self.variant == "standard" else -1

    def to_dict(self) -> dict:
        return {
            "couplings": list(self.couplings),
            "fields": list(self.fields),
            "variant": self.variant,
            "mu": self.mu,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "SpinChainSpec":
        try:
            return cls(
                couplings=tuple(float(v) for v in d["couplings"]),
                fields=tuple(float(v) for v in d["fields"]),
                variant=str(d["variant"]),
                mu=float(d["mu"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"malformed spin chain record: {exc}") from None

    @classmethod
    def from_json(cls, text: str) -> "SpinChainSpec":
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"spin chain JSON: {exc}") from None


def export_chain(inst: FamilyInstance, mu: float = 0.0, variant: str = "standard") -> SpinChainSpec:
    """Couplings and fields of the XX chain for ``inst`` (truncated if semi-infinite)."""
    _check_variant(variant)
    xs = fam.sites(inst)
    B = [fam.coeff_B(inst, x) for x in xs]
    D = [fam.coeff_D(inst, x) for x in xs]
    J = tuple(math.sqrt(B[x] * D[x + 1]) for x in xs[:-1])
    h = tuple(B[x] + D[x] - float(mu) for x in xs)
    return SpinChainSpec(J, h, variant, float(mu))


def string_sign(x: int, variant: str) -> int:
    """``(-1)^x`` for the standard variant, ``+1`` for the alternative one."""
    return (-1) ** x if _check_variant(variant) == "standard" else 1


@dataclass(frozen=True)
class MagnonState:
    """Single up-spin amplitudes ``a(x)`` at time ``t``."""

    amplitudes: np.ndarray
    t: float
    variant: str

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


def magnon_state(
    inst: FamilyInstance, mu: float, beta: Sequence[complex], t: float, variant: str = "standard"
) -> MagnonState:
    """``s(x) sum_n beta_n phi_hat_n(x) exp(-i (E(n) - mu) t)`` on every site."""
    amp = evolve_single_particle(inst, mu, beta, t).amplitudes
    signs = np.array([string_sign(x, variant) for x in fam.sites(inst)])
    return MagnonState(amp * signs, float(t), variant)


def magnon_amplitude(
    inst: FamilyInstance, mu: float, beta: Sequence[complex], x: int, t: float,
    variant: str = "standard",
) -> complex:
    x = fam._check_site(inst, x)
    return complex(magnon_state(inst, mu, beta, t, variant).amplitudes[x])


# ---------------------------------------------------------------------------
# sector oracle
# ---------------------------------------------------------------------------


def sector_basis(sites: int, magnons: int) -> list[tuple[int, ...]]:
    """Occupied-site tuples in lexicographic order."""
    return list(itertools.combinations(range(sites), magnons))


def apply_hamiltonian(spec: SpinChainSpec, state: int) -> dict[int, float]:
    """``H_s |state>`` for a bitmask basis state (bit x set = spin x up)."""
    out: dict[int, float] = {}
    diag = sum(h for x, h in enumerate(spec.fields) if state >> x & 1)
    if diag:
        out[state] = diag
    s = spec.hopping_sign
    for x, J in enumerate(spec.couplings):
        up_x, up_y = state >> x & 1, state >> (x + 1) & 1
        if up_x != up_y:
            # S+_x S-_{x+1} or S-_x S+_{x+1}: swap the two spins
            new = state ^ (1 << x) ^ (1 << (x + 1))
            out[new] = out.get(new, 0.0) + s * J
    return out


def sector_matrix(spec: SpinChainSpec, magnons: int) -> np.ndarray:
    """Dense block of ``H_s`` on the sector with ``magnons`` up spins.

    Every image of a sector state is checked to stay inside the sector.
    """
    basis = sector_basis(spec.sites, magnons)
    index = {sum(1 << x for x in b): i for i, b in enumerate(basis)}
    H = np.zeros((len(basis), len(basis)))
    for mask, col in index.items():
        for new, amp in apply_hamiltonian(spec, mask).items():
            row = index.get(new)
            if row is None:
                raise RuntimeError(f"state {new:b} leaves the {magnons}-magnon sector")
            H[row, col] += amp
    return H


def sector_oracle(
    inst: FamilyInstance, mu: float, n_excitations: int, variant: str = "standard"
) -> np.ndarray:
    """Sorted spectrum of the one- or two-magnon sector by dense diagonalisation.

    Raises
    ------
    SectorTooLarge
        Truncated lattices, or more than 11 sites for two magnons.
    """
    if n_excitations not in (1, 2):
        raise ConfigError("the sector oracle handles one or two magnons")
    if not inst.finite:
        raise SectorTooLarge("the sector of a semi-infinite chain is infinite")
    if n_excitations == 2 and inst.size > MAX_SITES_TWO_MAGNONS:
        raise SectorTooLarge(f"two-magnon sector limited to N<={MAX_SITES_TWO_MAGNONS - 1}")
    H = sector_matrix(export_chain(inst, mu, variant), n_excitations)
    return dense_eigh(H, vectors=False)[0]


def sector_spectrum(inst: FamilyInstance, mu: float, n_excitations: int) -> np.ndarray:
    """Sorted ``sum_{j in J} (E(j) - mu)`` over all ``J`` of the given size."""
    es = [fam.energy(inst, n) - float(mu) for n in fam.modes(inst)]
    sums = [math.fsum(es[j] for j in J) for J in itertools.combinations(range(len(es)), n_excitations)]
    return np.sort(np.array(sums))


def full_hamiltonian(spec: SpinChainSpec) -> np.ndarray:
    """Dense ``2^sites`` Hamiltonian from Pauli Kronecker products (small chains)."""
    n = spec.sites
    if n > 12:
        raise SectorTooLarge("full Hilbert space limited to 12 sites")
    sp = np.array([[0.0, 1.0], [0.0, 0.0]])
    sm = sp.T
    nup = np.diag([1.0, 0.0])

    def op(local: dict[int, np.ndarray]) -> np.ndarray:
        out = np.ones((1, 1))
        # site 0 is the least significant bit so indices match the bitmasks
        for x in reversed(range(n)):
            out = np.kron(out, local.get(x, np.eye(2)))
        return out

    H = np.zeros((2**n, 2**n))
    for x, h in enumerate(spec.fields):
        H += h * op({x: nup})
    for x, J in enumerate(spec.couplings):
        H += spec.hopping_sign * J * (op({x: sp, x + 1: sm}) + op({x: sm, x + 1: sp}))
    # basis vector (1,0) is spin up; flip the local basis so bit=1 means up
    flip = np.array([[0, 1], [1, 0]])
    P = np.ones((1, 1))
    for _ in range(n):
        P = np.kron(P, flip)
    return P @ H @ P
