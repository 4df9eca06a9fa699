"""1-D lattice geometry, stochastic site occupancy, and interaction-pair enumeration.

A lattice displacement by d sites makes every atom in |1> interact with the
site d places to its right; pairs are therefore enumerated as ordered
(control, target) = (k, k+d).  Sampling uses a counter-based Philox generator
keyed by (master_seed, realization_index) so ensembles are reproducible and
order-independent.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

#: Cap on lattice length; the register cap is the real resource limit, this
#: bound just keeps pathological fillings from allocating silly geometries.
MAX_LATTICE_SITES = 4096

PERIODIC = "periodic"
OPEN = "open"


@dataclass(frozen=True)
class LatticeConfig:
    """Chain geometry: number of sites and boundary handling."""

    num_sites: int
    boundary: str = PERIODIC

    def __post_init__(self):
        if self.num_sites < 2:
            raise ValueError("a lattice needs at least 2 sites")
        if self.num_sites > MAX_LATTICE_SITES:
            raise ValueError(
                f"lattice of {self.num_sites} sites exceeds cap {MAX_LATTICE_SITES}"
            )
        if self.boundary not in (PERIODIC, OPEN):
            raise ValueError(f"unknown boundary {self.boundary!r}")


@dataclass(frozen=True)
class OccupancyMask:
    """Per-site occupation bits h_k (1 = atom present)."""

    bits: tuple[int, ...]

    def __post_init__(self):
        if any(b not in (0, 1) for b in self.bits):
            raise ValueError("occupancy bits must be 0 or 1")

    @property
    def num_sites(self) -> int:
        return len(self.bits)

    @property
    def atom_count(self) -> int:
        return sum(self.bits)

    @property
    def occupied_sites(self) -> tuple[int, ...]:
        return tuple(k for k, b in enumerate(self.bits) if b)

    def to01(self) -> str:
        """Serialize as a 0/1 string, site 0 first (audit format)."""
        return "".join(str(b) for b in self.bits)

    @classmethod
    def from01(cls, text: str) -> "OccupancyMask":
        return cls(tuple(int(c) for c in text))


def full_mask(num_sites: int) -> OccupancyMask:
    return OccupancyMask((1,) * num_sites)


def sample_occupancy(
    lattice: LatticeConfig, atom_count: int, rng_seed: int, realization: int = 0
) -> OccupancyMask:
    """Place exactly `atom_count` atoms on distinct uniformly random sites.

    Deterministic for a given (rng_seed, realization) pair; distinct
    realizations draw from independent Philox streams so ensemble members can
    be generated in any order.
    """
    m = lattice.num_sites
    if atom_count > m:
        raise ValueError(f"cannot place {atom_count} atoms on {m} sites")
    if atom_count < 0:
        raise ValueError("atom count must be nonnegative")
    rng = np.random.Generator(np.random.Philox(key=(rng_seed, realization)))
    chosen = rng.permutation(m)[:atom_count]
    bits = [0] * m
    for site in chosen:
        bits[site] = 1
    return OccupancyMask(tuple(bits))


def displacement_pairs(
    lattice: LatticeConfig, mask: OccupancyMask, d: int
) -> list[tuple[int, int]]:
    """Ordered pairs (k, k+d) with both sites occupied.

    Index arithmetic wraps mod num_sites for periodic boundaries; pairs that
    would cross the edge are dropped for open chains.  Negative d gives the
    opposite displacement (k, k-|d|), used to build symmetric coupling tables.
    """
    m = lattice.num_sites
    if mask.num_sites != m:
        raise ValueError("mask does not match lattice size")
    if not 1 <= abs(d) < m:
        raise ValueError(f"displacement {d} outside valid range 1..{m - 1}")
    pairs = []
    for k in range(m):
        if not mask.bits[k]:
            continue
        partner = k + d
        if lattice.boundary == PERIODIC:
            partner %= m
        elif not 0 <= partner < m:
            continue
        if mask.bits[partner]:
            pairs.append((k, partner))
    return pairs


def pair_correlation(masks: Sequence[OccupancyMask], k: int, l: int) -> float:
    """Ensemble average <h_k h_l> over the provided masks."""
    if not masks:
        raise ValueError("pair correlation needs at least one mask")
    return float(np.mean([m.bits[k] * m.bits[l] for m in masks]))


def pair_correlation_matrix(masks: Sequence[OccupancyMask]) -> np.ndarray:
    """Full <h_k h_l> matrix over the provided masks."""
    if not masks:
        raise ValueError("pair correlation needs at least one mask")
    h = np.array([m.bits for m in masks], dtype=float)
    return h.T @ h / len(masks)


def exact_count_pair_correlation(num_sites: int, atom_count: int) -> float:
    """<h_k h_l> (k != l) for exactly-N-of-M uniform placement: N(N-1)/(M(M-1))."""
    m, n = num_sites, atom_count
    return n * (n - 1) / (m * (m - 1))
