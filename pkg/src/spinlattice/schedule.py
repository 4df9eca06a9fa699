"""Compile coupling specifications into schedules of collision layers and pulses.

A collision layer is a set of two-site phase gates applied at one lattice
displacement.  A layer tagged basis "x" or "y" is executed inside a global
pulse sandwich that rotates the z axis onto the requested axis:

    x layer:  R_y(-pi/2)  [gates]  R_y(+pi/2)      (j_z -> j_x)
    y layer:  R_x(+pi/2)  [gates]  R_x(-pi/2)      (j_z -> j_y)

with R_a(angle) = exp(-i*angle*J_a) applied to all sites, so schedules never
leave the register in a rotated frame.

Sign bookkeeping (fixed once, verified by the dense 4x4 oracle in the tests):
a phase gate with phi applied to the pair (k, l) equals
exp(-i*phi*(j_z,k + 1/2)(j_z,l - 1/2)), so evolving a coupling chi for time t
compiles to gates with phi = chi*t.  On a fully occupied periodic chain the
single-site terms cancel in the sum over a layer, leaving the pure two-site
coupling up to a global phase; with partial filling the cancellation instead
requires visiting both displacements +/-d (symmetric coupling table).

Kinds
-----
zz            diagonal coupling, one layer per displacement, exact
heisenberg    zz + xx + yy couplings, split-operator steps, first order in dt
xx            transverse coupling, exact single pass (one-directional table)
xx_minus_yy   xx with phi alternating against yy with -phi, first order in dt
partial_xx    xx on a partially occupied lattice, symmetric +/-d table, exact
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

from .lattice import LatticeConfig, OccupancyMask, displacement_pairs, full_mask

ZZ = "zz"
HEISENBERG = "heisenberg"
XX = "xx"
XX_MINUS_YY = "xx_minus_yy"
PARTIAL_XX = "partial_xx"

KINDS = (ZZ, HEISENBERG, XX, XX_MINUS_YY, PARTIAL_XX)

EXACT = "exact"
FIRST_ORDER = "first_order"


@dataclass(frozen=True)
class HamiltonianSpec:
    """Which coupling to evolve, its coefficients, and the lattice it acts on.

    neighbor_range r couples displacements d = 1..r (clamped to num_sites-1);
    all non-vanishing pair couplings default to the same chi, with optional
    per-pair overrides keyed by ordered site pairs (single-coefficient kinds
    only).  eta and lam are the transverse coefficients of the heisenberg kind.
    """

    kind: str
    lattice: LatticeConfig
    chi: float = 1.0
    eta: float = 0.0
    lam: float = 0.0
    neighbor_range: int = 1
    mask: OccupancyMask | None = None
    coupling_overrides: Mapping[tuple[int, int], float] | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown coupling kind {self.kind!r}")
        if self.neighbor_range < 1:
            raise ValueError("neighbor_range must be >= 1")
        for name in ("chi", "eta", "lam"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.kind == PARTIAL_XX and self.mask is None:
            raise ValueError("partial_xx needs an occupancy mask")
        if self.mask is not None and self.mask.num_sites != self.lattice.num_sites:
            raise ValueError("mask does not match lattice size")
        if self.coupling_overrides is not None and self.kind == HEISENBERG:
            raise ValueError("per-pair overrides apply to single-coefficient kinds only")

    @property
    def effective_mask(self) -> OccupancyMask:
        return self.mask if self.mask is not None else full_mask(self.lattice.num_sites)

    @property
    def displacements(self) -> tuple[int, ...]:
        """Compiled displacements: 1..r one-directional, +/-1..r for partial_xx."""
        r = min(self.neighbor_range, self.lattice.num_sites - 1)
        if self.kind == PARTIAL_XX:
            return tuple(s * d for d in range(1, r + 1) for s in (+1, -1))
        return tuple(range(1, r + 1))

    def pair_weights(self, d: int) -> list[tuple[int, int, float]]:
        """Ordered occupied pairs at displacement d with their coupling weights."""
        out = []
        for k, l in displacement_pairs(self.lattice, self.effective_mask, d):
            w = self.chi
            if self.coupling_overrides is not None:
                w = self.coupling_overrides.get((k, l), w)
            out.append((k, l, w))
        return out

    def coupling_table(self) -> dict[tuple[int, int], float]:
        """Site-pair coupling table chi_{k,l} over all compiled displacements."""
        table: dict[tuple[int, int], float] = {}
        for d in self.displacements:
            for k, l, w in self.pair_weights(d):
                table[(k, l)] = table.get((k, l), 0.0) + w
        return table


def coupling_pattern(
    lattice: LatticeConfig, neighbor_range: int, chi: float, symmetric: bool
) -> dict[tuple[int, int], float]:
    """Mask-free coupling table chi_{k,l} for displacements 1..r (and -1..-r if symmetric).

    This is the geometric pattern entering ensemble predictions, where the
    occupation statistics are supplied separately as <h_k h_l>.
    """
    mask = full_mask(lattice.num_sites)
    r = min(neighbor_range, lattice.num_sites - 1)
    displacements = [d for d in range(1, r + 1)]
    if symmetric:
        displacements += [-d for d in range(1, r + 1)]
    table: dict[tuple[int, int], float] = {}
    for d in displacements:
        for k, l in displacement_pairs(lattice, mask, d):
            table[(k, l)] = table.get((k, l), 0.0) + chi
    return table


@dataclass(frozen=True)
class RotationLayer:
    """Global pulse exp(-i*angle*J_axis) on every site."""

    axis: str
    angle: float

    def to_text(self) -> str:
        return f"rotation axis={self.axis} angle={self.angle!r}"


@dataclass(frozen=True)
class CollisionLayer:
    """Phase gates on all pairs of one displacement, in the given basis.

    pairs hold register indices (control carries |1>, target carries |0>);
    phases lists one gate phase per pair.
    """

    basis: str
    displacement: int
    pairs: tuple[tuple[int, int], ...]
    phases: tuple[float, ...]

    def __post_init__(self):
        if self.basis not in ("z", "x", "y"):
            raise ValueError(f"unknown collision basis {self.basis!r}")
        if len(self.pairs) != len(self.phases):
            raise ValueError("need one phase per pair")

    def to_text(self) -> str:
        gates = ";".join(
            f"({k},{l}:{phi!r})" for (k, l), phi in zip(self.pairs, self.phases)
        )
        return (
            f"collision basis={self.basis} displacement={self.displacement:+d} "
            f"gates={gates}"
        )


Layer = RotationLayer | CollisionLayer


@dataclass(frozen=True)
class Schedule:
    """Ordered gate program: layers grouped into steps with their end times."""

    register_size: int
    steps: tuple[tuple[Layer, ...], ...]
    step_times: tuple[float, ...]
    error_order: str
    dt: float | None = None

    def __post_init__(self):
        if len(self.steps) != len(self.step_times):
            raise ValueError("need one end time per step")
        if any(b <= a for a, b in zip(self.step_times, self.step_times[1:])):
            raise ValueError("step times must be strictly increasing")

    @property
    def total_time(self) -> float:
        return self.step_times[-1] if self.step_times else 0.0

    @property
    def num_steps(self) -> int:
        return len(self.steps)

    def layers(self) -> list[Layer]:
        return [layer for step in self.steps for layer in step]

    @property
    def num_collision_layers(self) -> int:
        return sum(isinstance(l, CollisionLayer) for l in self.layers())

    def to_text(self) -> str:
        """Human-readable listing, one layer per line (golden-file format)."""
        lines = [
            f"# schedule register={self.register_size} steps={self.num_steps} "
            f"time={self.total_time!r} error={self.error_order}"
            + (f" dt={self.dt!r}" if self.dt is not None else "")
        ]
        for i, step in enumerate(self.steps):
            for layer in step:
                lines.append(f"step={i} {layer.to_text()}")
        return "\n".join(lines) + "\n"


def _register_map(spec: HamiltonianSpec, register_sites: Sequence[int] | None):
    if register_sites is None:
        register_sites = range(spec.lattice.num_sites)
    mapping = {site: idx for idx, site in enumerate(register_sites)}
    return mapping, len(mapping)


def _collision_layer(
    spec: HamiltonianSpec,
    d: int,
    basis: str,
    duration: float,
    site_to_register: Mapping[int, int],
    coefficient: float | None = None,
) -> CollisionLayer | None:
    """Layer of gates with phi = coupling * duration per pair; None if empty."""
    pairs = []
    phases = []
    for k, l, w in spec.pair_weights(d):
        if k not in site_to_register or l not in site_to_register:
            raise ValueError(f"pair ({k},{l}) not covered by the register mapping")
        weight = w if coefficient is None else coefficient
        pairs.append((site_to_register[k], site_to_register[l]))
        phases.append(weight * duration)
    if not pairs:
        return None
    return CollisionLayer(basis, d, tuple(pairs), tuple(phases))


def compile_zz(
    spec: HamiltonianSpec, t: float, register_sites: Sequence[int] | None = None
) -> Schedule:
    """Diagonal coupling: one z-basis collision layer per displacement, exact.

    All gates commute, so a single pass of phase gates with phi = chi*t per
    pair realizes the full evolution (global phase aside, on a fully occupied
    periodic chain)."""
    if spec.kind != ZZ:
        raise ValueError(f"compile_zz got kind {spec.kind!r}")
    mapping, size = _register_map(spec, register_sites)
    layers = []
    if t != 0.0:
        for d in spec.displacements:
            layer = _collision_layer(spec, d, "z", t, mapping)
            if layer is not None:
                layers.append(layer)
    if not layers:
        return Schedule(size, (), (), EXACT)
    return Schedule(size, (tuple(layers),), (t,), EXACT)


def compile_xx(
    spec: HamiltonianSpec, t: float, register_sites: Sequence[int] | None = None
) -> Schedule:
    """Transverse coupling: x-basis collision layers, exact single pass.

    All j_x operators commute, so no short-step splitting is needed: each
    displacement contributes one full-phase layer.  For partial_xx both
    displacement signs are compiled with the same per-visit phase, which makes
    the coupling table symmetric and cancels the single-site terms pairwise
    for any occupancy pattern."""
    if spec.kind not in (XX, PARTIAL_XX):
        raise ValueError(f"compile_xx got kind {spec.kind!r}")
    mapping, size = _register_map(spec, register_sites)
    layers = []
    if t != 0.0:
        for d in spec.displacements:
            layer = _collision_layer(spec, d, "x", t, mapping)
            if layer is not None:
                layers.append(layer)
    if not layers:
        return Schedule(size, (), (), EXACT)
    return Schedule(size, (tuple(layers),), (t,), EXACT)


def _split_steps(t: float, dt: float) -> tuple[int, float]:
    """Number of split-operator steps and the actual step length.

    Uses n = ceil(t/dt) steps of t/n each, so the schedule ends exactly at t
    with a step no longer than dt."""
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    if t < 0.0:
        raise ValueError("t must be nonnegative")
    if t == 0.0:
        return 0, dt
    n = max(1, math.ceil(t / dt - 1e-12))
    return n, t / n


def compile_heisenberg(
    spec: HamiltonianSpec,
    t: float,
    dt: float,
    register_sites: Sequence[int] | None = None,
) -> Schedule:
    """Anisotropic transverse+diagonal coupling via split-operator steps.

    Each step applies the zz, xx and yy couplings for the step length in that
    order; the per-step error is second order in the step length, first order
    overall.  With eta = lam = 0 the splitting is unnecessary and the exact
    diagonal schedule is returned."""
    if spec.kind != HEISENBERG:
        raise ValueError(f"compile_heisenberg got kind {spec.kind!r}")
    if spec.eta == 0.0 and spec.lam == 0.0:
        zz_spec = HamiltonianSpec(
            ZZ,
            spec.lattice,
            chi=spec.chi,
            neighbor_range=spec.neighbor_range,
            mask=spec.mask,
        )
        return compile_zz(zz_spec, t, register_sites)
    n, step = _split_steps(t, dt)
    mapping, size = _register_map(spec, register_sites)
    sublayers = []
    for basis, coeff in (("z", spec.chi), ("x", spec.eta), ("y", spec.lam)):
        if coeff == 0.0:
            continue
        for d in spec.displacements:
            layer = _collision_layer(spec, d, basis, step, mapping, coefficient=coeff)
            if layer is not None:
                sublayers.append(layer)
    one_step = tuple(sublayers)
    steps = tuple(one_step for _ in range(n))
    times = tuple(step * (i + 1) for i in range(n))
    return Schedule(size, steps, times, FIRST_ORDER, dt=step)


def compile_xx_minus_yy(
    spec: HamiltonianSpec,
    t: float,
    dt: float,
    register_sites: Sequence[int] | None = None,
) -> Schedule:
    """Difference coupling xx - yy via alternating split-operator sublayers.

    The xx sublayer uses phase +chi*step and the yy sublayer the opposite
    phase -chi*step, realizing the negative yy coupling."""
    if spec.kind != XX_MINUS_YY:
        raise ValueError(f"compile_xx_minus_yy got kind {spec.kind!r}")
    n, step = _split_steps(t, dt)
    mapping, size = _register_map(spec, register_sites)
    sublayers = []
    for basis, sign in (("x", +1.0), ("y", -1.0)):
        for d in spec.displacements:
            layer = _collision_layer(
                spec, d, basis, step, mapping, coefficient=sign * spec.chi
            )
            if layer is not None:
                sublayers.append(layer)
    one_step = tuple(sublayers)
    steps = tuple(one_step for _ in range(n))
    times = tuple(step * (i + 1) for i in range(n))
    return Schedule(size, steps, times, FIRST_ORDER, dt=step)


def compile_schedule(
    spec: HamiltonianSpec,
    t: float,
    dt: float | None = None,
    register_sites: Sequence[int] | None = None,
) -> Schedule:
    """Dispatch to the kind-appropriate compiler."""
    if spec.kind == ZZ:
        return compile_zz(spec, t, register_sites)
    if spec.kind in (XX, PARTIAL_XX):
        return compile_xx(spec, t, register_sites)
    if dt is None:
        raise ValueError(f"kind {spec.kind!r} needs a split-operator step dt")
    if spec.kind == HEISENBERG:
        return compile_heisenberg(spec, t, dt, register_sites)
    return compile_xx_minus_yy(spec, t, dt, register_sites)
