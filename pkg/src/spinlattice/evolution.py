"""Execute schedules against state vectors, and the dense brute-force oracle.

The schedule executor realizes basis-x/y collision layers by sandwiching the
phase gates between global pulses (see the schedule module for the sign
conventions).  The dense path assembles the coupling literally as a sum of
two-site operator embeddings and exponentiates it by eigendecomposition; it is
deliberately independent of the gate path so the two can cross-check each
other.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from . import schedule as sched
from .observables import MomentSet, collective_moments
from .schedule import CollisionLayer, HamiltonianSpec, RotationLayer, Schedule
from .statevector import (
    CapacityError,
    PhaseGate,
    StateVector,
    all_site_magnetizations,
    apply_phase_gate,
    collective_rotation,
)

#: Dense matrices are capped at 2**12 x 2**12 to keep the oracle in seconds.
DENSE_MAX_SITES = 12

_HERMITIAN_TOL = 1e-12

#: Single-site spin matrices in the (|0>, |1>) ordering used by the register.
J_SINGLE = {
    "x": 0.5 * np.array([[0.0, 1.0], [1.0, 0.0]], dtype=np.complex128),
    "y": 0.5 * np.array([[0.0, 1.0j], [-1.0j, 0.0]], dtype=np.complex128),
    "z": 0.5 * np.array([[-1.0, 0.0], [0.0, 1.0]], dtype=np.complex128),
}


@dataclass(frozen=True)
class EvolutionTrace:
    """Observable records along a schedule execution.

    times are the snapshot times (strictly increasing, always including start
    and end); site_z rows hold <j_z,k> per site, moments the collective-spin
    moment sets, each present only if probed."""

    times: np.ndarray
    site_z: np.ndarray | None = None
    moments: tuple[MomentSet, ...] | None = None


def _enter_basis(state: StateVector, basis: str) -> None:
    if basis == "x":
        collective_rotation(state, "y", -np.pi / 2)
    elif basis == "y":
        collective_rotation(state, "x", +np.pi / 2)


def _leave_basis(state: StateVector, basis: str) -> None:
    if basis == "x":
        collective_rotation(state, "y", +np.pi / 2)
    elif basis == "y":
        collective_rotation(state, "x", -np.pi / 2)


def _apply_collision_group(state: StateVector, layers: list[CollisionLayer]) -> None:
    """Apply consecutive same-basis collision layers under one pulse sandwich.

    All collision gates are diagonal in the rotated frame, so adjacent layers
    of one basis share the sandwich exactly."""
    _enter_basis(state, layers[0].basis)
    for layer in layers:
        for (k, l), phi in zip(layer.pairs, layer.phases):
            apply_phase_gate(state, PhaseGate(k, l, phi))
    _leave_basis(state, layers[0].basis)


def apply_layer(state: StateVector, layer) -> None:
    """Apply one schedule layer in place."""
    if isinstance(layer, CollisionLayer):
        _apply_collision_group(state, [layer])
    elif isinstance(layer, RotationLayer):
        collective_rotation(state, layer.axis, layer.angle)
    else:
        raise TypeError(f"unknown layer type {type(layer).__name__}")


def apply_layers(state: StateVector, layers) -> None:
    """Apply a layer sequence, batching same-basis collision runs into one sandwich."""
    group: list[CollisionLayer] = []
    for layer in layers:
        if isinstance(layer, CollisionLayer) and (
            not group or layer.basis == group[0].basis
        ):
            group.append(layer)
            continue
        if group:
            _apply_collision_group(state, group)
            group = []
        if isinstance(layer, CollisionLayer):
            group.append(layer)
        else:
            apply_layer(state, layer)
    if group:
        _apply_collision_group(state, group)


def run_schedule(
    state: StateVector,
    schedule: Schedule,
    snapshot_every: int = 1,
    probes: Iterable[str] = ("site_z",),
) -> EvolutionTrace:
    """Apply the schedule's steps in order, recording probes along the way.

    Probes are recorded at t = 0, after every `snapshot_every`-th step, and at
    the end.  Supported probes: "site_z" (per-site magnetization) and
    "moments" (collective-spin moments).  The state is mutated in place and is
    the final state when this returns."""
    if schedule.register_size != state.num_sites:
        raise ValueError(
            f"schedule register size {schedule.register_size} does not match "
            f"state of {state.num_sites} sites"
        )
    probes = set(probes)
    unknown = probes - {"site_z", "moments"}
    if unknown:
        raise ValueError(f"unknown probes {sorted(unknown)}")
    if snapshot_every < 1:
        raise ValueError("snapshot_every must be >= 1")

    times = [0.0]
    site_rows = [all_site_magnetizations(state)] if "site_z" in probes else None
    moment_rows = [collective_moments(state)] if "moments" in probes else None

    def record(t: float) -> None:
        times.append(t)
        if site_rows is not None:
            site_rows.append(all_site_magnetizations(state))
        if moment_rows is not None:
            moment_rows.append(collective_moments(state))

    n_steps = schedule.num_steps
    for i, step in enumerate(schedule.steps):
        apply_layers(state, step)
        if (i + 1) % snapshot_every == 0 or i == n_steps - 1:
            record(schedule.step_times[i])

    return EvolutionTrace(
        times=np.array(times),
        site_z=np.array(site_rows) if site_rows is not None else None,
        moments=tuple(moment_rows) if moment_rows is not None else None,
    )


def _embed_pair(op_a: np.ndarray, a: int, op_b: np.ndarray, b: int, n: int) -> np.ndarray:
    """Kronecker embedding of op_a on site a and op_b on site b (bit k = site k)."""
    out = np.array([[1.0 + 0.0j]])
    for site in reversed(range(n)):
        if site == a:
            out = np.kron(out, op_a)
        elif site == b:
            out = np.kron(out, op_b)
        else:
            out = np.kron(out, np.eye(2, dtype=np.complex128))
    return out


def build_dense_hamiltonian(spec: HamiltonianSpec) -> np.ndarray:
    """Assemble the coupling literally as a 2^M x 2^M Hermitian matrix.

    Terms follow the spec's coupling table: one j_a (x) j_a term per ordered
    pair per compiled displacement (so the partial_xx symmetric table counts
    each unordered pair twice, once per direction)."""
    m = spec.lattice.num_sites
    if m > DENSE_MAX_SITES:
        raise CapacityError(
            f"dense matrix for {m} sites exceeds the {DENSE_MAX_SITES}-site cap"
        )
    dim = 2**m
    h = np.zeros((dim, dim), dtype=np.complex128)
    if spec.kind == sched.HEISENBERG:
        axis_coeffs = (("z", spec.chi), ("x", spec.eta), ("y", spec.lam))
        for d in spec.displacements:
            for k, l, _ in spec.pair_weights(d):
                for axis, coeff in axis_coeffs:
                    if coeff == 0.0:
                        continue
                    h += coeff * _embed_pair(J_SINGLE[axis], k, J_SINGLE[axis], l, m)
        return h
    if spec.kind == sched.ZZ:
        axis_terms = (("z", +1.0),)
    elif spec.kind in (sched.XX, sched.PARTIAL_XX):
        axis_terms = (("x", +1.0),)
    else:  # xx_minus_yy
        axis_terms = (("x", +1.0), ("y", -1.0))
    for d in spec.displacements:
        for k, l, w in spec.pair_weights(d):
            for axis, sign in axis_terms:
                h += sign * w * _embed_pair(J_SINGLE[axis], k, J_SINGLE[axis], l, m)
    return h


class DenseEvolver:
    """exp(-iHt) by one-time eigendecomposition, for repeated evolution times."""

    def __init__(self, hamiltonian: np.ndarray):
        hamiltonian = np.asarray(hamiltonian, dtype=np.complex128)
        if hamiltonian.ndim != 2 or hamiltonian.shape[0] != hamiltonian.shape[1]:
            raise ValueError("hamiltonian must be a square matrix")
        scale = max(1.0, float(np.abs(hamiltonian).max()))
        if not np.allclose(
            hamiltonian, hamiltonian.conj().T, atol=_HERMITIAN_TOL * scale, rtol=0.0
        ):
            raise ValueError("hamiltonian is not Hermitian within 1e-12")
        self.eigenvalues, self.eigenvectors = np.linalg.eigh(hamiltonian)

    def evolve(self, state: StateVector, t: float) -> StateVector:
        """Return exp(-iHt)|state> as a new StateVector."""
        dim = self.eigenvalues.size
        if state.amplitudes.size != dim:
            raise ValueError(
                f"state dimension {state.amplitudes.size} does not match "
                f"hamiltonian dimension {dim}"
            )
        coeffs = self.eigenvectors.conj().T @ state.amplitudes
        coeffs *= np.exp(-1j * self.eigenvalues * t)
        num_sites = int(round(np.log2(dim)))
        return StateVector(num_sites, self.eigenvectors @ coeffs)


def dense_evolve(hamiltonian: np.ndarray, state: StateVector, t: float) -> StateVector:
    """One-shot exp(-iHt)|state>; use DenseEvolver for many times with one H."""
    return DenseEvolver(hamiltonian).evolve(state, t)
