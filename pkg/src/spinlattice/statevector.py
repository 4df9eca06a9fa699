"""Exact state vector of a register of spin-1/2 lattice atoms, plus its primitive gates.

Conventions
-----------
* Basis index bit k encodes site k: bit value 1 is the internal state
  |1> = |1/2,+1/2>, bit value 0 is |0> = |1/2,-1/2>.
* Single-site spin operators follow the standard angular-momentum algebra
  [j_a, j_b] = i eps_abc j_c with hbar = 1, written in the (|0>, |1>) ordering:

      j_x = 1/2 [[0, 1], [1, 0]]
      j_y = 1/2 [[0, i], [-i, 0]]
      j_z = 1/2 [[-1, 0], [0, 1]]

* Pulses are active rotations exp(-i * angle * J_axis), so a y-pulse of
  angle pi/2 carries the -z coherent state onto the -x coherent state.
* The collision gate multiplies the |1>_k |0>_l component by exp(i*phi) and
  leaves the other three two-site components untouched.

Operations mutate the amplitude array in place and return the same object;
a StateVector is owned by a single evolution at a time.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

#: Hard cap on register width: 2**22 complex amplitudes (64 MB).
MAX_SITES = 22

_UNITARY_TOL = 1e-12


class CapacityError(ValueError):
    """A requested register or operator exceeds the configured size cap."""


class StateVector:
    """Dense array of 2**num_sites complex amplitudes of a spin-1/2 register."""

    __slots__ = ("num_sites", "amplitudes")

    def __init__(self, num_sites: int, amplitudes: np.ndarray):
        num_sites = int(num_sites)
        if not 1 <= num_sites <= MAX_SITES:
            raise CapacityError(
                f"register size {num_sites} outside supported range 1..{MAX_SITES}"
            )
        amplitudes = np.asarray(amplitudes, dtype=np.complex128)
        if amplitudes.shape != (2**num_sites,):
            raise ValueError(
                f"amplitude array of length {amplitudes.shape} does not match "
                f"2**{num_sites} basis states"
            )
        self.num_sites = num_sites
        self.amplitudes = amplitudes

    def copy(self) -> "StateVector":
        return StateVector(self.num_sites, self.amplitudes.copy())

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def _tensor_view(self) -> np.ndarray:
        """Amplitudes reshaped to (2,)*num_sites; axis (num_sites-1-k) is site k."""
        return self.amplitudes.reshape((2,) * self.num_sites)

    def _axis(self, site: int) -> int:
        return self.num_sites - 1 - site

    def __repr__(self) -> str:
        return f"StateVector(num_sites={self.num_sites})"


@dataclass(frozen=True)
class PhaseGate:
    """Two-site collision gate: phase exp(i*phi) on the |1>_control |0>_target component."""

    control_site: int
    target_site: int
    phi: float


def new_register(num_sites: int) -> StateVector:
    """Register with every atom in |0> = |1/2,-1/2>: amplitude 1 on basis index 0."""
    if not 1 <= num_sites <= MAX_SITES:
        raise CapacityError(
            f"register size {num_sites} outside supported range 1..{MAX_SITES}"
        )
    amplitudes = np.zeros(2**num_sites, dtype=np.complex128)
    amplitudes[0] = 1.0
    return StateVector(num_sites, amplitudes)


def _check_site(state: StateVector, site: int) -> None:
    if not 0 <= site < state.num_sites:
        raise IndexError(f"site {site} outside register of {state.num_sites} sites")


def apply_phase_gate(state: StateVector, gate: PhaseGate) -> StateVector:
    """Multiply every basis state with bit_control = 1 and bit_target = 0 by exp(i*phi)."""
    k, l = gate.control_site, gate.target_site
    _check_site(state, k)
    _check_site(state, l)
    if k == l:
        raise ValueError("phase gate needs two distinct sites")
    view = state._tensor_view()
    sel: list = [slice(None)] * state.num_sites
    sel[state._axis(k)] = 1
    sel[state._axis(l)] = 0
    view[tuple(sel)] *= cmath.exp(1j * gate.phi)
    return state


def apply_single_site_unitary(state: StateVector, site: int, u: np.ndarray) -> StateVector:
    """Apply a 2x2 matrix to one site, basis order (|0>, |1>)."""
    _check_site(state, site)
    # middle axis of (outer, 2, 2**site) is the site's bit
    psi3 = state.amplitudes.reshape(-1, 2, 1 << site)
    a0 = psi3[:, 0, :].copy()
    a1 = psi3[:, 1, :]
    psi3[:, 0, :] = u[0, 0] * a0 + u[0, 1] * a1
    psi3[:, 1, :] = u[1, 0] * a0 + u[1, 1] * a1
    return state


def rotation_matrix(axis: str, angle: float) -> np.ndarray:
    """2x2 matrix of exp(-i*angle*j_axis), basis order (|0>, |1>)."""
    c = math.cos(angle / 2.0)
    s = math.sin(angle / 2.0)
    if axis == "x":
        return np.array([[c, -1j * s], [-1j * s, c]], dtype=np.complex128)
    if axis == "y":
        return np.array([[c, s], [-s, c]], dtype=np.complex128)
    if axis == "z":
        return np.array(
            [[complex(c, s), 0.0], [0.0, complex(c, -s)]], dtype=np.complex128
        )
    raise ValueError(f"unknown rotation axis {axis!r}")


def site_rotation(state: StateVector, site: int, axis: str, angle: float) -> StateVector:
    """Apply exp(-i*angle*j_axis) to a single site."""
    return apply_single_site_unitary(state, site, rotation_matrix(axis, angle))


def collective_rotation(state: StateVector, axis: str, angle: float) -> StateVector:
    """Apply exp(-i*angle*J_axis) = the same single-site pulse on every site.

    Heisenberg-picture moments transform by the classical rotation, e.g. for
    axis="y": J_z -> J_z cos(angle) - J_x sin(angle).
    """
    u = rotation_matrix(axis, angle)
    for site in range(state.num_sites):
        apply_single_site_unitary(state, site, u)
    return state


def apply_two_site_unitary(
    state: StateVector, k: int, l: int, u: np.ndarray
) -> StateVector:
    """Apply a 4x4 unitary to sites (k, l).

    The 4x4 basis order is |b_k b_l> = (00, 01, 10, 11), i.e. index 2*b_k + b_l,
    so diag(1, 1, exp(i*phi), 1) reproduces the collision phase gate.
    """
    _check_site(state, k)
    _check_site(state, l)
    if k == l:
        raise ValueError("two-site unitary needs two distinct sites")
    u = np.asarray(u, dtype=np.complex128)
    if u.shape != (4, 4):
        raise ValueError("two-site unitary must be 4x4")
    if not np.allclose(u.conj().T @ u, np.eye(4), atol=_UNITARY_TOL, rtol=0.0):
        raise ValueError("matrix is not unitary within 1e-12")
    view = state._tensor_view()
    ax_k, ax_l = state._axis(k), state._axis(l)
    slabs = []
    for b_k in (0, 1):
        for b_l in (0, 1):
            sel: list = [slice(None)] * state.num_sites
            sel[ax_k] = b_k
            sel[ax_l] = b_l
            slabs.append(tuple(sel))
    old = np.stack([view[s] for s in slabs])
    new = np.tensordot(u, old, axes=(1, 0))
    for s, block in zip(slabs, new):
        view[s] = block
    return state


def site_magnetization(state: StateVector, site: int) -> float:
    """<j_z> of one site: (P[bit=1] - P[bit=0]) / 2, in [-1/2, 1/2]."""
    _check_site(state, site)
    view = state._tensor_view()
    sel: list = [slice(None)] * state.num_sites
    sel[state._axis(site)] = 1
    up = view[tuple(sel)]
    p_up = float(np.real(np.vdot(up, up)))
    sel[state._axis(site)] = 0
    down = view[tuple(sel)]
    p_down = float(np.real(np.vdot(down, down)))
    return 0.5 * (p_up - p_down)


def all_site_magnetizations(state: StateVector) -> np.ndarray:
    """<j_z,k> for every site k as a length-num_sites array."""
    probs = np.abs(state.amplitudes) ** 2
    total = probs.sum()
    idx = np.arange(probs.size, dtype=np.int64)
    out = np.empty(state.num_sites)
    for site in range(state.num_sites):
        p_up = float(probs @ ((idx >> site) & 1))
        out[site] = p_up - 0.5 * total
    return out


def fidelity(a: StateVector, b: StateVector) -> float:
    """|<a|b>|, the global-phase-free overlap of two states."""
    if a.num_sites != b.num_sites:
        raise ValueError("states live on different register sizes")
    return float(abs(np.vdot(a.amplitudes, b.amplitudes)))
