"""Exact simulation of collisional spin-1/2 dynamics and squeezing on 1-D lattices."""

from .evolution import (
    DENSE_MAX_SITES,
    DenseEvolver,
    EvolutionTrace,
    build_dense_hamiltonian,
    dense_evolve,
    run_schedule,
)
from .lattice import (
    LatticeConfig,
    OccupancyMask,
    displacement_pairs,
    exact_count_pair_correlation,
    full_mask,
    pair_correlation,
    pair_correlation_matrix,
    sample_occupancy,
)
from .observables import (
    MomentSet,
    SqueezingReport,
    analytic_jz_one_neighbor,
    analytic_variance_one_neighbor,
    analytic_xi2_one_neighbor,
    collective_moments,
    initial_slope_prediction,
    min_variance_theta,
    minimize_on_grid,
    squeezing_report,
    xi_squared,
)
from .schedule import (
    HEISENBERG,
    PARTIAL_XX,
    XX,
    XX_MINUS_YY,
    ZZ,
    CollisionLayer,
    HamiltonianSpec,
    RotationLayer,
    Schedule,
    compile_heisenberg,
    compile_schedule,
    compile_xx,
    compile_xx_minus_yy,
    compile_zz,
    coupling_pattern,
)
from .statevector import (
    MAX_SITES,
    CapacityError,
    PhaseGate,
    StateVector,
    all_site_magnetizations,
    apply_phase_gate,
    apply_two_site_unitary,
    collective_rotation,
    fidelity,
    new_register,
    site_magnetization,
    site_rotation,
)

__version__ = "0.1.0"
