"""Covariant phase observables, phase-space observables and double homodyne
couplings on a truncated Fock space."""

from .errors import (
    ConfigError,
    ConvergenceError,
    PhasekitError,
    SpecParseError,
    TruncationError,
    ValidationError,
)
from .quadrature import AnglePartition, QuadratureGrid, gauss_laguerre_grid, radial_grid
from .fock import DensityMatrix, FockVector, TwoModeVector, make_state, random_density
from .phase import (
    MarkovKernel,
    PhaseEffect,
    PhaseMatrix,
    StructureVectors,
    angle_kernel_integral,
    check_covariance,
    circular_variance,
    commutator_defect,
    joint_observable,
    phase_distribution,
    phase_effect,
    post_process,
    structure_vectors,
)
from .phasespace import (
    PhaseSpaceEffect,
    RadialProfile,
    covariantize,
    margins,
    profile_dirac,
    profile_F,
    profile_G,
    psc_effect,
    radial_bins,
)
from .couplings import (
    CouplingKernel,
    RnsIndex,
    WMatrix,
    apply_kernel,
    o_angle_effect,
    o_effect,
    o_rad_effect,
    rns_pack,
    rns_unpack,
    u_kernel,
    v_kernel,
    w_column_vacuum,
    w_matrix,
)
from .homodyne import (
    JointDensityTable,
    conjugate_state,
    double_homodyne_dist,
    gsigma_effect,
    modified_scheme_phase_dist,
    sample_outcomes,
)
from .instruments import (
    InstrumentOutput,
    canonical_nuclear_instrument,
    dilation_check,
    rank1_covariant_instrument,
    swap_hamiltonian_check,
)
from .config import RunConfig

__version__ = "0.1.0"
