"""Tools for engineering spin-1 lattice models with trapped polar molecules:
hyperfine spectroscopy, dipole-dipole potential curves, microwave-dressed
effective pair Hamiltonians, field-parameter optimization, and many-body
verification (exact diagonalization / infinite MPS).
"""

from .angular import EulerAngles, HalfInt, clebsch_gordan, wigner_6j, wigner_9j, wigner_d1
from .designer import (
    DesignResult,
    TargetModel,
    design_error,
    evaluate_design,
    isotropic_projection,
    optimize_fields,
    traceless_operator_norm,
)
from .effective import (
    BRANCH_COUNTS,
    GROUND_PAIR_BASIS,
    MicrowaveField,
    PairOperator,
    SaturationAmplitude,
    asymptotic_effective_hamiltonian,
    carrier_frequency,
    coupling_matrix,
    effective_pair_hamiltonian,
    load_field_set,
    rotate_interaction,
    saturation_amplitude,
    spherical_polarization,
    write_field_set,
    write_pair_operator_csv,
)
from .errors import (
    ConfigError,
    ConvergenceError,
    ResourceError,
    SingularityError,
    Spin1ForgeError,
)
from .molecule import (
    CACL,
    BasisLabel,
    HyperfineLevel,
    MoleculeSpec,
    basis_labels,
    build_and_diagonalize,
    closed_form_levels,
    dipole_element,
    hm_element,
)
from .pairpot import (
    PairBasisState,
    PairHamiltonian,
    PotentialCurve,
    asymptotic_curves,
    build_pair_hamiltonian,
    dd_coefficient,
    dipole_coupling,
    pair_states,
    potential_curves,
    write_curves_csv,
)

__all__ = [
    "HalfInt",
    "EulerAngles",
    "clebsch_gordan",
    "wigner_6j",
    "wigner_9j",
    "wigner_d1",
    "Spin1ForgeError",
    "ConfigError",
    "ResourceError",
    "SingularityError",
    "ConvergenceError",
    "MoleculeSpec",
    "BasisLabel",
    "HyperfineLevel",
    "CACL",
    "basis_labels",
    "hm_element",
    "dipole_element",
    "build_and_diagonalize",
    "closed_form_levels",
    "PairBasisState",
    "PairHamiltonian",
    "PotentialCurve",
    "dipole_coupling",
    "dd_coefficient",
    "pair_states",
    "build_pair_hamiltonian",
    "potential_curves",
    "asymptotic_curves",
    "write_curves_csv",
    "BRANCH_COUNTS",
    "GROUND_PAIR_BASIS",
    "MicrowaveField",
    "PairOperator",
    "SaturationAmplitude",
    "spherical_polarization",
    "carrier_frequency",
    "coupling_matrix",
    "saturation_amplitude",
    "effective_pair_hamiltonian",
    "asymptotic_effective_hamiltonian",
    "rotate_interaction",
    "load_field_set",
    "write_field_set",
    "write_pair_operator_csv",
    "TargetModel",
    "DesignResult",
    "traceless_operator_norm",
    "isotropic_projection",
    "design_error",
    "evaluate_design",
    "optimize_fields",
]

__version__ = "0.1.0"
