"""Vectorized density-matrix dynamics for time-dependent spin Hamiltonians.

The density matrix is expanded over the Hermitian Pauli-string basis,
turning unitary evolution into orthogonal rotations of a real coefficient
vector.  The package provides the algebra (``pauli``), three classical
propagators (``liouville``), an independent dense integrator used as
ground truth (``oracle``), a statevector emulation of the phase-kickback
readout circuit (``circuit``), two reference models (``models``) and a
CLI (``cli``).
"""

from .errors import (
    ConfigError,
    ResourceLimitError,
    SingularityError,
    StructureConsistencyError,
)
from .liouville import (
    Trajectory,
    alpha_rhs,
    m_generator,
    m_product,
    m_single,
    propagate_alpha_exact,
    propagate_classical_ode,
    propagate_lie_euler,
    v_matrix,
)
from .pauli import (
    PauliBasis,
    PauliString,
    StructureTensor,
    build_basis,
    build_structure_tensor,
    commutator_coeffs,
    multiply,
    project,
    reconstruct,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "ResourceLimitError",
    "SingularityError",
    "StructureConsistencyError",
    "PauliBasis",
    "PauliString",
    "StructureTensor",
    "build_basis",
    "build_structure_tensor",
    "commutator_coeffs",
    "multiply",
    "project",
    "reconstruct",
    "Trajectory",
    "alpha_rhs",
    "m_generator",
    "m_product",
    "m_single",
    "propagate_alpha_exact",
    "propagate_classical_ode",
    "propagate_lie_euler",
    "v_matrix",
    "__version__",
]
