"""weakgadgets: build gadget Hamiltonians from weak couplings and verify them
by exact numerics at desk scale.

The package follows the construction pipeline: ``pauli`` holds the operator
representation, ``model`` the target Hamiltonians, ``gadget2``/``gadget3``
the builders, ``analysis`` the perturbation-theory engine, ``verify`` the
spectral ground truth, and ``cli`` the command-line front end.
"""

__version__ = "0.1.0"

from .errors import (
    GadgetError,
    MalformedInputError,
    NumericError,
    ResourceLimitError,
    WrongBuilderError,
)
from .gadget2 import (
    GadgetHamiltonian,
    GadgetPlan,
    build_core,
    build_gadget,
    desk_plan,
    ground_gap_of_H,
    plan_parameters,
    trivial_gadget,
)
from .gadget3 import (
    Direct3Plan,
    SerialPlan,
    amplify,
    direct3_plan,
    build_direct_3local,
    build_serial_3body,
    build_stage1_gadget,
)
from .model import (
    CoupledTerm,
    InteractionGraph,
    TargetHamiltonian,
    interaction_graph,
    pauli_degree,
    split_strong_terms,
    validate,
)
from .pauli import PauliSum, PauliTerm, canonicalize, embed, operator_norm, to_sparse_operator

__all__ = [
    "__version__",
    "GadgetError",
    "MalformedInputError",
    "NumericError",
    "ResourceLimitError",
    "WrongBuilderError",
    "GadgetHamiltonian",
    "GadgetPlan",
    "build_core",
    "build_gadget",
    "desk_plan",
    "ground_gap_of_H",
    "plan_parameters",
    "trivial_gadget",
    "Direct3Plan",
    "SerialPlan",
    "amplify",
    "direct3_plan",
    "build_direct_3local",
    "build_serial_3body",
    "build_stage1_gadget",
    "CoupledTerm",
    "InteractionGraph",
    "TargetHamiltonian",
    "interaction_graph",
    "pauli_degree",
    "split_strong_terms",
    "validate",
    "PauliSum",
    "PauliTerm",
    "canonicalize",
    "embed",
    "operator_norm",
    "to_sparse_operator",
]
