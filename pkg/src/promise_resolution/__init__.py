"""Promise resolution: axioms, proofs, refutations and random 3CNF measures."""

__version__ = "0.1.0"

from .axioms import (
    AxiomCnf,
    CircuitFamily,
    PromiseSpec,
    build_prm,
    derive_spec,
    image_size_expected,
    to_constant_width,
    validate_axiom_instance,
)
from .big_refuter import constant_c, hitting_or_matching, refute_big, refute_via_hitting
from .circuits import Circuit, Gate, encode, eval_circuit, image, images_disjoint, is_injective, truth_table_circuit
from .cnf import (
    CnfFormula,
    VarSpace,
    count_models,
    discarded_assignments,
    is_satisfiable,
    parse_dimacs,
    semantic_implies,
    serialize_dimacs,
)
from .errors import PresError
from .random_lab import (
    RandomSpec,
    boundary,
    eta,
    expansion,
    gen_random_3cnf,
    is_partially_matchable,
    lower_bound_window,
)
from .resolution import Proof, check_proof, min_width, parse_proof, refute_2cnf, serialize_proof

__all__ = [
    "AxiomCnf",
    "Circuit",
    "CircuitFamily",
    "CnfFormula",
    "Gate",
    "PresError",
    "Proof",
    "PromiseSpec",
    "RandomSpec",
    "VarSpace",
    "boundary",
    "build_prm",
    "check_proof",
    "constant_c",
    "count_models",
    "derive_spec",
    "discarded_assignments",
    "encode",
    "eta",
    "eval_circuit",
    "expansion",
    "gen_random_3cnf",
    "hitting_or_matching",
    "image",
    "image_size_expected",
    "images_disjoint",
    "is_injective",
    "is_partially_matchable",
    "is_satisfiable",
    "lower_bound_window",
    "min_width",
    "parse_dimacs",
    "parse_proof",
    "refute_2cnf",
    "refute_big",
    "refute_via_hitting",
    "semantic_implies",
    "serialize_dimacs",
    "serialize_proof",
    "to_constant_width",
    "truth_table_circuit",
    "validate_axiom_instance",
]
