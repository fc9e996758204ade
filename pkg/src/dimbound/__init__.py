"""Certified bounds on quantum correlation functionals under dimension limits."""

from .algebra import (Alphabet, Letter, RankClass, RankSymmetry, Word,
                      enumerate_rank_classes, enumerate_words, poly_adjoint,
                      poly_hermitize, poly_is_hermitian)
from .basis import (BasisExhausted, BasisResult, DegenerateSupport,
                    accumulate_basis, orthonormalize_stack, support_isometry)
from .moment import (build_moment_matrix, build_symbolic_basis, realify,
                     word_entry_table)
from .relax import (AssemblyError, SdpInstance, SweepConfig, SweepResult,
                    assemble_hybrid_sdp, assemble_sdp, assemble_unconstrained_sdp,
                    compute_bound, named_level_index, sweep_classes,
                    sweep_hybrid_classes)
from .sampler import (Representation, evaluate_objective, relabel_representation,
                      sample_representation, stream_rng)
from .scenario import LetterSpec, Scenario
from .scnfile import (RunSpec, ScnParseError, load_scenario, parse_scenario_text,
                      serialize_scenario)
from .seesaw import SeesawError, SeesawResult, seesaw_lower_bound
from .solver import SolveReport, SolverError, export_sdpa, read_sdpa, solve_sdp
from .verify import (basis_stability_report, brute_force_classical,
                     check_d2_identities, check_standard_identity,
                     sandwich_report, standard_identity_value)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
