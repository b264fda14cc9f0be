"""Translation-equivariant matchings of heads to tails on Z^d.

Meshalkin's bracket matching, the seed/cutter clumping hierarchy and the
matching rule built on it, plus a statistics harness for the displacement
tail and exact mass-transport checks on tori.
"""

__version__ = "0.1.0"

from . import _backend
from .clumping import (ClumpHierarchy, Cutter, EdgeCutLevels, SeedRecord, TruncationReport, build_hierarchy,
                       compute_edge_cutlevels, cutter_reach, cutters_for_level, default_k_max, edge_separated_by,
                       find_seeds, halo_margin, radius_r, shift_s, torus_k_max, truncation_bias)
from .errors import (ArgumentError, ConsistencyError, ContractViolation, DegenerateFitError, DegenerateSampleError,
                     EqMatchError, RangeError, UndecidableError, UnsupportedGeometryError)
from .events import (EventKind, EventReport, K_of_r, TheoryParams, detect_cutter_hits, detect_cutter_tail,
                     detect_enclosed, event_frequencies, theoretical_bound)
from .lattice import (BoxRegion, CoinField, Configuration, Ordering, Torus, Window, generate_configuration,
                      lex_compare, linf_distance, read_configuration, translate_configuration,
                      write_configuration)
from .matching import (Censored, ClumpDiscrepancy, StagedMatching, build_matching, clump_discrepancies,
                       clump_match, displacement, k_bad, match)
from .meshalkin import Matching, Topology, meshalkin_lift, meshalkin_match_line, naive_bracket_oracle
from .tails import SurvivalCurve, estimate_tail, fit_exponent, parse_radii
from .transport import (SparseTransport, biased_unmatched_fraction, kbad_transport, matching_transport,
                        verify_kbad_identity, verify_mass_transport)

backend = _backend.name

__all__ = [
    "ArgumentError",
    "biased_unmatched_fraction",
    "BoxRegion",
    "build_hierarchy",
    "build_matching",
    "Censored",
    "clump_discrepancies",
    "clump_match",
    "ClumpDiscrepancy",
    "ClumpHierarchy",
    "CoinField",
    "compute_edge_cutlevels",
    "Configuration",
    "ConsistencyError",
    "ContractViolation",
    "Cutter",
    "cutter_reach",
    "cutters_for_level",
    "default_k_max",
    "DegenerateFitError",
    "DegenerateSampleError",
    "detect_cutter_hits",
    "detect_cutter_tail",
    "detect_enclosed",
    "displacement",
    "edge_separated_by",
    "EdgeCutLevels",
    "EqMatchError",
    "estimate_tail",
    "event_frequencies",
    "EventKind",
    "EventReport",
    "find_seeds",
    "fit_exponent",
    "generate_configuration",
    "halo_margin",
    "k_bad",
    "K_of_r",
    "kbad_transport",
    "lex_compare",
    "linf_distance",
    "match",
    "Matching",
    "matching_transport",
    "meshalkin_lift",
    "meshalkin_match_line",
    "naive_bracket_oracle",
    "Ordering",
    "parse_radii",
    "radius_r",
    "RangeError",
    "read_configuration",
    "SeedRecord",
    "shift_s",
    "SparseTransport",
    "StagedMatching",
    "SurvivalCurve",
    "theoretical_bound",
    "TheoryParams",
    "Topology",
    "Torus",
    "torus_k_max",
    "translate_configuration",
    "truncation_bias",
    "TruncationReport",
    "UndecidableError",
    "UnsupportedGeometryError",
    "verify_kbad_identity",
    "verify_mass_transport",
    "Window",
    "write_configuration",
    "backend",
    "__version__",
]
