"""Speech-repair detection and correction on word lattices."""

from .lattice import (
    DeletedSegment, LatticeError, LatticeParseError, WordEdge, WordLattice, linear_lattice, parse_lattice,
    serialize_lattice, topological_order,
)
from .lexicon import Lexicon, Triple, match_editing_term, pos_distribution, semantic_class
from .lm import KatzTable, TrigramLM, katz_backoff, train_trigram
from .scope import (
    Candidate, RepairHypothesis, ScopeModelParams, best_segmentation, enumerate_candidates, pair_prob,
    replacement_prob,
)
from .taglattice import PartialPath, TagLattice, build_tag_lattice, expand_post_context, expand_pre_context, score_pos_path
from .training import AnnotatedTurn, CountTables, ModelBundle, RepairAnnotation, collect_counts, estimate_scope_model, train_models
from .pipeline import (
    PipelineConfig, RepairEdit, RepairModels, Trigger, detect_triggers, insert_repair_path, process_turn,
    reconstruct_original,
)
from .evaluation import Metrics, evaluate, select_best_path
from .synth import SynthSpec, build_lexicon, generate_synthetic

__version__ = "0.1.0"
