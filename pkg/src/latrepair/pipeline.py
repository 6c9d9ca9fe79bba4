"""Trigger -> scope search -> lattice splice cascade for one turn."""

from __future__ import annotations

import copy
import logging
import time
from dataclasses import dataclass, field
from typing import NamedTuple

from .lattice import DeletedSegment, LatticeError, WordEdge, WordLattice, topological_order
from .lexicon import Lexicon
from .lm import BOS, TrigramLM
from .scope import RepairHypothesis, ScopeModelError, ScopeModelParams, search_best
from .taglattice import DEFAULT_BEAM, DEFAULT_WINDOW, build_tag_lattice, expand_post_context, expand_pre_context
from .training import ModelBundle

log = logging.getLogger(__name__)

ACOUSTIC = "acoustic"
FRAGMENT = "fragment"


class PipelineError(ValueError):
    pass


@dataclass
class PipelineConfig:
    tau_ip: float = 0.5
    enable_fragment_trigger: bool = True
    window: int = DEFAULT_WINDOW
    beam: int = DEFAULT_BEAM
    theta: float | None = None  # None: use the model's threshold
    budget_ms: float = 10000.0

    def __post_init__(self):
        if not (0.0 <= self.tau_ip <= 1.0):
            raise PipelineError(f"tau_ip must lie in [0, 1], got {self.tau_ip}")
        if not self.budget_ms > 0:
            raise PipelineError(f"budget_ms must be positive, got {self.budget_ms}")
        if self.window < 1 or self.beam < 1:
            raise PipelineError("window and beam must be >= 1")


class Trigger(NamedTuple):
    kind: str
    edge_id: int
    ip_prob: float


class RepairModels(NamedTuple):
    scope: ScopeModelParams
    pos_lm: TrigramLM
    word_lm: TrigramLM
    lexicon: Lexicon

    @classmethod
    def from_bundle(cls, bundle: ModelBundle, lexicon: Lexicon) -> "RepairModels":
        return cls(bundle.scope, bundle.pos_lm, bundle.word_lm, lexicon)


@dataclass
class RepairEdit:
    hypothesis: RepairHypothesis
    inserted_edge_ids: list[int]
    carrier_edge_id: int
    reparandum_words: list[str]
    editing_term_words: list[str]
    reparans_words: list[str]
    offset: float

    @property
    def ip_edge(self) -> int:
        return self.hypothesis.candidate.pre_edge_ids[-1]

    def to_record(self) -> dict:
        c = self.hypothesis.candidate
        return {
            "ip_edge": self.ip_edge,
            "rd_edges": list(c.pre_edge_ids),
            "et_edges": list(c.editing_edge_ids),
            "rs_edges": list(c.post_edge_ids),
            "rd_words": self.reparandum_words,
            "et_words": self.editing_term_words,
            "rs_words": self.reparans_words,
            "score": self.hypothesis.score,
            "offset": self.offset,
            "carrier_edge": self.carrier_edge_id,
            "inserted_edges": self.inserted_edge_ids,
        }


@dataclass
class TurnResult:
    lattice: WordLattice
    edits: list[RepairEdit] = field(default_factory=list)
    truncated: bool = False

    def sidecar(self) -> dict:
        return {
            "turn_id": self.lattice.turn_id,
            "truncated": self.truncated,
            "edits": [e.to_record() for e in self.edits],
        }


def detect_triggers(lattice: WordLattice, config: PipelineConfig) -> list[Trigger]:
    rank = {n: k for k, n in enumerate(topological_order(lattice))}
    found = []
    for e in lattice.edges:
        if e.repair_slot is not None:
            continue
        if config.enable_fragment_trigger and e.fragment:
            found.append(Trigger(FRAGMENT, e.edge_id, e.ip_prob))
        elif e.ip_prob >= config.tau_ip:
            found.append(Trigger(ACOUSTIC, e.edge_id, e.ip_prob))
    found.sort(key=lambda t: (rank[lattice.edge(t.edge_id).from_node], rank[lattice.edge(t.edge_id).to_node],
                              t.edge_id))
    return found


def histories_at(lattice: WordLattice, node: int) -> set[tuple[str, str]]:
    """Two-word histories (boundary-padded) of the paths reaching ``node``."""
    if node == lattice.start_node:
        return {(BOS, BOS)}
    inc = lattice.in_edges()
    hist = set()
    for e1 in inc.get(node, ()):
        if e1.from_node == lattice.start_node:
            hist.add((BOS, e1.word))
        for e2 in inc.get(e1.from_node, ()):
            hist.add((e2.word, e1.word))
    return hist


def _chain(lattice: WordLattice, ids) -> list[WordEdge]:
    edges = [lattice.edge(i) for i in ids]
    for a, b in zip(edges, edges[1:]):
        if a.to_node != b.from_node:
            raise LatticeError(f"edges {a.edge_id} and {b.edge_id} are not adjacent")
    return edges


def deletion_offset(lattice: WordLattice, deleted: list[WordEdge], lm: TrigramLM) -> float:
    """Acoustic scores of the deleted words plus their best LM transitions.

    Each deleted word is scored with the highest trigram log-probability over
    the histories that can precede the reparandum onset, extended by the
    deleted words before it.
    """
    hists = sorted(histories_at(lattice, deleted[0].from_node))
    words = [e.word for e in deleted]
    total = 0.0
    for e in deleted:
        total += e.acoustic_score
    for k, w in enumerate(words):
        total += max(lm.logprob(w, list(h + tuple(words[:k]))[-2:]) for h in hists)
    return total


def insert_repair_path(lattice: WordLattice, hypothesis: RepairHypothesis, word_lm: TrigramLM) -> RepairEdit:
    """Add a path from the reparandum onset that repeats the reparans.

    The reparandum and editing term are stored in a slot on the first copied
    word, whose acoustic score also absorbs their score so the repaired path
    stays comparable to the original.
    """
    cand = hypothesis.candidate
    rd = _chain(lattice, cand.pre_edge_ids)
    et = _chain(lattice, cand.editing_edge_ids) if cand.editing_edge_ids else []
    rs = _chain(lattice, cand.post_edge_ids)
    whole = rd + et + rs
    for a, b in zip(whole, whole[1:]):
        if a.to_node != b.from_node:
            raise LatticeError(f"repair parts do not form a path at edges {a.edge_id}/{b.edge_id}")
    deleted = rd + et
    offset = deletion_offset(lattice, deleted, word_lm)
    onset = rd[0].from_node
    target = rs[-1].to_node
    inserted = []
    prev = onset
    next_id = lattice.next_edge_id()
    for k, src in enumerate(rs):
        nxt = target if k == len(rs) - 1 else lattice.add_node()
        edge = WordEdge(next_id + k, prev, nxt, src.word, src.acoustic_score, src.ip_prob, src.fragment)
        if k == 0:
            edge.acoustic_score = src.acoustic_score + offset
            edge.repair_slot = DeletedSegment(
                reparandum_words=[e.word for e in rd],
                editing_term_words=[e.word for e in et],
                original_edge_ids=[e.edge_id for e in deleted],
                score_offset=offset,
            )
        lattice.add_edge(edge)
        inserted.append(edge.edge_id)
        prev = nxt
    return RepairEdit(
        hypothesis=hypothesis,
        inserted_edge_ids=inserted,
        carrier_edge_id=inserted[0],
        reparandum_words=[e.word for e in rd],
        editing_term_words=[e.word for e in et],
        reparans_words=[e.word for e in rs],
        offset=offset,
    )


def reconstruct_original(lattice: WordLattice, edit: RepairEdit) -> list[str]:
    carrier = lattice.edge(edit.carrier_edge_id)
    slot = carrier.repair_slot
    if slot is None:
        raise LatticeError(f"edge {carrier.edge_id} carries no deleted segment")
    reparans = [lattice.edge(i).word for i in edit.inserted_edge_ids]
    return [*slot.reparandum_words, *slot.editing_term_words, *reparans]


def _check_models(models: RepairModels, config: PipelineConfig) -> None:
    if not isinstance(models.scope, ScopeModelParams) or models.pos_lm is None or models.word_lm is None:
        raise ScopeModelError("pipeline needs a trained scope model and both trigrams")
    if config.window > models.scope.window:
        raise ScopeModelError(f"window {config.window} exceeds the model's trained window {models.scope.window}")


def process_turn(lattice: WordLattice, models: RepairModels, config: PipelineConfig | None = None) -> TurnResult:
    config = config or PipelineConfig()
    _check_models(models, config)
    t0 = time.perf_counter()
    budget = config.budget_ms / 1000.0
    theta = models.scope.accept_threshold if config.theta is None else config.theta
    out = copy.deepcopy(lattice)
    result = TurnResult(out)
    triggers = detect_triggers(lattice, config)
    if not triggers:
        return result
    tl = build_tag_lattice(lattice, models.lexicon)
    used: set[int] = set()
    for trig in triggers:
        if time.perf_counter() - t0 > budget:
            result.truncated = True
            log.info("turn %s: budget of %.1f ms exhausted after %d edits", lattice.turn_id, config.budget_ms,
                     len(result.edits))
            break
        if trig.edge_id in used:
            continue
        pres = expand_pre_context(tl, trig.edge_id, config.window, config.beam, models.pos_lm)
        posts = expand_post_context(tl, trig.edge_id, config.window, config.beam, models.pos_lm, models.lexicon)
        hyp = search_best(models.scope, pres, posts, trig.edge_id, config.window, theta)
        if hyp is None:
            continue
        c = hyp.candidate
        span = set(c.pre_edge_ids) | set(c.editing_edge_ids) | set(c.post_edge_ids)
        if span & used:
            continue
        result.edits.append(insert_repair_path(out, hyp, models.word_lm))
        used |= span
    log.debug("turn %s: %d triggers, %d edits, %.2f ms", lattice.turn_id, len(triggers), len(result.edits),
              1000 * (time.perf_counter() - t0))
    return result
