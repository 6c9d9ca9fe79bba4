"""POS tag lattice and windowed partial-path expansion around an interruption point."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import NamedTuple

from .lattice import WordEdge, WordLattice
from .lexicon import Lexicon, Triple, match_editing_term, pos_distribution, semantic_class
from .lm import TrigramLM

DEFAULT_WINDOW = 4
DEFAULT_BEAM = 10


class TagWord(NamedTuple):
    triple: Triple
    acoustic_score: float
    edge_id: int
    ip_prob: float
    fragment: bool


@dataclass
class TagEdge:
    from_node: int
    to_node: int
    pos: str
    prob: float
    words: list[TagWord] = field(default_factory=list)


@dataclass
class TagLattice:
    nodes: list[int]
    tag_edges: list[TagEdge]
    source: WordLattice

    def __post_init__(self):
        self._tags_of: dict[int, list[str]] = {}
        self._sem_of: dict[int, str] = {}
        for te in self.tag_edges:
            for w in te.words:
                self._tags_of.setdefault(w.edge_id, []).append(te.pos)
                self._sem_of[w.edge_id] = w.triple.sem

    def tags_of(self, edge_id: int) -> list[str]:
        return self._tags_of[edge_id]

    def sem_of(self, edge_id: int) -> str:
        return self._sem_of[edge_id]


@dataclass(frozen=True)
class PartialPath:
    """A materialized word path with the tags chosen along it.

    ``skipped_edge_ids`` lists editing-term edges jumped over between the
    interruption point and the first triple (post-context paths only).
    """

    triples: tuple[Triple, ...]
    edge_ids: tuple[int, ...]
    pos_score: float
    skipped_edge_ids: tuple[int, ...] = ()

    def __len__(self):
        return len(self.triples)


def build_tag_lattice(lattice: WordLattice, lex: Lexicon) -> TagLattice:
    merged: dict[tuple[int, int, str], TagEdge] = {}
    for e in lattice.edges:
        sem = semantic_class(lex, e.word)
        for tag, p in pos_distribution(lex, e.word):
            key = (e.from_node, e.to_node, tag)
            te = merged.get(key)
            if te is None:
                te = merged[key] = TagEdge(e.from_node, e.to_node, tag, 0.0)
            te.prob += p
            te.words.append(TagWord(Triple(e.word, tag, sem), e.acoustic_score, e.edge_id, e.ip_prob, e.fragment))
    return TagLattice(list(lattice.nodes), list(merged.values()), lattice)


def score_pos_path(trigram: TrigramLM, tags, bos: bool = True) -> float:
    """POS trigram log-probability; ``bos`` conditions the first tags on sentence start."""
    return trigram.score(list(tags), bos=bos, eos=False)


def _backward_paths(lattice: WordLattice, ip: WordEdge, window: int) -> list[list[WordEdge]]:
    inc = lattice.in_edges()
    done = []
    stack = [[ip]]
    while stack:
        path = stack.pop()
        head = path[0].from_node
        preds = inc.get(head, [])
        if len(path) == window or head == lattice.start_node or not preds:
            done.append(path)
            continue
        for e in preds:
            stack.append([e, *path])
    return done


def _forward_paths(lattice: WordLattice, node: int, depth: int) -> list[list[WordEdge]]:
    out = lattice.out_edges()
    done = []
    stack: list[list[WordEdge]] = [[]]
    while stack:
        path = stack.pop()
        tail = path[-1].to_node if path else node
        succ = out.get(tail, [])
        if len(path) == depth or tail == lattice.end_node or not succ:
            if path:
                done.append(path)
            continue
        for e in succ:
            stack.append([*path, e])
    return done


def _materialize(tl: TagLattice, edges: list[WordEdge], trigram: TrigramLM, bos: bool, skipped=()):
    choices = [tl.tags_of(e.edge_id) for e in edges]
    sems = [tl.sem_of(e.edge_id) for e in edges]
    ids = tuple(e.edge_id for e in edges)
    for tags in itertools.product(*choices):
        triples = tuple(Triple(e.word, t, s) for e, t, s in zip(edges, tags, sems))
        yield PartialPath(triples, ids, score_pos_path(trigram, tags, bos=bos), tuple(skipped))


def _rank(paths: list[PartialPath], beam: int) -> list[PartialPath]:
    paths.sort(key=lambda p: (-p.pos_score, p.skipped_edge_ids, p.edge_ids, tuple(t.pos for t in p.triples)))
    return paths[:beam]


def expand_pre_context(tl: TagLattice, ip_edge: int, window: int = DEFAULT_WINDOW, beam: int = DEFAULT_BEAM,
                       trigram: TrigramLM | None = None) -> list[PartialPath]:
    """Best ``beam`` paths of up to ``window`` words ending with the IP word.

    Paths are as long as the window allows; shorter ones only occur when the
    lattice start cuts them off.
    """
    lattice = tl.source
    ip = lattice.edge(ip_edge)
    paths = []
    for edges in _backward_paths(lattice, ip, window):
        bos = edges[0].from_node == lattice.start_node
        paths.extend(_materialize(tl, edges, trigram, bos))
    return _rank(paths, beam)


def expand_post_context(tl: TagLattice, ip_edge: int, window: int = DEFAULT_WINDOW, beam: int = DEFAULT_BEAM,
                        trigram: TrigramLM | None = None, lex: Lexicon | None = None) -> list[tuple[int, PartialPath]]:
    """Candidate reparans contexts after the IP, editing terms skipped.

    Returns ``(editing_term_length, path)`` pairs; the path's
    ``skipped_edge_ids`` holds the editing-term edges.
    """
    lattice = tl.source
    ip = lattice.edge(ip_edge)
    max_et = lex.max_editing_len if lex is not None else 0
    seen = set()
    paths = []
    for edges in _forward_paths(lattice, ip.to_node, max_et + window):
        n_et = match_editing_term(lex, [e.word for e in edges]) if lex is not None else 0
        ctx = edges[n_et:n_et + window]
        if not ctx:
            continue
        key = (tuple(e.edge_id for e in edges[:n_et]), tuple(e.edge_id for e in ctx))
        if key in seen:
            continue
        seen.add(key)
        paths.extend(_materialize(tl, ctx, trigram, bos=False, skipped=key[0]))
    return [(len(p.skipped_edge_ids), p) for p in _rank(paths, beam)]
