"""Word lattices: data model, validation, ordering and the line-record format.

A lattice is a DAG over integer node ids.  Each edge carries a lower-cased
word, a natural-log acoustic score, the probability that an interruption
point follows the word, and a word-fragment flag.  Edges inserted by the
repair pipeline additionally carry a :class:`DeletedSegment` so that the
original disfluent path can be recovered.

Records are one JSON object per line::

    {"turn_id": "t1", "nodes": [0, 1], "start": 0, "end": 1,
     "edges": [{"id": 0, "from": 0, "to": 1, "word": "hello",
                "acoustic": -1.0, "ip_prob": 0.0, "fragment": false}]}
"""

from __future__ import annotations

import json
import math
from collections import defaultdict, deque
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence


class LatticeError(ValueError):
    """Structural problem with a lattice (cycle, dangling node, bad score...)."""


class LatticeParseError(LatticeError):
    """A record could not be decoded into a lattice."""

    def __init__(self, message: str, line: int | None = None, field_name: str | None = None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field_name is not None:
            where.append(f"field {field_name!r}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)
        self.line = line
        self.field_name = field_name


@dataclass
class DeletedSegment:
    """Reparandum and editing term removed by a splice, kept for reconstruction."""

    reparandum_words: list[str]
    editing_term_words: list[str]
    original_edge_ids: list[int]
    score_offset: float

    def __post_init__(self):
        if not self.reparandum_words:
            raise LatticeError("deleted segment needs a non-empty reparandum")
        if not self.original_edge_ids:
            raise LatticeError("deleted segment needs original edge ids")


@dataclass
class WordEdge:
    edge_id: int
    from_node: int
    to_node: int
    word: str
    acoustic_score: float = 0.0
    ip_prob: float = 0.0
    fragment: bool = False
    repair_slot: DeletedSegment | None = None


@dataclass
class WordLattice:
    turn_id: str
    nodes: list[int]
    edges: list[WordEdge]
    start_node: int
    end_node: int
    _by_id: dict[int, WordEdge] = field(default=None, init=False, repr=False, compare=False)

    def edge(self, edge_id: int) -> WordEdge:
        if self._by_id is None or len(self._by_id) != len(self.edges):
            self._by_id = {e.edge_id: e for e in self.edges}
        try:
            return self._by_id[edge_id]
        except KeyError:
            raise LatticeError(f"no edge with id {edge_id} in turn {self.turn_id!r}") from None

    def out_edges(self) -> dict[int, list[WordEdge]]:
        out: dict[int, list[WordEdge]] = defaultdict(list)
        for e in self.edges:
            out[e.from_node].append(e)
        return out

    def in_edges(self) -> dict[int, list[WordEdge]]:
        inc: dict[int, list[WordEdge]] = defaultdict(list)
        for e in self.edges:
            inc[e.to_node].append(e)
        return inc

    def add_node(self) -> int:
        node = max(self.nodes) + 1
        self.nodes.append(node)
        return node

    def next_edge_id(self) -> int:
        return max((e.edge_id for e in self.edges), default=-1) + 1

    def add_edge(self, edge: WordEdge) -> WordEdge:
        self.edges.append(edge)
        self._by_id = None
        return edge

    def is_linear(self) -> bool:
        """True when the lattice is a single chain from start to end."""
        out = self.out_edges()
        return all(len(v) == 1 for v in out.values()) and len(self.edges) == len(self.nodes) - 1

    def path_edges(self) -> list[WordEdge]:
        """Edges of a linear lattice in order."""
        if not self.is_linear():
            raise LatticeError(f"turn {self.turn_id!r} is not a linear lattice")
        out = self.out_edges()
        node, path = self.start_node, []
        while node != self.end_node:
            e = out[node][0]
            path.append(e)
            node = e.to_node
        return path


def validate_lattice(lattice: WordLattice) -> WordLattice:
    """Check every structural invariant and return the lattice unchanged."""
    node_set = set(lattice.nodes)
    if len(node_set) != len(lattice.nodes):
        raise LatticeError(f"duplicate node ids in turn {lattice.turn_id!r}")
    if lattice.start_node not in node_set:
        raise LatticeError(f"start node {lattice.start_node} not in node set")
    if lattice.end_node not in node_set:
        raise LatticeError(f"end node {lattice.end_node} not in node set")
    if lattice.start_node == lattice.end_node:
        raise LatticeError("start and end node coincide")
    if not lattice.edges:
        raise LatticeError(f"turn {lattice.turn_id!r} has no edges")
    seen_ids = set()
    for e in lattice.edges:
        if e.edge_id in seen_ids:
            raise LatticeError(f"duplicate edge id {e.edge_id}")
        seen_ids.add(e.edge_id)
        if e.from_node == e.to_node:
            raise LatticeError(f"edge {e.edge_id} is a self-loop on node {e.from_node}")
        for n in (e.from_node, e.to_node):
            if n not in node_set:
                raise LatticeError(f"edge {e.edge_id} references unknown node {n}")
        if not (0.0 <= e.ip_prob <= 1.0):
            raise LatticeError(f"edge {e.edge_id} ip_prob {e.ip_prob} outside [0, 1]")
        if not (e.acoustic_score <= 0.0) or math.isnan(e.acoustic_score):
            raise LatticeError(f"edge {e.edge_id} acoustic score {e.acoustic_score} is not a log-probability")
        if not e.word:
            raise LatticeError(f"edge {e.edge_id} has an empty word")
    topological_order(lattice)
    forward = _reachable(lattice.start_node, lattice.out_edges(), "to_node")
    backward = _reachable(lattice.end_node, lattice.in_edges(), "from_node")
    for n in lattice.nodes:
        if n not in forward or n not in backward:
            raise LatticeError(f"node {n} does not lie on a start-to-end path")
    return lattice


def _reachable(origin: int, adjacency: dict[int, list[WordEdge]], attr: str) -> set[int]:
    seen = {origin}
    queue = deque([origin])
    while queue:
        n = queue.popleft()
        for e in adjacency.get(n, ()):
            m = getattr(e, attr)
            if m not in seen:
                seen.add(m)
                queue.append(m)
    return seen


def topological_order(lattice: WordLattice) -> list[int]:
    """Kahn's algorithm; ties resolved by the smallest node id first."""
    import heapq

    indeg = {n: 0 for n in lattice.nodes}
    out = lattice.out_edges()
    for e in lattice.edges:
        indeg[e.to_node] = indeg.get(e.to_node, 0) + 1
    heap = [n for n, d in indeg.items() if d == 0]
    heapq.heapify(heap)
    order = []
    while heap:
        n = heapq.heappop(heap)
        order.append(n)
        for e in out.get(n, ()):
            indeg[e.to_node] -= 1
            if indeg[e.to_node] == 0:
                heapq.heappush(heap, e.to_node)
    if len(order) != len(indeg):
        stuck = sorted(n for n, d in indeg.items() if d > 0)
        raise LatticeError(f"cycle through node(s) {stuck} in turn {lattice.turn_id!r}")
    return order


# ---------------------------------------------------------------------------
# Line records
# ---------------------------------------------------------------------------

_LATTICE_KEYS = {"turn_id", "nodes", "start", "end", "edges"}
_EDGE_KEYS = {"id", "from", "to", "word", "acoustic", "ip_prob", "fragment"}
_EDGE_OPTIONAL = {"repair_slot"}
_SLOT_KEYS = {"reparandum", "editing_term", "original_edges", "offset"}


def _check_keys(obj, required, optional, what, line):
    if not isinstance(obj, dict):
        raise LatticeParseError(f"{what} must be an object", line)
    unknown = set(obj) - required - optional
    if unknown:
        raise LatticeParseError(f"unknown {what} field(s) {sorted(unknown)}", line, sorted(unknown)[0])
    missing = required - set(obj)
    if missing:
        raise LatticeParseError(f"missing {what} field(s) {sorted(missing)}", line, sorted(missing)[0])


def _num(value, name, line) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise LatticeParseError(f"expected a number, got {value!r}", line, name)
    return float(value)


def _int(value, name, line) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise LatticeParseError(f"expected an integer, got {value!r}", line, name)
    return value


def lattice_from_dict(obj: dict, line: int | None = None) -> WordLattice:
    _check_keys(obj, _LATTICE_KEYS, set(), "lattice", line)
    if not isinstance(obj["turn_id"], str):
        raise LatticeParseError("turn_id must be a string", line, "turn_id")
    if not isinstance(obj["nodes"], list):
        raise LatticeParseError("nodes must be a list", line, "nodes")
    nodes = [_int(n, "nodes", line) for n in obj["nodes"]]
    if not isinstance(obj["edges"], list):
        raise LatticeParseError("edges must be a list", line, "edges")
    edges = []
    for raw in obj["edges"]:
        _check_keys(raw, _EDGE_KEYS, _EDGE_OPTIONAL, "edge", line)
        if not isinstance(raw["word"], str):
            raise LatticeParseError("word must be a string", line, "word")
        if not isinstance(raw["fragment"], bool):
            raise LatticeParseError("fragment must be a boolean", line, "fragment")
        slot = None
        if raw.get("repair_slot") is not None:
            s = raw["repair_slot"]
            _check_keys(s, _SLOT_KEYS, set(), "repair_slot", line)
            try:
                slot = DeletedSegment(
                    reparandum_words=[str(w) for w in s["reparandum"]],
                    editing_term_words=[str(w) for w in s["editing_term"]],
                    original_edge_ids=[_int(i, "original_edges", line) for i in s["original_edges"]],
                    score_offset=_num(s["offset"], "offset", line),
                )
            except LatticeError as exc:
                if isinstance(exc, LatticeParseError):
                    raise
                raise LatticeParseError(str(exc), line, "repair_slot") from None
        edges.append(
            WordEdge(
                edge_id=_int(raw["id"], "id", line),
                from_node=_int(raw["from"], "from", line),
                to_node=_int(raw["to"], "to", line),
                word=raw["word"],
                acoustic_score=_num(raw["acoustic"], "acoustic", line),
                ip_prob=_num(raw["ip_prob"], "ip_prob", line),
                fragment=raw["fragment"],
                repair_slot=slot,
            )
        )
    lattice = WordLattice(
        turn_id=obj["turn_id"],
        nodes=nodes,
        edges=edges,
        start_node=_int(obj["start"], "start", line),
        end_node=_int(obj["end"], "end", line),
    )
    return validate_lattice(lattice)


def lattice_to_dict(lattice: WordLattice) -> dict:
    edges = []
    for e in lattice.edges:
        rec = {
            "id": e.edge_id,
            "from": e.from_node,
            "to": e.to_node,
            "word": e.word,
            "acoustic": e.acoustic_score,
            "ip_prob": e.ip_prob,
            "fragment": e.fragment,
        }
        if e.repair_slot is not None:
            s = e.repair_slot
            rec["repair_slot"] = {
                "reparandum": list(s.reparandum_words),
                "editing_term": list(s.editing_term_words),
                "original_edges": list(s.original_edge_ids),
                "offset": s.score_offset,
            }
        edges.append(rec)
    return {
        "turn_id": lattice.turn_id,
        "nodes": list(lattice.nodes),
        "start": lattice.start_node,
        "end": lattice.end_node,
        "edges": edges,
    }


def parse_lattice(text: str, line: int | None = None) -> WordLattice:
    """Decode one serialized record into a validated lattice."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise LatticeParseError(f"invalid JSON ({exc.msg} at column {exc.colno})", line) from None
    return lattice_from_dict(obj, line)


def serialize_lattice(lattice: WordLattice) -> str:
    """Single-line record; floats use repr so parsing restores them bit-exactly."""
    validate_lattice(lattice)
    return json.dumps(lattice_to_dict(lattice), ensure_ascii=False, separators=(", ", ": "))


def read_lattices(lines: Iterable[str]) -> Iterator[WordLattice]:
    for i, text in enumerate(lines, start=1):
        if text.strip():
            yield parse_lattice(text, line=i)


# ---------------------------------------------------------------------------
# Transliterations
# ---------------------------------------------------------------------------


def parse_token(token: str, line: int | None = None) -> tuple[str, float, bool]:
    """Split ``word|ip=0.83|frag`` into (word, ip_prob, fragment)."""
    word, *suffixes = token.split("|")
    ip_prob, fragment = 0.0, False
    for suf in suffixes:
        if suf == "frag":
            fragment = True
        elif suf.startswith("ip="):
            try:
                ip_prob = float(suf[3:])
            except ValueError:
                raise LatticeParseError(f"bad ip annotation {suf!r} on token {token!r}", line, "ip") from None
        else:
            raise LatticeParseError(f"unknown token annotation {suf!r} on {token!r}", line, suf)
    if not word:
        raise LatticeParseError(f"empty word in token {token!r}", line)
    return word.lower(), ip_prob, fragment


def format_token(word: str, ip_prob: float = 0.0, fragment: bool = False) -> str:
    parts = [word]
    if ip_prob:
        parts.append(f"ip={ip_prob!r}")
    if fragment:
        parts.append("frag")
    return "|".join(parts)


def linear_lattice(tokens: Sequence[str], turn_id: str) -> WordLattice:
    """Chain lattice for a transliterated turn; token ``i`` becomes edge ``i``."""
    if not tokens:
        raise LatticeError(f"turn {turn_id!r} has no tokens")
    edges = []
    for i, tok in enumerate(tokens):
        word, ip_prob, fragment = parse_token(tok)
        edges.append(WordEdge(i, i, i + 1, word, 0.0, ip_prob, fragment))
    lattice = WordLattice(turn_id, list(range(len(tokens) + 1)), edges, 0, len(tokens))
    return validate_lattice(lattice)


def parse_transliteration_line(text: str, line_no: int | None = None) -> tuple[str, list[str]]:
    """``turn_id<TAB>tok tok ...`` or bare tokens (turn id then derived from the line number)."""
    if "\t" in text:
        turn_id, rest = text.split("\t", 1)
    else:
        turn_id, rest = f"turn{line_no if line_no is not None else 0:06d}", text
    return turn_id.strip(), rest.split()
