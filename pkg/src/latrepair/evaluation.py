"""Best-path selection with a word trigram and repair detection / scope metrics."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import Iterable, Mapping, NamedTuple, Sequence

from .lattice import LatticeError, WordLattice, topological_order
from .lm import BOS, EOS, TrigramLM
from .training import AnnotatedTurn

# reference layout only; these came from a corpus we do not have
PAPER_REFERENCE = {
    "Test 1": (49.0, 70.0, 47.0, 70.0),
    "Test 2": (71.0, 85.0, 62.0, 83.0),
}


class EvaluationError(ValueError):
    pass


class BestPath(NamedTuple):
    words: list[str]
    score: float
    edge_ids: list[int]


def select_best_path(lattice: WordLattice, lm: TrigramLM) -> BestPath:
    """Viterbi over (node, two-word history) states.

    A path scores the sum over its edges of acoustic score plus trigram
    log-probability, plus the end-of-sentence transition.  Equal scores go
    to the lexicographically smallest edge-id sequence.
    """
    out = lattice.out_edges()
    states: dict[int, dict[tuple[str, str], tuple[float, tuple[int, ...]]]] = {
        lattice.start_node: {(BOS, BOS): (0.0, ())}
    }
    best = None
    for node in topological_order(lattice):
        here = states.pop(node, None)
        if not here:
            continue
        if node == lattice.end_node:
            for hist, (score, path) in here.items():
                total = score + lm.logprob(EOS, list(hist))
                if best is None or total > best[0] or (total == best[0] and path < best[1]):
                    best = (total, path)
            continue
        for hist, (score, path) in here.items():
            for e in out.get(node, ()):
                s = score + (e.acoustic_score + lm.logprob(e.word, list(hist)))
                p = path + (e.edge_id,)
                nh = (hist[1], e.word)
                bucket = states.setdefault(e.to_node, {})
                cur = bucket.get(nh)
                if cur is None or s > cur[0] or (s == cur[0] and p < cur[1]):
                    bucket[nh] = (s, p)
    if best is None:
        raise LatticeError(f"no start-to-end path in turn {lattice.turn_id!r}")
    ids = list(best[1])
    return BestPath([lattice.edge(i).word for i in ids], best[0], ids)


def path_terms(lattice: WordLattice, edge_ids: Sequence[int], lm: TrigramLM) -> list[tuple[str, float]]:
    """Per-term decomposition of a path score: acoustic and LM term per edge, then end of sentence."""
    terms = []
    hist = [BOS, BOS]
    for i in edge_ids:
        e = lattice.edge(i)
        terms.append((f"ac:{i}", e.acoustic_score))
        terms.append((f"lm:{i}", lm.logprob(e.word, hist)))
        hist = [hist[1], e.word]
    terms.append(("lm:</s>", lm.logprob(EOS, hist)))
    return terms


def path_score(lattice: WordLattice, edge_ids: Sequence[int], lm: TrigramLM) -> float:
    score = 0.0
    hist = [BOS, BOS]
    for i in edge_ids:
        e = lattice.edge(i)
        score += e.acoustic_score + lm.logprob(e.word, hist)
        hist = [hist[1], e.word]
    return score + lm.logprob(EOS, hist)


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------


class Span(NamedTuple):
    ip: int
    rd: tuple[int, int]
    rs: tuple[int, int]


def span_from_record(rec: Mapping) -> Span:
    """Prediction span from an edit record; edge ids of a linear lattice are token positions."""
    rd = list(rec["rd_edges"])
    rs = list(rec["rs_edges"])
    return Span(int(rec["ip_edge"]), (min(rd), max(rd) + 1), (min(rs), max(rs) + 1))


def _as_span(p) -> Span:
    if isinstance(p, Span):
        return p
    if isinstance(p, Mapping):
        return span_from_record(p)
    if hasattr(p, "to_record"):
        return span_from_record(p.to_record())
    raise EvaluationError(f"cannot interpret prediction {p!r}")


@dataclass
class Metrics:
    detection_recall: float
    detection_precision: float
    scope_recall: float
    scope_precision: float
    gold: int
    predicted: int
    detection_hits: int
    scope_hits: int

    def to_dict(self) -> dict:
        return asdict(self)

    @property
    def scope_f1(self) -> float:
        r, p = self.scope_recall, self.scope_precision
        return 0.0 if r + p == 0 else 2 * r * p / (r + p)

    def table(self, label: str = "Result", reference: Mapping[str, Sequence[float]] | None = None) -> str:
        rows = [(label, (self.detection_recall, self.detection_precision, self.scope_recall, self.scope_precision))]
        for name, vals in (reference or {}).items():
            rows.append((name, tuple(vals)))
        width = max(8, *(len(r[0]) for r in rows))
        head1 = f"{'':<{width}} | {'Detection':^19} | {'Correct scope':^19}"
        head2 = f"{'':<{width}} | {'Recall':>8} {'Precision':>10} | {'Recall':>8} {'Precision':>10}"
        rule = "-" * len(head2)
        lines = [head1, head2, rule]
        for name, (dr, dp, sr, sp) in rows:
            lines.append(f"{name:<{width}} | {dr:>7.1f}% {dp:>9.1f}% | {sr:>7.1f}% {sp:>9.1f}%")
        lines.append(rule)
        lines.append(f"gold={self.gold} predicted={self.predicted} "
                     f"detection_hits={self.detection_hits} scope_hits={self.scope_hits}")
        return "\n".join(lines)


def _pct(hits: int, total: int) -> float:
    return 100.0 * hits / total if total else 0.0


def evaluate(gold: Iterable[AnnotatedTurn], predicted: Mapping[str, Iterable]) -> Metrics:
    """Detection = IP position match; correct scope = detection with exact reparandum and reparans spans."""
    gold = list(gold)
    known = {t.turn_id for t in gold}
    unknown = sorted(set(predicted) - known)
    if unknown:
        raise EvaluationError(f"predictions for unknown turn id(s) {unknown[:5]}")
    n_gold = n_pred = det = scope = 0
    for turn in gold:
        g = sorted(Span(r.ip, tuple(r.reparandum), tuple(r.reparans)) for r in turn.repairs)
        p = sorted(_as_span(x) for x in predicted.get(turn.turn_id, ()))
        n_gold += len(g)
        n_pred += len(p)
        free = list(g)
        for pred in p:
            for k, cand in enumerate(free):
                if cand.ip == pred.ip:
                    det += 1
                    if cand.rd == pred.rd and cand.rs == pred.rs:
                        scope += 1
                    del free[k]
                    break
    return Metrics(_pct(det, n_gold), _pct(det, n_pred), _pct(scope, n_gold), _pct(scope, n_pred),
                   n_gold, n_pred, det, scope)


def read_predictions(path) -> dict[str, list[dict]]:
    preds: dict[str, list[dict]] = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                rec = json.loads(line)
                preds.setdefault(rec["turn_id"], []).extend(rec.get("edits", []))
    return preds


def calibrate_threshold(scored: Mapping[str, Sequence[tuple[float, Span]]], gold: Sequence[AnnotatedTurn],
                        min_detection_recall: float = 0.0) -> tuple[float, Metrics]:
    """Pick the acceptance threshold that maximizes correct-scope F1.

    ``scored`` holds, per turn, every hypothesis found with the threshold
    disabled.  Each observed score is tried as a threshold; among equally
    good ones the lowest wins, keeping recall up.  Thresholds whose
    detection recall falls below ``min_detection_recall`` are skipped.
    """
    values = sorted({s for hyps in scored.values() for s, _ in hyps})
    if not values:
        return -math.inf, evaluate(gold, {})
    best = None
    for theta in values:
        preds = {tid: [sp for s, sp in hyps if s >= theta] for tid, hyps in scored.items()}
        m = evaluate(gold, preds)
        if m.detection_recall < min_detection_recall:
            continue
        if best is None or m.scope_f1 > best[1].scope_f1:
            best = (theta, m)
    if best is None:
        theta = values[0]
        best = (theta, evaluate(gold, {tid: [sp for _, sp in h] for tid, h in scored.items()}))
    return best
