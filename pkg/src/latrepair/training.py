"""Repair-annotated corpora, count collection and scope-model estimation.

Annotation records are one JSON object per line::

    {"turn_id": "t1", "tokens": ["i", "cannot", "no", "i", "can"],
     "repairs": [{"rd": [0, 2], "et": [2, 3], "rs": [3, 5],
                  "links": [[1, 1], [2, 2]]}]}

Ranges are 0-based half-open token spans.  A link ``[j, i]`` says that
reparandum word ``j`` (1-based within the reparandum) corresponds to
reparans word ``i`` (1-based within the reparans); ``i = 0`` is unlinked.
"""

from __future__ import annotations

import json
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .lexicon import Lexicon
from .lm import UNK, TrigramLM, check_discount, discount_row, katz_backoff, ngram_counts, trigram_from_counts, uniform
from .scope import DEFAULT_WEIGHTS, ScopeModelError, ScopeModelParams
from .taglattice import DEFAULT_WINDOW

BUNDLE_FORMAT = "latrepair-model/1"


class AnnotationError(ValueError):
    pass


@dataclass(frozen=True)
class RepairAnnotation:
    reparandum: tuple[int, int]
    editing_term: tuple[int, int] | None
    reparans: tuple[int, int]
    links: tuple[tuple[int, int], ...]

    @property
    def m(self) -> int:
        return self.reparandum[1] - self.reparandum[0]

    @property
    def l(self) -> int:
        return self.reparans[1] - self.reparans[0]

    @property
    def ip(self) -> int:
        """Token index of the last reparandum word."""
        return self.reparandum[1] - 1

    def to_dict(self) -> dict:
        return {
            "rd": list(self.reparandum),
            "et": list(self.editing_term) if self.editing_term else None,
            "rs": list(self.reparans),
            "links": [list(x) for x in self.links],
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "RepairAnnotation":
        unknown = set(obj) - {"rd", "et", "rs", "links"}
        if unknown:
            raise AnnotationError(f"unknown repair field(s) {sorted(unknown)}")
        et = obj.get("et")
        return cls(
            reparandum=tuple(obj["rd"]),
            editing_term=tuple(et) if et else None,
            reparans=tuple(obj["rs"]),
            links=tuple(tuple(x) for x in obj["links"]),
        )


@dataclass
class AnnotatedTurn:
    turn_id: str
    tokens: list[str]
    repairs: list[RepairAnnotation] = field(default_factory=list)

    def validate(self) -> "AnnotatedTurn":
        n = len(self.tokens)
        spans = []
        for r in self.repairs:
            parts = [("rd", r.reparandum), ("rs", r.reparans)]
            if r.editing_term is not None:
                parts.append(("et", r.editing_term))
            for name, (b, e) in parts:
                if not (0 <= b < e <= n):
                    raise AnnotationError(f"turn {self.turn_id!r}: {name} range [{b}, {e}) outside 0..{n}")
            upper = r.editing_term[0] if r.editing_term else r.reparans[0]
            if r.reparandum[1] > upper or (r.editing_term and r.editing_term[1] > r.reparans[0]):
                raise AnnotationError(f"turn {self.turn_id!r}: repair parts out of order")
            js = sorted(j for j, _ in r.links)
            if js != list(range(1, r.m + 1)):
                raise AnnotationError(f"turn {self.turn_id!r}: links must cover reparandum words 1..{r.m} once")
            for j, i in r.links:
                if not (0 <= i <= r.l):
                    raise AnnotationError(f"turn {self.turn_id!r}: link {j}->{i} outside reparans 0..{r.l}")
            spans.append((r.reparandum[0], r.reparans[1]))
        spans.sort()
        for (b1, e1), (b2, e2) in zip(spans, spans[1:]):
            if b2 < e1:
                raise AnnotationError(f"turn {self.turn_id!r}: overlapping repairs")
        return self

    def to_dict(self) -> dict:
        return {"turn_id": self.turn_id, "tokens": list(self.tokens), "repairs": [r.to_dict() for r in self.repairs]}

    @classmethod
    def from_dict(cls, obj: dict) -> "AnnotatedTurn":
        unknown = set(obj) - {"turn_id", "tokens", "repairs"}
        if unknown:
            raise AnnotationError(f"unknown annotation field(s) {sorted(unknown)}")
        return cls(
            turn_id=str(obj["turn_id"]),
            tokens=[t.lower() for t in obj["tokens"]],
            repairs=[RepairAnnotation.from_dict(r) for r in obj.get("repairs", [])],
        ).validate()


def read_annotations(path: str | Path) -> list[AnnotatedTurn]:
    turns = []
    with open(path, encoding="utf-8") as fh:
        for k, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                turns.append(AnnotatedTurn.from_dict(json.loads(line)))
            except (KeyError, TypeError, json.JSONDecodeError) as exc:
                raise AnnotationError(f"{path}:{k}: malformed annotation record ({exc})") from None
            except AnnotationError as exc:
                raise AnnotationError(f"{path}:{k}: {exc}") from None
    return turns


def write_annotations(turns: Iterable[AnnotatedTurn], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for t in turns:
            fh.write(json.dumps(t.to_dict(), ensure_ascii=False) + "\n")


@dataclass
class CountTables:
    length_counts: Counter = field(default_factory=Counter)  # (m, l)
    align_counts: Counter = field(default_factory=Counter)  # (i, j, m, l)
    word_counts: Counter = field(default_factory=Counter)  # (rd word, rs word | None)
    pos_counts: Counter = field(default_factory=Counter)
    sem_counts: Counter = field(default_factory=Counter)
    word_ngrams: Counter = field(default_factory=Counter)
    pos_ngrams: Counter = field(default_factory=Counter)
    words: set = field(default_factory=set)
    pos_vocab: set = field(default_factory=set)
    sem_vocab: set = field(default_factory=set)
    n_repairs: int = 0
    n_turns: int = 0

    def __add__(self, other: "CountTables") -> "CountTables":
        return CountTables(
            self.length_counts + other.length_counts,
            self.align_counts + other.align_counts,
            self.word_counts + other.word_counts,
            self.pos_counts + other.pos_counts,
            self.sem_counts + other.sem_counts,
            self.word_ngrams + other.word_ngrams,
            self.pos_ngrams + other.pos_ngrams,
            self.words | other.words,
            self.pos_vocab | other.pos_vocab,
            self.sem_vocab | other.sem_vocab,
            self.n_repairs + other.n_repairs,
            self.n_turns + other.n_turns,
        )


def collect_counts(corpus: Iterable[AnnotatedTurn], lex: Lexicon) -> CountTables:
    ct = CountTables(pos_vocab=set(lex.pos_tags), sem_vocab=set(lex.sem_classes))
    for turn in corpus:
        ct.n_turns += 1
        triples = [lex.triple(w) for w in turn.tokens]
        ct.words.update(turn.tokens)
        ct.word_ngrams.update(ngram_counts([turn.tokens]))
        ct.pos_ngrams.update(ngram_counts([[t.pos for t in triples]]))
        for r in turn.repairs:
            m, l = r.m, r.l
            ct.n_repairs += 1
            ct.length_counts[(m, l)] += 1
            for j, i in r.links:
                if not (1 <= j <= m and 0 <= i <= l):
                    raise AnnotationError(f"turn {turn.turn_id!r}: link {j}->{i} outside (m={m}, l={l})")
                ct.align_counts[(i, j, m, l)] += 1
                rd = triples[r.reparandum[0] + j - 1]
                rs = triples[r.reparans[0] + i - 1] if i > 0 else None
                ct.word_counts[(rd.word, rs.word if rs else None)] += 1
                ct.pos_counts[(rd.pos, rs.pos if rs else None)] += 1
                ct.sem_counts[(rd.sem, rs.sem if rs else None)] += 1
    return ct


def _conditional(pairs: Counter) -> dict:
    rows: dict = defaultdict(Counter)
    for (event, ctx), c in sorted(pairs.items(), key=lambda kv: (str(kv[0][1]), str(kv[0][0]))):
        rows[ctx][event] += c
    return rows


def estimate_scope_model(counts: CountTables, weights=DEFAULT_WEIGHTS, theta: float = -math.inf,
                         window: int = DEFAULT_WINDOW, discount: float = 0.5) -> ScopeModelParams:
    check_discount(discount)
    if counts.n_repairs == 0:
        raise ScopeModelError("no repairs in the training counts; the scope model cannot be trained")
    W = window

    # length model P(m | l), backing off to the pooled distribution of m
    len_rows = defaultdict(Counter)
    for (m, l), c in counts.length_counts.items():
        if m <= W and l <= W:
            len_rows[l][m] += c
    len_table = katz_backoff(len_rows, list(range(1, W + 1)), discount)
    length = np.array([[len_table.prob(m, l) for l in range(1, W + 1)] for m in range(1, W + 1)])

    # alignment model P(i | j, m, l), backing off to uniform over 0..l
    align = np.zeros((W + 1, W, W, W))
    align_rows = defaultdict(Counter)
    for (i, j, m, l), c in counts.align_counts.items():
        if m <= W and l <= W:
            align_rows[(j, m, l)][i] += c
    for l in range(1, W + 1):
        lower = uniform(range(l + 1))
        for m in range(1, W + 1):
            for j in range(1, m + 1):
                seen, bow = discount_row(align_rows.get((j, m, l), {}), lower, discount)
                for i in range(l + 1):
                    align[i, j - 1, m - 1, l - 1] = seen.get(i, bow * lower[i])

    word_vocab = sorted(counts.words | {w for w, _ in counts.word_counts} | {UNK})
    pos_vocab = sorted(counts.pos_vocab | {p for p, _ in counts.pos_counts})
    sem_vocab = sorted(counts.sem_vocab | {s for s, _ in counts.sem_counts})
    unk_pos = "UNK" if "UNK" in pos_vocab else None
    unk_sem = "UNK" if "UNK" in sem_vocab else None
    params = ScopeModelParams(
        length=length,
        alignment=align,
        word_repl=katz_backoff(_conditional(counts.word_counts), word_vocab, discount, unk=UNK),
        pos_repl=katz_backoff(_conditional(counts.pos_counts), pos_vocab, discount, unk=unk_pos),
        sem_repl=katz_backoff(_conditional(counts.sem_counts), sem_vocab, discount, unk=unk_sem),
        weights=tuple(weights),
        accept_threshold=theta,
        window=W,
    )
    return params.validate()


@dataclass
class ModelBundle:
    """Everything the repair pipeline needs besides the lexicon."""

    scope: ScopeModelParams
    pos_lm: TrigramLM
    word_lm: TrigramLM
    summary: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "format": BUNDLE_FORMAT,
            "summary": self.summary,
            "scope": self.scope.to_dict(),
            "pos_lm": self.pos_lm.to_dict(),
            "word_lm": self.word_lm.to_dict(),
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "ModelBundle":
        if obj.get("format") != BUNDLE_FORMAT:
            raise ScopeModelError(f"unsupported model bundle {obj.get('format')!r}, expected {BUNDLE_FORMAT!r}")
        return cls(
            scope=ScopeModelParams.from_dict(obj["scope"]),
            pos_lm=TrigramLM.from_dict(obj["pos_lm"]),
            word_lm=TrigramLM.from_dict(obj["word_lm"]),
            summary=obj.get("summary", {}),
        )

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, separators=(",", ":")) + "\n"

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps(), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "ModelBundle":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def train_models(corpus: Sequence[AnnotatedTurn], lex: Lexicon, weights=DEFAULT_WEIGHTS,
                 theta: float = -math.inf, window: int = DEFAULT_WINDOW, discount: float = 0.5) -> ModelBundle:
    counts = collect_counts(corpus, lex)
    scope = estimate_scope_model(counts, weights, theta, window, discount)
    summary = {
        "turns": counts.n_turns,
        "repairs": counts.n_repairs,
        "links": sum(counts.word_counts.values()),
        "word_vocab": len(scope.word_repl.vocab),
        "pos_tags": len(scope.pos_repl.vocab),
        "sem_classes": len(scope.sem_repl.vocab),
    }
    return ModelBundle(
        scope=scope,
        pos_lm=trigram_from_counts(counts.pos_ngrams, discount),
        word_lm=trigram_from_counts(counts.word_ngrams, discount),
        summary=summary,
    )
