"""Katz back-off estimation with absolute discounting, and a back-off trigram.

Seen events in a context keep ``(count - D) / total``.  The freed mass
``D * distinct / total`` goes to the unseen events of that context, in
proportion to a lower-order distribution.  Rows therefore sum to one over
the vocabulary and every vocabulary symbol receives non-zero probability.
"""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from typing import Hashable, Iterable, Mapping, Sequence

BOS = "<s>"
EOS = "</s>"
UNK = "<unk>"


class SmoothingConfigError(ValueError):
    pass


def check_discount(discount: float) -> float:
    if not (0.0 < discount < 1.0):
        raise SmoothingConfigError(f"discount must lie in (0, 1), got {discount}")
    return float(discount)


def discount_row(counts: Mapping[Hashable, int], lower: Mapping[Hashable, float], discount: float):
    """Discount one context's counts against ``lower``.

    Returns ``(seen, bow)``: the probabilities of the seen events and the
    weight applied to ``lower`` for everything else.  When every event with
    lower-order mass is already seen there is nowhere to put freed mass, so
    the row falls back to relative frequencies.
    """
    total = sum(counts.values())
    if total <= 0:
        return {}, 1.0
    covered = math.fsum(lower.get(s, 0.0) for s, c in counts.items() if c > 0)
    remaining = 1.0 - covered
    distinct = sum(1 for c in counts.values() if c > 0)
    if remaining <= 1e-12:
        return {s: c / total for s, c in counts.items() if c > 0}, 0.0
    seen = {s: (c - discount) / total for s, c in counts.items() if c > 0}
    freed = discount * distinct / total
    return seen, freed / remaining


def uniform(vocab: Iterable[Hashable]) -> dict:
    vocab = list(vocab)
    return {s: 1.0 / len(vocab) for s in vocab}


class KatzTable:
    """Conditional table P(symbol | context) with a context-independent lower order.

    ``None`` is a legal context (used for the NULL alignment column).
    """

    def __init__(self, vocab: Sequence[Hashable], lower: Mapping[Hashable, float],
                 rows: Mapping[Hashable, tuple[dict, float]], unk: Hashable | None = None):
        self.vocab = tuple(vocab)
        self.lower = dict(lower)
        self.rows = dict(rows)
        self.unk = unk

    def _sym(self, sym):
        if sym in self.lower:
            return sym
        if self.unk is not None:
            return self.unk
        raise KeyError(sym)

    def prob(self, sym, ctx) -> float:
        sym = self._sym(sym)
        row = self.rows.get(ctx)
        if row is None:
            return self.lower[sym]
        seen, bow = row
        p = seen.get(sym)
        return p if p is not None else bow * self.lower[sym]

    def row(self, ctx) -> dict:
        return {s: self.prob(s, ctx) for s in self.vocab}

    def to_dict(self) -> dict:
        return {
            "vocab": list(self.vocab),
            "unk": self.unk,
            "lower": [[s, p] for s, p in self.lower.items()],
            "rows": [[ctx, [[s, p] for s, p in seen.items()], bow] for ctx, (seen, bow) in self.rows.items()],
        }

    @classmethod
    def from_dict(cls, obj: dict, key=lambda x: x) -> "KatzTable":
        return cls(
            vocab=[key(s) for s in obj["vocab"]],
            lower={key(s): p for s, p in obj["lower"]},
            rows={(key(ctx) if ctx is not None else None): ({key(s): p for s, p in seen}, bow)
                  for ctx, seen, bow in obj["rows"]},
            unk=obj.get("unk"),
        )

    def __eq__(self, other):
        return (isinstance(other, KatzTable) and self.vocab == other.vocab and self.lower == other.lower
                and self.rows == other.rows and self.unk == other.unk)


def katz_backoff(counts: Mapping[Hashable, Mapping[Hashable, int]], vocab: Sequence[Hashable],
                 discount: float = 0.5, lower: Mapping[Hashable, float] | None = None,
                 unk: Hashable | None = None) -> KatzTable:
    """Smooth a conditional count table.

    If ``lower`` is omitted it is the unigram of the pooled counts, itself
    discounted towards the uniform distribution over ``vocab``.
    """
    check_discount(discount)
    vocab = list(dict.fromkeys(vocab))
    if not vocab:
        raise SmoothingConfigError("empty vocabulary")
    vset = set(vocab)
    for row in counts.values():
        bad = [s for s in row if s not in vset]
        if bad:
            raise SmoothingConfigError(f"symbols {bad[:3]} missing from the vocabulary")
    if lower is None:
        pooled = Counter()
        for row in counts.values():
            pooled.update(row)
        uni = uniform(vocab)
        seen, bow = discount_row(pooled, uni, discount)
        lower = {s: seen.get(s, bow * uni[s]) for s in vocab}
    rows = {}
    for ctx, row in counts.items():
        if sum(row.values()) > 0:
            rows[ctx] = discount_row(row, lower, discount)
    return KatzTable(vocab, {s: lower[s] for s in vocab}, rows, unk)


class TrigramLM:
    """Back-off trigram: trigram -> bigram -> unigram -> uniform."""

    def __init__(self, vocab, unigram, bigram, trigram, discount):
        self.vocab = tuple(vocab)
        self.unigram = dict(unigram)
        self.bigram = dict(bigram)
        self.trigram = dict(trigram)
        self.discount = discount
        self._cache: dict = {}

    def _map(self, w: str) -> str:
        return w if (w in self.unigram or w == BOS) else UNK

    def prob(self, w: str, history: Sequence[str] = ()) -> float:
        w = self._map(w)
        hist = tuple(self._map(h) for h in history[-2:])
        return self._prob(w, hist)

    def _prob(self, w, hist):
        if not hist:
            return self.unigram[w]
        if len(hist) == 1:
            row = self.bigram.get(hist[0])
            if row is None:
                return self.unigram[w]
            p = row[0].get(w)
            return p if p is not None else row[1] * self.unigram[w]
        row = self.trigram.get(hist)
        if row is None:
            return self._prob(w, hist[1:])
        p = row[0].get(w)
        return p if p is not None else row[1] * self._prob(w, hist[1:])

    def logprob(self, w: str, history: Sequence[str] = ()) -> float:
        key = (w, tuple(history[-2:]))
        lp = self._cache.get(key)
        if lp is None:
            lp = math.log(self.prob(w, history))
            self._cache[key] = lp
        return lp

    def score(self, seq: Sequence[str], bos: bool = True, eos: bool = False) -> float:
        """Sum of log-probabilities; the empty sequence scores 0.0."""
        if not seq:
            return 0.0
        hist = [BOS, BOS] if bos else []
        total = 0.0
        for w in seq:
            total += self.logprob(w, hist)
            hist = (hist + [w])[-2:]
        if eos:
            total += self.logprob(EOS, hist)
        return total

    def events(self) -> list[str]:
        return [w for w in self.vocab if w != BOS]

    def to_dict(self) -> dict:
        return {
            "discount": self.discount,
            "vocab": list(self.vocab),
            "unigram": [[w, p] for w, p in self.unigram.items()],
            "bigram": [[v, [[w, p] for w, p in seen.items()], bow] for v, (seen, bow) in self.bigram.items()],
            "trigram": [[list(h), [[w, p] for w, p in seen.items()], bow]
                        for h, (seen, bow) in self.trigram.items()],
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "TrigramLM":
        return cls(
            vocab=obj["vocab"],
            unigram={w: p for w, p in obj["unigram"]},
            bigram={v: ({w: p for w, p in seen}, bow) for v, seen, bow in obj["bigram"]},
            trigram={tuple(h): ({w: p for w, p in seen}, bow) for h, seen, bow in obj["trigram"]},
            discount=obj["discount"],
        )

    def __eq__(self, other):
        return isinstance(other, TrigramLM) and self.to_dict() == other.to_dict()


def ngram_counts(sequences: Iterable[Sequence[str]]) -> Counter:
    """Trigram event counts over boundary-padded sequences."""
    counts: Counter = Counter()
    for seq in sequences:
        padded = [BOS, BOS, *seq, EOS]
        for k in range(2, len(padded)):
            counts[(padded[k - 2], padded[k - 1], padded[k])] += 1
    return counts


def trigram_from_counts(counts: Mapping[tuple[str, str, str], int], discount: float = 0.5) -> TrigramLM:
    check_discount(discount)
    if not counts:
        raise ValueError("cannot train a trigram on an empty corpus")
    uni_c: Counter = Counter()
    bi_c: dict = defaultdict(Counter)
    tri_c: dict = defaultdict(Counter)
    for (u, v, w), c in counts.items():
        uni_c[w] += c
        bi_c[v][w] += c
        tri_c[(u, v)][w] += c
    events = sorted(set(uni_c) | {EOS, UNK})
    uni_seen, uni_bow = discount_row(uni_c, uniform(events), discount)
    unigram = {w: uni_seen.get(w, uni_bow / len(events)) for w in events}
    bigram = {v: _sorted_row(discount_row(row, unigram, discount)) for v, row in sorted(bi_c.items())}
    lm = TrigramLM([BOS, *events], unigram, bigram, {}, discount)
    trigram = {}
    for h, row in sorted(tri_c.items()):
        lower = {w: lm._prob(w, (h[1],)) for w in row}
        trigram[h] = _sorted_row(discount_row(row, lower, discount))
    lm.trigram = trigram
    return lm


def _sorted_row(row):
    seen, bow = row
    return dict(sorted(seen.items())), bow


def train_trigram(sequences: Iterable[Sequence[str]], discount: float = 0.5) -> TrigramLM:
    """Katz-smoothed trigram with sentence-boundary padding."""
    return trigram_from_counts(ngram_counts(sequences), discount)
