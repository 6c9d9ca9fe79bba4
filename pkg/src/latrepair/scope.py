"""Scope model: scores reparandum/reparans pairs as a simplified translation model.

For a reparans ``RS`` of length ``l`` and a reparandum ``RD`` of length
``m`` the model marginalizes over alignments ``a`` (``a_j = 0`` is NULL)::

    P(RD | RS) = P(m | l) * prod_j sum_i P(i | j, m, l) * r(RD_j, RS_i)

where ``r`` interpolates word, semantic-class and POS replacement tables.
The product of sums equals the explicit sum over all ``(l + 1) ** m``
alignment vectors because each factor depends on a single ``a_j``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _kernels
from .lexicon import Triple
from .lm import KatzTable
from .taglattice import DEFAULT_WINDOW, PartialPath

MODEL_FORMAT = "latrepair-scope/1"
DEFAULT_WEIGHTS = (0.5, 0.3, 0.2)
# per-word log-probability; calibrated for scope F1 on held-out synthetic turns
DEFAULT_THETA = -4.86


class ScopeModelError(ValueError):
    pass


@dataclass
class ScopeModelParams:
    length: np.ndarray  # (W, W): length[m-1, l-1] = P(m | l)
    alignment: np.ndarray  # (W+1, W, W, W): alignment[i, j-1, m-1, l-1]
    word_repl: KatzTable
    pos_repl: KatzTable
    sem_repl: KatzTable
    weights: tuple[float, float, float] = DEFAULT_WEIGHTS
    accept_threshold: float = -math.inf
    window: int = DEFAULT_WINDOW
    _cache: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        self.length = np.asarray(self.length, dtype=np.float64)
        self.alignment = np.asarray(self.alignment, dtype=np.float64)
        self.weights = tuple(float(w) for w in self.weights)

    def validate(self) -> "ScopeModelParams":
        W = self.window
        if self.length.shape != (W, W):
            raise ScopeModelError(f"length table shape {self.length.shape} does not match window {W}")
        if self.alignment.shape != (W + 1, W, W, W):
            raise ScopeModelError(f"alignment table shape {self.alignment.shape} does not match window {W}")
        for l in range(1, W + 1):
            s = math.fsum(self.length[:, l - 1])
            if abs(s - 1.0) > 1e-9:
                raise ScopeModelError(f"P(m | l={l}) sums to {s}")
            for m in range(1, W + 1):
                for j in range(1, m + 1):
                    col = self.alignment[:, j - 1, m - 1, l - 1]
                    if np.any(col[l + 1:] != 0.0):
                        raise ScopeModelError(f"alignment mass beyond i={l} for (j={j}, m={m}, l={l})")
                    s = math.fsum(col[: l + 1])
                    if abs(s - 1.0) > 1e-9:
                        raise ScopeModelError(f"P(i | j={j}, m={m}, l={l}) sums to {s}")
        a, b, g = self.weights
        if min(a, b, g) < 0 or abs(a + b + g - 1.0) > 1e-12:
            raise ScopeModelError(f"interpolation weights {self.weights} must be >= 0 and sum to 1")
        return self

    def to_dict(self) -> dict:
        return {
            "format": MODEL_FORMAT,
            "window": self.window,
            "weights": list(self.weights),
            "theta": self.accept_threshold,
            "length": self.length.tolist(),
            "alignment": self.alignment.tolist(),
            "word_repl": self.word_repl.to_dict(),
            "pos_repl": self.pos_repl.to_dict(),
            "sem_repl": self.sem_repl.to_dict(),
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "ScopeModelParams":
        if obj.get("format") != MODEL_FORMAT:
            raise ScopeModelError(f"unsupported model format {obj.get('format')!r}, expected {MODEL_FORMAT!r}")
        return cls(
            length=np.array(obj["length"], dtype=np.float64),
            alignment=np.array(obj["alignment"], dtype=np.float64),
            word_repl=KatzTable.from_dict(obj["word_repl"]),
            pos_repl=KatzTable.from_dict(obj["pos_repl"]),
            sem_repl=KatzTable.from_dict(obj["sem_repl"]),
            weights=tuple(obj["weights"]),
            accept_threshold=float(obj["theta"]),
            window=int(obj["window"]),
        ).validate()


@dataclass(frozen=True)
class Candidate:
    reparandum: tuple[Triple, ...]
    editing_len: int
    reparans: tuple[Triple, ...]
    pre_edge_ids: tuple[int, ...]
    post_edge_ids: tuple[int, ...]
    editing_edge_ids: tuple[int, ...] = ()

    @property
    def m(self) -> int:
        return len(self.reparandum)

    @property
    def l(self) -> int:
        return len(self.reparans)


@dataclass(frozen=True)
class RepairHypothesis:
    candidate: Candidate
    score: float
    ip_edge: int | None = None


def replacement_prob(params: ScopeModelParams, rd: Triple, rs: Triple | None) -> float:
    """Interpolated probability that ``rd`` stands in the reparandum for ``rs`` (None = NULL)."""
    key = (rd, rs)
    p = params._cache.get(key)
    if p is None:
        alpha, beta, gamma = params.weights
        if rs is None:
            w_ctx = p_ctx = s_ctx = None
        else:
            w_ctx, p_ctx, s_ctx = rs.word, rs.pos, rs.sem
        p = (alpha * params.word_repl.prob(rd.word, w_ctx)
             + beta * params.sem_repl.prob(rd.sem, s_ctx)
             + gamma * params.pos_repl.prob(rd.pos, p_ctx))
        params._cache[key] = p
    return p


def _check_lengths(params: ScopeModelParams, m: int, l: int) -> None:
    if not (1 <= m <= params.window and 1 <= l <= params.window):
        raise ScopeModelError(f"(m={m}, l={l}) outside the window 1..{params.window}")


def pair_prob(params: ScopeModelParams, RD: Sequence[Triple], RS: Sequence[Triple]) -> float:
    m, l = len(RD), len(RS)
    _check_lengths(params, m, l)
    src = [None, *RS]
    total = params.length[m - 1, l - 1]
    for j in range(1, m + 1):
        total *= math.fsum(params.alignment[i, j - 1, m - 1, l - 1] * replacement_prob(params, RD[j - 1], src[i])
                           for i in range(l + 1))
    return float(total)


def enumerate_candidates(pre: PartialPath, post: tuple[int, PartialPath],
                         window: int = DEFAULT_WINDOW) -> list[Candidate]:
    """Every (m, l) split: reparandum = last m pre words, reparans = first l post words."""
    editing_len, post_path = post
    out = []
    for m in range(1, min(window, len(pre)) + 1):
        for l in range(1, min(window, len(post_path)) + 1):
            out.append(Candidate(
                reparandum=pre.triples[-m:],
                editing_len=editing_len,
                reparans=post_path.triples[:l],
                pre_edge_ids=pre.edge_ids[-m:],
                post_edge_ids=post_path.edge_ids[:l],
                editing_edge_ids=post_path.skipped_edge_ids,
            ))
    return out


def candidate_score(params: ScopeModelParams, cand: Candidate) -> float:
    """Length-normalized log P(RD | RS)."""
    return math.log(pair_prob(params, cand.reparandum, cand.reparans)) / cand.m


def best_segmentation(params: ScopeModelParams, candidates: Sequence[Candidate],
                      ip_edge: int | None = None, threshold: float | None = None) -> RepairHypothesis | None:
    """Highest-scoring candidate if it clears the acceptance threshold.

    Ties go to the smaller reparandum, then the smaller reparans, then list order.
    """
    theta = params.accept_threshold if threshold is None else threshold
    best, best_key = None, None
    for idx, cand in enumerate(candidates):
        s = candidate_score(params, cand)
        key = (-s, cand.m, cand.l, idx)
        if best_key is None or key < best_key:
            best, best_key = (cand, s), key
    if best is None or best[1] < theta:
        return None
    return RepairHypothesis(best[0], best[1], ip_edge)


def score_context_pairs(params: ScopeModelParams, pres: Sequence[PartialPath],
                        posts: Sequence[tuple[int, PartialPath]], window: int | None = None) -> np.ndarray:
    """Normalized candidate scores for every (pre, post) pair, shape (len(pres), len(posts), W, W).

    ``score[a, b, m-1, l-1]`` is the score of the (m, l) candidate built from
    ``pres[a]`` and ``posts[b]``; ``-inf`` where the split does not exist.
    """
    W = params.window
    window = W if window is None else window
    P = max((min(len(p), window) for p in pres), default=1)
    Q = max((min(len(p), window) for _, p in posts), default=1)
    n = len(pres) * len(posts)
    R = np.ones((n, P, Q + 1))
    pre_len = np.zeros(n, dtype=np.int64)
    post_len = np.zeros(n, dtype=np.int64)
    k = 0
    for pre in pres:
        rd = pre.triples[-window:]
        for _, post in posts:
            rs = (None, *post.triples[:window])
            for a, t in enumerate(rd):
                for b, s in enumerate(rs):
                    R[k, a, b] = replacement_prob(params, t, s)
            pre_len[k] = len(rd)
            post_len[k] = len(rs) - 1
            k += 1
    logp = _kernels.pair_logprobs(R, pre_len, post_len, params.length, params.alignment)
    logp /= np.arange(1, W + 1, dtype=np.float64)[None, :, None]
    return logp.reshape(len(pres), len(posts), W, W)


def search_best(params: ScopeModelParams, pres: Sequence[PartialPath], posts: Sequence[tuple[int, PartialPath]],
                ip_edge: int | None = None, window: int | None = None,
                threshold: float | None = None) -> RepairHypothesis | None:
    """Best hypothesis across all context pairs (ties: smaller m, smaller l, earlier pair)."""
    if not pres or not posts:
        return None
    window = params.window if window is None else min(window, params.window)
    theta = params.accept_threshold if threshold is None else threshold
    scores = score_context_pairs(params, pres, posts, window)
    nb, npost, W, _ = scores.shape
    best_key, best_at = None, None
    for a in range(nb):
        for b in range(npost):
            block = scores[a, b]
            for m in range(1, W + 1):
                for l in range(1, W + 1):
                    s = block[m - 1, l - 1]
                    if s == -np.inf:
                        continue
                    key = (-s, m, l, a, b)
                    if best_key is None or key < best_key:
                        best_key, best_at = key, (a, b, m, l)
    if best_at is None or -best_key[0] < theta:
        return None
    a, b, m, l = best_at
    pre, (et_len, post) = pres[a], posts[b]
    cand = Candidate(pre.triples[-m:], et_len, post.triples[:l], pre.edge_ids[-m:], post.edge_ids[:l],
                     post.skipped_edge_ids)
    return RepairHypothesis(cand, float(-best_key[0]), ip_edge)
