"""Independent reference computations used as test oracles."""

import itertools
import math

import numpy as np

from latrepair.lm import BOS, EOS
from latrepair.lattice import WordLattice


def brute_force_pair_prob(length, alignment, repl, m, l):
    """Explicit sum over every alignment vector in {0..l}^m.

    ``repl[j, i]`` is r(RD_{j+1}, RS_i) with column 0 the NULL word.
    """
    total = []
    for a in itertools.product(range(l + 1), repeat=m):
        p = length[m - 1, l - 1]
        for j, i in enumerate(a):
            p *= alignment[i, j, m - 1, l - 1] * repl[j, i]
        total.append(p)
    return math.fsum(total)


def brute_force_pair_prob_vec(length, alignment, repl, m, l):
    """Vectorized version of :func:`brute_force_pair_prob` (still enumerates every vector)."""
    grid = np.array(list(itertools.product(range(l + 1), repeat=m)))  # (N, m)
    j = np.arange(m)[None, :]
    factors = alignment[grid, j, m - 1, l - 1] * repl[j, grid]
    return math.fsum(length[m - 1, l - 1] * np.prod(factors, axis=1))


def all_paths(lattice: WordLattice):
    out = lattice.out_edges()
    paths = []

    def walk(node, acc):
        if node == lattice.end_node:
            paths.append(tuple(acc))
            return
        for e in out.get(node, ()):
            walk(e.to_node, acc + [e.edge_id])

    walk(lattice.start_node, [])
    return paths


def score_path(lattice, edge_ids, lm):
    """Acoustic plus trigram log-probability of one path, end of sentence included."""
    total = 0.0
    hist = (BOS, BOS)
    for i in edge_ids:
        e = lattice.edge(i)
        total += e.acoustic_score + math.log(lm.prob(e.word, hist))
        hist = (hist[1], e.word)
    return total + math.log(lm.prob(EOS, hist))


def exhaustive_best_path(lattice, lm):
    best = None
    for p in all_paths(lattice):
        s = score_path(lattice, p, lm)
        if best is None or s > best[0] or (s == best[0] and p < best[1]):
            best = (s, p)
    return best


def edge_terms(lattice, edge_ids, lm):
    """Per-edge (acoustic, LM) terms of a path plus the end-of-sentence LM term."""
    terms = []
    hist = (BOS, BOS)
    for i in edge_ids:
        e = lattice.edge(i)
        terms.append((e.acoustic_score, math.log(lm.prob(e.word, hist))))
        hist = (hist[1], e.word)
    return terms, math.log(lm.prob(EOS, hist))


def check_splice(lattice, edit, original_ids, lm, tol=1e-9):
    """Compare a repair path with the original linear path term by term.

    Returns the list of differing LM-term positions after the splice point
    (relative to the first reparans word); raises AssertionError on any
    other mismatch.
    """
    slot = lattice.edge(edit.carrier_edge_id).repair_slot
    deleted = list(slot.original_edge_ids)
    rs = list(edit.hypothesis.candidate.post_edge_ids)
    onset = original_ids.index(deleted[0])
    pre = original_ids[:onset]
    after = original_ids[onset + len(deleted):]
    assert after[:len(rs)] == rs
    post = after[len(rs):]
    repair_ids = pre + list(edit.inserted_edge_ids) + post

    o_terms, o_eos = edge_terms(lattice, original_ids, lm)
    r_terms, r_eos = edge_terms(lattice, repair_ids, lm)
    # shared prefix
    assert o_terms[:onset] == r_terms[:onset]
    # deleted words' acoustic + LM mass reappears in the offset
    removed = math.fsum(a + b for a, b in o_terms[onset:onset + len(deleted)])
    assert abs(removed - slot.score_offset) <= tol * max(1.0, abs(removed))
    # acoustic terms of the copied reparans, offset only on the carrier
    o_tail = o_terms[onset + len(deleted):]
    r_tail = r_terms[onset:]
    assert len(o_tail) == len(r_tail)
    for k, ((oa, ol), (ra, rl)) in enumerate(zip(o_tail, r_tail)):
        expect = oa + slot.score_offset if k == 0 else oa
        assert abs(ra - expect) <= tol * max(1.0, abs(expect))
    differing = [k for k, ((_, ol), (_, rl)) in enumerate(zip(o_tail, r_tail)) if abs(ol - rl) > tol]
    if abs(o_eos - r_eos) > tol:
        differing.append(len(o_tail))
    # only transitions whose two-word history straddles the splice may change
    assert all(k < 2 for k in differing), differing
    total_o = math.fsum([a + b for a, b in o_terms] + [o_eos])
    total_r = math.fsum([a + b for a, b in r_terms] + [r_eos])
    join = math.fsum(r_terms[onset + k][1] - o_tail[k][1] if k < len(o_tail) else r_eos - o_eos
                     for k in differing)
    assert abs(total_r - (total_o + join)) <= tol * max(1.0, abs(total_o))
    return differing
