import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from latrepair.lattice import linear_lattice, parse_lattice
from latrepair.lexicon import Lexicon
from latrepair.taglattice import (build_tag_lattice, expand_post_context, expand_pre_context, score_pos_path)

from randgen import WORDS, random_lattice


def diamond():
    rec = {"turn_id": "d", "nodes": [0, 1, 2, 3], "start": 0, "end": 3, "edges": [
        {"id": 0, "from": 0, "to": 1, "word": "i", "acoustic": 0.0, "ip_prob": 0.0, "fragment": False},
        {"id": 1, "from": 1, "to": 2, "word": "can", "acoustic": -0.5, "ip_prob": 0.0, "fragment": False},
        {"id": 2, "from": 1, "to": 2, "word": "cannot", "acoustic": -0.7, "ip_prob": 0.0, "fragment": False},
        {"id": 3, "from": 2, "to": 3, "word": "meet", "acoustic": 0.0, "ip_prob": 0.9, "fragment": False},
    ]}
    return parse_lattice(json.dumps(rec))


def test_single_edge(lex):
    tl = build_tag_lattice(linear_lattice(["thursday"], "t"), lex)
    assert len(tl.tag_edges) == 1
    te = tl.tag_edges[0]
    assert (te.pos, te.prob) == ("NOUN", 1.0) and [w.triple.word for w in te.words] == ["thursday"]


def test_parallel_edges_merge(lex):
    tl = build_tag_lattice(diamond(), lex)
    span = {te.pos: te for te in tl.tag_edges if (te.from_node, te.to_node) == (1, 2)}
    assert set(span) == {"AUX", "NOUN"}
    assert span["AUX"].prob == pytest.approx(1.9, abs=1e-15)
    assert sorted(w.triple.word for w in span["AUX"].words) == ["can", "cannot"]
    assert span["NOUN"].prob == pytest.approx(0.1, abs=1e-15)


def test_fan_out(lex):
    tl = build_tag_lattice(linear_lattice(["can"], "t"), lex)
    assert sorted(te.pos for te in tl.tag_edges) == ["AUX", "NOUN"]


def test_score_pos_path(pos_lm):
    assert score_pos_path(pos_lm, []) == 0.0
    assert score_pos_path(pos_lm, ["AUX"]) == pos_lm.logprob("AUX", ["<s>", "<s>"])


def test_pre_context_chain(lex, pos_lm):
    lat = linear_lattice(["i", "cannot"], "t")
    tl = build_tag_lattice(lat, lex)
    paths = expand_pre_context(tl, 1, 4, 10, pos_lm)
    assert [p.edge_ids for p in paths] == [(0, 1)]
    first = expand_pre_context(tl, 0, 4, 10, pos_lm)
    assert [p.edge_ids for p in first] == [(0,)]


def test_pre_context_beam_keeps_best(lex, pos_lm):
    tl = build_tag_lattice(linear_lattice(["i", "can"], "t"), lex)
    both = expand_pre_context(tl, 1, 4, 10, pos_lm)
    assert len(both) == 2
    scores = {tuple(t.pos for t in p.triples): p.pos_score for p in both}
    assert scores[("PRON", "AUX")] == pytest.approx(pos_lm.score(["PRON", "AUX"]))
    assert scores[("PRON", "NOUN")] == pytest.approx(pos_lm.score(["PRON", "NOUN"]))
    best = max(scores, key=scores.get)
    [one] = expand_pre_context(tl, 1, 4, 1, pos_lm)
    assert tuple(t.pos for t in one.triples) == best


def test_diamond_word_choices_materialized(lex, pos_lm):
    tl = build_tag_lattice(diamond(), lex)
    paths = expand_pre_context(tl, 3, 4, 10, pos_lm)
    # can: AUX/NOUN, cannot: AUX -> three materializations through the span
    assert sorted((p.edge_ids, tuple(t.pos for t in p.triples)) for p in paths) == [
        ((0, 1, 3), ("PRON", "AUX", "VERB")),
        ((0, 1, 3), ("PRON", "NOUN", "VERB")),
        ((0, 2, 3), ("PRON", "AUX", "VERB")),
    ]


def test_post_context_skips_editing_term(lex, pos_lm):
    lat = linear_lattice("i cannot no i can meet you on thursday".split(), "t")
    tl = build_tag_lattice(lat, lex)
    posts = expand_post_context(tl, 1, 4, 10, pos_lm, lex)
    assert posts and all(et == 1 for et, _ in posts)
    assert {p.edge_ids for _, p in posts} == {(3, 4, 5, 6)}
    assert all(p.skipped_edge_ids == (2,) for _, p in posts)
    assert [t.word for t in posts[0][1].triples] == ["i", "can", "meet", "you"]


def test_post_context_without_editing_term(lex, pos_lm):
    lat = linear_lattice("i meet thursday on friday".split(), "t")
    tl = build_tag_lattice(lat, lex)
    posts = expand_post_context(tl, 1, 4, 10, pos_lm, lex)
    assert [(et, [t.word for t in p.triples]) for et, p in posts] == [(0, ["thursday", "on", "friday"])]
    assert expand_post_context(tl, 4, 4, 10, pos_lm, lex) == []


def chained(lat, ids):
    edges = [lat.edge(i) for i in ids]
    return all(a.to_node == b.from_node for a, b in zip(edges, edges[1:]))


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 4), st.integers(1, 6))
def test_expansion_properties(seed, window, beam):
    rng = random.Random(seed)
    lat = random_lattice(rng, slots=False)
    lex = Lexicon(pos_table={w: ({"A": 0.5, "B": 0.5} if k % 3 == 0 else {"A": 1.0}) for k, w in enumerate(WORDS)})
    from latrepair.lm import train_trigram
    lm = train_trigram([["A", "B", "A"], ["B", "B"]])
    tl = build_tag_lattice(lat, lex)
    assert build_tag_lattice(lat, lex) == tl
    # mass preservation per word edge
    contrib = {}
    for te in tl.tag_edges:
        for w in te.words:
            contrib[w.edge_id] = contrib.get(w.edge_id, 0.0) + dict(lex.pos_table.get(w.triple.word, [("UNK", 1.0)]))[te.pos]
    assert set(contrib) == {e.edge_id for e in lat.edges}
    assert all(abs(v - 1.0) < 1e-12 for v in contrib.values())
    ip = rng.choice(lat.edges).edge_id
    for expand in (lambda b: expand_pre_context(tl, ip, window, b, lm),
                   lambda b: [p for _, p in expand_post_context(tl, ip, window, b, lm, lex)]):
        small, big = expand(beam), expand(beam + 1)
        assert small == big[:len(small)] and len(small) <= beam
        for p in big:
            assert 1 <= len(p.triples) == len(p.edge_ids) <= window
            assert chained(lat, p.edge_ids)
    for p in expand_pre_context(tl, ip, window, beam, lm):
        assert p.edge_ids[-1] == ip
