import json
import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from latrepair.evaluation import (PAPER_REFERENCE, EvaluationError, Span, calibrate_threshold, evaluate,
                                  path_score, path_terms, select_best_path)
from latrepair.lattice import LatticeError, WordLattice, linear_lattice, parse_lattice
from latrepair.lm import train_trigram
from latrepair.training import AnnotatedTurn, RepairAnnotation

from oracles import exhaustive_best_path, score_path
from randgen import random_lattice

LM = train_trigram([["i", "can", "meet", "you"], ["i", "cannot", "meet", "you"], ["i", "can", "go"]])


def test_linear_lattice_only_path():
    lat = linear_lattice(["i", "can", "meet"], "t")
    best = select_best_path(lat, LM)
    assert best.words == ["i", "can", "meet"] and best.edge_ids == [0, 1, 2]
    assert best.score == pytest.approx(score_path(lat, [0, 1, 2], LM), abs=1e-12)


def test_diamond_hand_scored():
    rec = {"turn_id": "d", "nodes": [0, 1, 2, 3], "start": 0, "end": 3, "edges": [
        {"id": 0, "from": 0, "to": 1, "word": "i", "acoustic": 0.0, "ip_prob": 0.0, "fragment": False},
        {"id": 1, "from": 1, "to": 2, "word": "cannot", "acoustic": -0.1, "ip_prob": 0.0, "fragment": False},
        {"id": 2, "from": 1, "to": 2, "word": "can", "acoustic": -3.0, "ip_prob": 0.0, "fragment": False},
        {"id": 3, "from": 2, "to": 3, "word": "meet", "acoustic": 0.0, "ip_prob": 0.0, "fragment": False},
    ]}
    lat = parse_lattice(json.dumps(rec))
    a, b = score_path(lat, [0, 1, 3], LM), score_path(lat, [0, 2, 3], LM)
    best = select_best_path(lat, LM)
    assert best.edge_ids == ([0, 1, 3] if a >= b else [0, 2, 3])
    assert best.score == max(a, b)


def test_path_terms_sum_to_score():
    lat = linear_lattice(["i", "can", "zzz"], "t")
    terms = path_terms(lat, [0, 1, 2], LM)
    assert [k for k, _ in terms] == ["ac:0", "lm:0", "ac:1", "lm:1", "ac:2", "lm:2", "lm:</s>"]
    assert math.fsum(v for _, v in terms) == pytest.approx(path_score(lat, [0, 1, 2], LM), abs=1e-12)


def test_no_path_error():
    lat = WordLattice("t", [0, 1], [], 0, 1)
    with pytest.raises(LatticeError):
        select_best_path(lat, LM)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10**6))
def test_best_path_matches_enumeration(seed):
    lat = random_lattice(random.Random(seed), max_paths=12, slots=False)
    score, path = exhaustive_best_path(lat, LM)
    best = select_best_path(lat, LM)
    assert tuple(best.edge_ids) == path and best.score == score


def gold_turn(tid, *spans):
    reps = [RepairAnnotation(rd, None, rs, tuple((j, min(j, rs[1] - rs[0])) for j in range(1, rd[1] - rd[0] + 1)))
            for rd, rs in spans]
    return AnnotatedTurn(tid, [f"w{k}" for k in range(20)], reps).validate()


def test_perfect_predictions():
    gold = [gold_turn(f"t{k}", ((0, 1), (1, 2))) for k in range(10)]
    preds = {t.turn_id: [Span(0, (0, 1), (1, 2))] for t in gold}
    m = evaluate(gold, preds)
    assert (m.detection_recall, m.detection_precision, m.scope_recall, m.scope_precision) == (100, 100, 100, 100)


def test_half_correct():
    gold = [gold_turn("a", ((0, 2), (2, 4))), gold_turn("b", ((5, 6), (6, 7)))]
    preds = {"a": [Span(1, (0, 2), (2, 4))], "b": [Span(9, (8, 10), (10, 11))]}
    m = evaluate(gold, preds)
    assert (m.detection_recall, m.detection_precision, m.scope_recall, m.scope_precision) == (50, 50, 50, 50)


def test_scope_needs_exact_spans():
    gold = [gold_turn("a", ((0, 2), (2, 4)))]
    m = evaluate(gold, {"a": [Span(1, (1, 2), (2, 4))]})
    assert (m.detection_hits, m.scope_hits) == (1, 0)


def test_unknown_turn_rejected():
    with pytest.raises(EvaluationError):
        evaluate([gold_turn("a")], {"zz": []})


def test_table_layout():
    m = evaluate([gold_turn("a", ((0, 1), (1, 2)))], {"a": [Span(0, (0, 1), (1, 2))]})
    text = m.table("Synthetic", PAPER_REFERENCE)
    assert "Detection" in text and "Correct scope" in text
    assert "71.0%" in text and "85.0%" in text and "62.0%" in text and "83.0%" in text
    assert PAPER_REFERENCE["Test 1"] == (49.0, 70.0, 47.0, 70.0)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10**6))
def test_evaluate_order_invariant(seed):
    rng = random.Random(seed)
    gold, preds = [], {}
    for k in range(6):
        spans = []
        for start in (0, 8):
            if rng.random() < 0.6:
                m = rng.randint(1, 3)
                spans.append(((start, start + m), (start + m, start + m + rng.randint(1, 3))))
        gold.append(gold_turn(f"t{k}", *spans))
        preds[f"t{k}"] = [Span(rng.choice([0, 1, 2, 8, 9]), (rng.randint(0, 2), 2), (2, rng.randint(3, 5)))
                          for _ in range(rng.randint(0, 3))]
    m = evaluate(gold, preds)
    shuffled = {k: rng.sample(v, len(v)) for k, v in reversed(list(preds.items()))}
    assert evaluate(rng.sample(gold, len(gold)), shuffled) == m
    assert m.detection_hits <= min(m.gold, m.predicted) and m.scope_hits <= m.detection_hits
    for v in (m.detection_recall, m.detection_precision, m.scope_recall, m.scope_precision):
        assert 0 <= v <= 100


def test_calibrate_threshold_picks_best_f1():
    gold = [gold_turn("a", ((0, 1), (1, 2))), gold_turn("b")]
    good = Span(0, (0, 1), (1, 2))
    scored = {"a": [(-1.0, good)], "b": [(-5.0, Span(3, (3, 4), (4, 5)))]}
    theta, m = calibrate_threshold(scored, gold)
    assert theta == -1.0 and m.scope_precision == 100 and m.scope_recall == 100
    assert calibrate_threshold({}, gold)[0] == -math.inf
