import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from latrepair.lattice import (LatticeError, LatticeParseError, WordEdge, WordLattice, format_token,
                               lattice_to_dict, linear_lattice, parse_lattice, parse_token,
                               parse_transliteration_line, serialize_lattice, topological_order)

from randgen import random_lattice


def record(edges, nodes, start=0, end=None, turn_id="t"):
    return json.dumps({"turn_id": turn_id, "nodes": nodes, "start": start,
                       "end": nodes[-1] if end is None else end, "edges": edges})


def edge(i, a, b, word, ac=0.0, ip=0.0, frag=False):
    return {"id": i, "from": a, "to": b, "word": word, "acoustic": ac, "ip_prob": ip, "fragment": frag}


def test_single_edge_record():
    lat = parse_lattice(record([edge(0, 0, 1, "hello", -1.0)], [0, 1]))
    assert len(lat.nodes) == 2 and len(lat.edges) == 1
    assert lat.edges[0].word == "hello" and lat.edges[0].acoustic_score == -1.0


def test_self_loop_rejected():
    with pytest.raises(LatticeError, match="self-loop|itself"):
        parse_lattice(record([edge(0, 0, 0, "x"), edge(1, 0, 1, "y")], [0, 1]))


def diamond_record():
    return record([edge(0, 0, 1, "i"), edge(1, 1, 2, "can", -0.5), edge(2, 1, 2, "cannot", -0.7),
                   edge(3, 0, 1, "we")], [0, 1, 2])


def test_diamond_keeps_alternatives_and_round_trips():
    text = diamond_record()
    lat = parse_lattice(text)
    assert len(lat.nodes) == 3 and len(lat.edges) == 4
    assert {e.word for e in lat.edges if (e.from_node, e.to_node) == (1, 2)} == {"can", "cannot"}
    assert parse_lattice(serialize_lattice(lat)) == lat
    assert json.loads(serialize_lattice(lat)) == json.loads(text)


@pytest.mark.parametrize("mutate, where", [
    (lambda o: o.pop("start"), "start"),
    (lambda o: o["edges"][0].update(extra=1), "extra"),
    (lambda o: o["edges"][0].update(fragment="yes"), "fragment"),
    (lambda o: o["edges"][0].update(ip_prob=1.5), "ip"),
    (lambda o: o["edges"][0].update(acoustic=0.5), "acoustic"),
])
def test_malformed_records(mutate, where):
    obj = json.loads(record([edge(0, 0, 1, "a")], [0, 1]))
    mutate(obj)
    with pytest.raises(LatticeError, match=where):
        parse_lattice(json.dumps(obj), line=7)


def test_parse_error_carries_line():
    with pytest.raises(LatticeParseError) as info:
        parse_lattice("{not json", line=3)
    assert info.value.line == 3 and "line 3" in str(info.value)


def test_cycle_and_dangling_node_rejected():
    with pytest.raises(LatticeError, match="cycle"):
        parse_lattice(record([edge(0, 0, 1, "a"), edge(1, 1, 2, "b"), edge(2, 2, 1, "c"), edge(3, 2, 3, "d")],
                             [0, 1, 2, 3]))
    with pytest.raises(LatticeError, match="5"):
        parse_lattice(record([edge(0, 0, 1, "a")], [0, 1, 5], end=1))


def test_duplicate_edge_ids_rejected():
    with pytest.raises(LatticeError, match="duplicate"):
        parse_lattice(record([edge(0, 0, 1, "a"), edge(0, 0, 1, "b")], [0, 1]))


def test_empty_lattice_not_serialized():
    lat = WordLattice("t", [0, 1], [], 0, 1)
    with pytest.raises(LatticeError):
        serialize_lattice(lat)


def test_linear_lattice_examples():
    lat = linear_lattice(["i", "cannot", "no", "i", "can"], "t")
    assert len(lat.nodes) == 6 and len(lat.edges) == 5 and lat.is_linear()
    assert [e.word for e in lat.path_edges()] == ["i", "cannot", "no", "i", "can"]
    one = linear_lattice(["hello"], "h")
    assert len(one.nodes) == 2 and len(one.edges) == 1
    frag = linear_lattice(["thurs-|frag", "uh", "thursday|ip=0.25"], "f")
    assert [e.fragment for e in frag.edges] == [True, False, False]
    assert frag.edges[2].ip_prob == 0.25 and frag.edges[0].word == "thurs-"
    assert all(e.acoustic_score == 0.0 for e in frag.edges)
    with pytest.raises(LatticeError):
        linear_lattice([], "e")


def test_token_annotations():
    assert parse_token("Word|ip=0.83|frag") == ("word", 0.83, True)
    assert parse_token(format_token("x", 0.1 + 0.2, True)) == ("x", 0.1 + 0.2, True)
    with pytest.raises(LatticeParseError):
        parse_token("x|bogus")
    with pytest.raises(LatticeParseError):
        parse_token("x|ip=high")
    assert parse_transliteration_line("t9\ta b", 4) == ("t9", ["a", "b"])
    assert parse_transliteration_line("a b", 4) == ("turn000004", ["a", "b"])


def test_topological_order_examples():
    assert topological_order(linear_lattice(["a", "b"], "t")) == [0, 1, 2]
    assert topological_order(parse_lattice(diamond_record())) == [0, 1, 2]
    chain = WordLattice("t", [9, 0, 5], [WordEdge(0, 5, 9, "b"), WordEdge(1, 0, 5, "a")], 0, 9)
    assert topological_order(chain) == [0, 5, 9]


def test_serialized_record_has_slot_block():
    rng = random.Random(3)
    while True:
        lat = random_lattice(rng)
        if any(e.repair_slot for e in lat.edges):
            break
    rec = json.loads(serialize_lattice(lat))
    assert any("repair_slot" in e for e in rec["edges"])
    assert parse_lattice(serialize_lattice(lat)) == lat


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_round_trip_and_topology_properties(seed):
    lat = random_lattice(random.Random(seed))
    text = serialize_lattice(lat)
    back = parse_lattice(text)
    assert back == lat
    assert serialize_lattice(back) == text
    order = topological_order(lat)
    assert sorted(order) == sorted(lat.nodes)
    rank = {n: k for k, n in enumerate(order)}
    assert all(rank[e.from_node] < rank[e.to_node] for e in lat.edges)
    assert lattice_to_dict(back) == lattice_to_dict(lat)


@given(st.lists(st.sampled_from(["a", "b", "uh", "c|ip=0.5", "d-|frag"]), min_size=1, max_size=20))
def test_linear_lattice_property(tokens):
    lat = linear_lattice(tokens, "t")
    assert len(lat.edges) == len(tokens)
    assert len(lat.path_edges()) == len(tokens)
