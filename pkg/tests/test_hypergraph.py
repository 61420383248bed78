import io

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hypersbm.errors import (
    BadEdgeSize,
    DuplicateNode,
    InvalidPartition,
    NodeOutOfRange,
    ParseError,
    WeightOutOfRange,
)
from hypersbm.hypergraph import (
    Partition,
    WeightedHypergraph,
    canonical_edge,
    parse_hypergraph,
    parse_partition,
    serialize_hypergraph,
    serialize_partition,
)


def test_canonical_edge_sorts():
    assert canonical_edge((3, 1, 2), n=5, d=3) == (1, 2, 3)
    assert canonical_edge((1, 2, 3), n=5, d=3) == (1, 2, 3)


@pytest.mark.parametrize("nodes, exc", [
    ((2, 2, 5), DuplicateNode),
    ((0, 2, 3), NodeOutOfRange),
    ((1, 2, 6), NodeOutOfRange),
    ((1, 2), BadEdgeSize),
])
def test_canonical_edge_errors(nodes, exc):
    with pytest.raises(exc):
        canonical_edge(nodes, n=5, d=3)


@given(st.integers(2, 6).flatmap(
    lambda d: st.tuples(st.just(d), st.permutations(range(1, 12))).map(lambda t: (t[0], t[1][:t[0]]))))
def test_canonical_edge_order_invariant_and_idempotent(case):
    d, nodes = case
    e = canonical_edge(nodes, n=11, d=d)
    assert canonical_edge(e, n=11, d=d) == e
    assert canonical_edge(list(reversed(nodes)), n=11, d=d) == e
    assert list(e) == sorted(nodes)


def test_parse_single_edge():
    h = parse_hypergraph("4 3\n1 2 3 0.5\n")
    assert (h.n, h.d, len(h)) == (4, 3, 1)
    assert h.weight((3, 2, 1)) == 0.5
    assert h.weight((1, 2, 4)) == 0.0


def test_parse_empty_and_comments():
    h = parse_hypergraph("# a comment\n4 3\n\n# another\n")
    assert len(h) == 0 and (h.n, h.d) == (4, 3)


def test_parse_weight_out_of_range():
    with pytest.raises(WeightOutOfRange):
        parse_hypergraph("4 3\n1 2 3 1.5\n")


@pytest.mark.parametrize("text, line", [
    ("4\n", 1),
    ("4 3\n1 2 0.5\n", 2),
    ("4 3\n1 2 3 abc\n", 2),
    ("4 3\n1 2 2 0.5\n", 2),
    ("4 3\n1 2 3 0.5\n3 2 1 0.2\n", 3),
    ("# c\n4 3\n1 2 9 0.5\n", 3),
])
def test_parse_errors_carry_line(text, line):
    with pytest.raises(ParseError) as info:
        parse_hypergraph(text)
    assert info.value.line == line


def test_serialize_deterministic_and_sorted():
    h = WeightedHypergraph.from_dict(5, 3, {(3, 4, 5): 0.25, (1, 2, 3): 0.5, (1, 2, 4): 1.0})
    text = serialize_hypergraph(h)
    assert text == serialize_hypergraph(parse_hypergraph(text))
    assert text.splitlines() == ["5 3", "1 2 3 0.5", "1 2 4 1.0", "3 4 5 0.25"]


def test_serialize_empty_is_header_only():
    assert serialize_hypergraph(WeightedHypergraph.empty(4, 3)) == "4 3\n"


def test_erasures_round_trip():
    h = parse_hypergraph("5 3\n1 2 3 x\n1 2 4 0\n2 3 4 1\n")
    assert h.censored
    assert not h.is_observed((1, 2, 3))
    assert h.is_observed((1, 2, 4))
    assert not h.is_observed((3, 4, 5))   # unlisted edge of a censored file reads as erased
    assert dict(h.items())[(1, 2, 3)] is None
    assert parse_hypergraph(serialize_hypergraph(h)) == h


def test_censored_pragma_without_erasures():
    h = parse_hypergraph("5 3\n# censored\n1 2 4 1\n")
    assert h.censored and not h.is_observed((1, 2, 3))
    assert parse_hypergraph(serialize_hypergraph(h)) == h


def test_round_trip_100_random_edges(rng):
    n, d = 20, 3
    pool = np.array([c for c in __import__("itertools").combinations(range(n), d)])
    pick = rng.choice(len(pool), size=100, replace=False)
    h = WeightedHypergraph.from_arrays(n, d, pool[pick], rng.random(100))
    assert len(h) == 100
    assert parse_hypergraph(serialize_hypergraph(h)) == h


weights = st.floats(0.0, 1.0, allow_nan=False)


@st.composite
def hypergraphs(draw):
    n = draw(st.integers(3, 9))
    d = draw(st.integers(2, min(4, n)))
    edges = draw(st.sets(st.lists(st.integers(1, n), min_size=d, max_size=d, unique=True)
                         .map(lambda v: tuple(sorted(v))), max_size=25))
    censored = draw(st.booleans())
    table = {}
    for e in edges:
        table[e] = draw(st.one_of(st.none(), weights) if censored else weights)
    return WeightedHypergraph.from_dict(n, d, table, censored=censored)


@given(hypergraphs())
def test_parse_serialize_identity(h):
    assert parse_hypergraph(io.StringIO(serialize_hypergraph(h))) == h


@given(hypergraphs())
def test_stored_invariants(h):
    assert np.all((h.weights >= 0) & (h.weights <= 1))
    assert np.all(np.diff(h.edges, axis=1) > 0)
    assert np.all((h.edges >= 0) & (h.edges < h.n))


def test_graph_case_stores_simple_graph():
    h = parse_hypergraph("3 2\n1 2 0.5\n2 3 1\n")
    assert h.weight((2, 1)) == 0.5
    with pytest.raises(ParseError):
        parse_hypergraph("3 2\n1 1 0.5\n")


def test_partition_basics():
    p = Partition.from_sizes([2, 3])
    assert p.one_based() == [1, 1, 2, 2, 2]
    assert p.sizes.tolist() == [2, 3]
    z = p.membership_matrix()
    assert z.sum() == 5 and z[0, 0] == 1 and z[4, 1] == 1
    assert p.relabel([1, 0]).one_based() == [2, 2, 1, 1, 1]
    with pytest.raises(InvalidPartition):
        Partition(np.array([0, 2]), 2)
    with pytest.raises(InvalidPartition):
        Partition.from_one_based([0, 1])


def test_partition_file_round_trip():
    p = Partition.from_one_based([2, 1, 1, 3])
    text = serialize_partition(p)
    assert text == "1 2\n2 1\n3 1\n4 3\n"
    assert parse_partition(text) == p
    with pytest.raises(ParseError):
        parse_partition("1 1\n3 2\n")
    with pytest.raises(ParseError):
        parse_partition("1 1\n1 2\n")
