import random
import threading

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import rebuild_partitions

from coauthornet.extract import CanonicalName, DdcClass, Publication
from coauthornet.index import CoauthorGraph, CoauthorIndex, PartitionKey, partitions_of

RW = PartitionKey.repository_wide()


def pub(record_id, authors, ddc=(), displays=None):
    displays = displays or {}
    return Publication(
        record_id,
        tuple(CanonicalName(a, displays.get(a, a.title())) for a in authors),
        frozenset(DdcClass(c) for c in ddc),
    )


def as_oracle(pubs):
    return [
        (p.record_id, [(a.canonical, a.display) for a in p.authors], set(p.ddc_codes))
        for p in pubs
        if p.authors
    ]


def assert_matches_rebuild(index, max_pair_authors=50):
    expected = rebuild_partitions(as_oracle(index.publications.values()), max_pair_authors)
    assert set(index.partitions()) == set(expected)
    for key, graph in expected.items():
        actual = index.subgraph(key)
        actual.check_invariants()
        assert actual == graph, key


def test_ingest_is_idempotent():
    once, twice = CoauthorIndex("r"), CoauthorIndex("r")
    p = pub("p1", ["a", "b", "c"], ["004"])
    once.ingest(p)
    twice.ingest(p)
    assert twice.ingest(p).edges_added == 0
    assert once.subgraph(RW) == twice.subgraph(RW)
    assert len(twice) == 1


def test_shared_publications_count_as_weight():
    index = CoauthorIndex("r")
    first = index.ingest(pub("p1", ["a", "b"]))
    second = index.ingest(pub("p2", ["a", "b"]))
    assert (first.edges_added, first.edges_incremented) == (1, 0)
    assert (second.edges_added, second.edges_incremented) == (0, 1)
    assert index.subgraph(RW).weight("a", "b") == 2
    assert index.subgraph(RW).publication_count == {"a": 2, "b": 2}


def test_partitions_receive_edges():
    index = CoauthorIndex("r")
    index.ingest(pub("p1", ["a", "b", "c"], ["004"]))
    keys = [RW, PartitionKey.ddc_exact("004"), PartitionKey.ddc_main("004")]
    assert index.partitions() == sorted(keys)
    for key in keys:
        assert [(a, b) for a, b, _ in index.subgraph(key).edges()] == [("a", "b"), ("a", "c"), ("b", "c")]
    assert PartitionKey.ddc_main("004").code == "000"
    assert_matches_rebuild(index)


def test_retract_restores_empty_graph():
    index = CoauthorIndex("r")
    index.ingest(pub("p1", ["a", "b"], ["300"]))
    assert index.retract("p1")
    assert index.partitions() == []
    assert index.subgraph(RW) == CoauthorGraph()


def test_retract_unknown_is_noop():
    index = CoauthorIndex("r")
    index.ingest(pub("p1", ["a", "b"]))
    before = index.subgraph(RW)
    generation = index.generation
    assert not index.retract("nope")
    assert index.subgraph(RW) == before
    assert index.generation == generation


def test_retract_decrements_weight():
    index = CoauthorIndex("r")
    index.ingest(pub("p1", ["a", "b"]))
    index.ingest(pub("p2", ["a", "b"]))
    index.retract("p1")
    assert index.subgraph(RW).weight("a", "b") == 1


def test_upsert_replaces_previous_version():
    index = CoauthorIndex("r")
    index.ingest(pub("p1", ["a", "b"], ["004"]))
    index.ingest(pub("p1", ["a", "c"], ["300"]))
    assert index.subgraph(PartitionKey.ddc_exact("004")) == CoauthorGraph()
    graph = index.subgraph(RW)
    assert graph.weight("a", "b") == 0 and graph.weight("a", "c") == 1
    assert_matches_rebuild(index)


def test_single_author_publication_is_an_isolated_node():
    index = CoauthorIndex("r")
    index.ingest(pub("p1", ["solo"]))
    graph = index.subgraph(RW)
    assert graph.nodes == ["solo"] and graph.number_of_edges() == 0


def test_authorless_publication_is_dropped():
    index = CoauthorIndex("r")
    index.ingest(pub("p1", []))
    assert len(index) == 0 and index.partitions() == []


def test_unknown_partition_is_empty():
    index = CoauthorIndex("r")
    index.ingest(pub("p1", ["a", "b"], ["004"]))
    assert index.subgraph(PartitionKey.ddc_exact("999")) == CoauthorGraph()


def test_hyper_authored_publication_is_capped():
    index = CoauthorIndex("r", max_pair_authors=50)
    authors = [f"author{i:03d}" for i in range(60)]
    index.ingest(pub("big", authors))
    graph = index.subgraph(RW)
    assert len(graph) == 60
    assert graph.number_of_edges() == 50 * 49 // 2
    assert index.capped_publications == 1
    assert_matches_rebuild(index)


def test_display_is_most_frequent_variant():
    index = CoauthorIndex("r")
    index.ingest(pub("p1", ["a", "b"], displays={"a": "Zed"}))
    index.ingest(pub("p2", ["a", "c"], displays={"a": "Alpha"}))
    index.ingest(pub("p3", ["a"], displays={"a": "Zed"}))
    assert index.subgraph(RW).display["a"] == "Zed"
    index.retract("p3")
    assert index.subgraph(RW).display["a"] == "Alpha"


def test_memoized_view_is_invalidated_on_write():
    index = CoauthorIndex("r")
    index.ingest(pub("p1", ["a", "b"]))
    gen, first = index.view(RW)
    assert index.subgraph(RW) is first
    index.ingest(pub("p2", ["b", "c"]))
    gen2, second = index.view(RW)
    assert gen2 > gen and second is not first
    assert first.weight("b", "c") == 0


@pytest.mark.parametrize("kind, code", [("ddc_main", "310"), ("ddc_exact", "12"), ("repository_wide", "004"), ("other", None)])
def test_partition_key_validation(kind, code):
    with pytest.raises(ValueError):
        PartitionKey(kind, code)


def test_partitions_of_publication():
    keys = partitions_of(pub("p", ["a"], ["004", "340"]))
    assert keys == sorted(
        [RW, PartitionKey.ddc_exact("004"), PartitionKey.ddc_exact("340"), PartitionKey.ddc_main("000"), PartitionKey.ddc_main("300")]
    )


AUTHORS = [f"a{i}" for i in range(8)]
CODES = ["004", "020", "300", "340"]


def random_operations(rng, count):
    ops = []
    for _ in range(count):
        record_id = f"r{rng.randrange(25)}"
        if rng.random() < 0.3:
            ops.append(("retract", record_id))
        else:
            authors = rng.sample(AUTHORS, rng.randrange(0, 5))
            codes = rng.sample(CODES, rng.randrange(0, 3))
            displays = {a: rng.choice([a.upper(), a.title()]) for a in authors}
            ops.append(("ingest", pub(record_id, authors, codes, displays)))
    return ops


def apply(index, ops, check_every=False):
    for op, arg in ops:
        if op == "ingest":
            index.ingest(arg)
        else:
            index.retract(arg)
        if check_every:
            for key in index.partitions():
                index.subgraph(key).check_invariants()


@pytest.mark.parametrize("seed", range(5))
def test_randomized_operations_match_rebuild(seed):
    rng = random.Random(seed)
    index = CoauthorIndex("r")
    apply(index, random_operations(rng, 200), check_every=True)
    assert_matches_rebuild(index)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32), st.integers(1, 60), st.integers(2, 4))
def test_property_rebuild_equivalence(seed, count, cap):
    rng = random.Random(seed)
    index = CoauthorIndex("r", max_pair_authors=cap)
    apply(index, random_operations(rng, count))
    assert_matches_rebuild(index, max_pair_authors=cap)


def test_readers_see_consistent_views_during_writes():
    index = CoauthorIndex("r")
    stop = threading.Event()
    problems = []

    def reader():
        while not stop.is_set():
            graph = index.subgraph(RW)
            try:
                graph.check_invariants()
                # every publication adds a triangle, so the edge count is a multiple of 3
                if graph.number_of_edges() % 3:
                    problems.append(graph.number_of_edges())
            except AssertionError as exc:
                problems.append(exc)

    threads = [threading.Thread(target=reader) for _ in range(3)]
    for t in threads:
        t.start()
    for i in range(300):
        index.ingest(pub(f"p{i}", [f"x{i}", f"y{i}", f"z{i}"]))
    stop.set()
    for t in threads:
        t.join()
    assert problems == []
    assert index.subgraph(RW).number_of_edges() == 900
