import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from flowdecomp.decomposition import (
    FlowDecomposition,
    LayeredPartition,
    MalformedDecomposition,
    active_sets,
    bifurcates,
    check_splitting,
    construct_complete,
    decode_vector_offsets,
    enumerate_partitions,
    equivalent,
    is_complete,
    parse_partition,
    partition_from_virtual,
    virtual_flow,
    virtual_source,
)
from flowdecomp.flows import FlowSpecError, covered_nodes, cumulative_delay, is_finite, parse_flow_spec

import helpers
from helpers import COOP, DIAMOND, decompositions, flow_sets

SFD = "flow 1 -> 3 : {1} k=1 ; {2} k=inf"
SFD2 = "flow 1 -> 3 : {1} k=2 ; {2} k=inf"


def dec(spec, part, d):
    return FlowDecomposition(parse_flow_spec(spec), parse_partition(part, d))


def test_partition_text_format():
    p = parse_partition("L d=5 : ({3,4},{},{2},{1})")
    assert p.destination == 5 and len(p) == 4 and p[1] == frozenset()
    assert str(p) == "({3,4},{},{2},{1})"
    assert p.render() == "L d=5 : ({3,4},{},{2},{1})"
    assert parse_partition(" ( {4,3} , {} ,{2},{1} ) ", 5) == p
    assert parse_partition("({})".replace("{}", "{1}"), 2).layers == (frozenset({1}),)


@pytest.mark.parametrize("text", ["({1},{})", "({1},{1})", "{1},{2}", "({1},{2}", "(1,2)"])
def test_malformed_partitions(text):
    with pytest.raises((MalformedDecomposition, FlowSpecError)):
        parse_partition(text, 5)


def test_partition_must_cover_exactly_the_flow_nodes():
    with pytest.raises(MalformedDecomposition):
        dec(DIAMOND, "({3},{2},{1})", 5)


def test_virtual_sources_and_flows_examples():
    D = dec(SFD, "({2},{1})", 3)
    assert virtual_source(D, 1).v_set == {1}
    assert dec(SFD, "({2},{},{1})", 3).virtual_sources[1].v_set == {2}
    s1 = dec(DIAMOND, "({3,4},{},{2},{1})", 5)
    assert s1.virtual_sources[1].v_set == {1} and s1.virtual_sources[2].v_set == {4}
    assert str(virtual_flow(s1, 1)) == "1 -1-> 2 -2-> 3 -inf-> 5"
    assert str(s1.virtual_flows[2]) == "4 -inf-> 5"
    assert str(dec(DIAMOND, "({3},{},{4},{1,2})", 5).virtual_flows[1]) == "1 -3-> 3 -inf-> 5"
    single = dec("flow 1 -> 2 : {1} k=inf", "({1})", 2)
    assert str(single.virtual_flows[1]) == "1 -inf-> 2"
    with pytest.raises(KeyError):
        virtual_source(s1, 3)


def test_decode_offsets():
    assert decode_vector_offsets(dec(DIAMOND, "({3,4},{},{2},{1})", 5)).offsets == {1: 3, 2: 1}
    assert decode_vector_offsets(dec(DIAMOND, "({3},{},{},{1,4},{2})", 5)).offsets == {1: 3, 2: 4}
    assert decode_vector_offsets(dec(SFD, "({1},{2})", 3)).offsets == {1: 0}


def test_active_sets_examples():
    D = dec(SFD, "({2},{1})", 3)
    assert active_sets(D, {1}, 0) == ({2}, frozenset())
    assert active_sets(D, {1}, 1) == ({1}, {2})
    D = dec(SFD, "({1},{2})", 3)
    assert active_sets(D, {1}, 0)[0] == {1} and active_sets(D, {1}, 1)[0] == frozenset()
    assert active_sets(D, set(), 1) == (frozenset(), {1, 2})
    with pytest.raises(IndexError):
        active_sets(D, {1}, 2)


def test_splitting_examples():
    assert check_splitting(dec(SFD, "({2},{1})", 3)) == []
    assert check_splitting(dec(SFD2, "({2},{},{1})", 3)) == []


def test_completeness_examples():
    s1 = dec(DIAMOND, "({3,4},{},{2},{1})", 5)
    assert is_complete(s1, {1}) and is_complete(s1, {1, 2})
    s3 = dec(DIAMOND, "({3},{},{4},{1,2})", 5)
    assert is_complete(s3, {1, 2}) and is_complete(s3, {2}) and not is_complete(s3, {1})
    assert not is_complete(dec(SFD, "({2},{},{1})", 3))


def test_bifurcation_examples():
    assert bifurcates(dec(DIAMOND, "({3,4},{},{2},{1})", 5), {1})
    assert bifurcates(dec(DIAMOND, "({3},{},{},{1,4},{2})", 5), {2})
    assert not bifurcates(dec(DIAMOND, "({3},{},{4},{1,2})", 5), {2})


def test_construct_complete_examples():
    D = construct_complete(parse_flow_spec(DIAMOND), 5)
    assert str(D.partition) == "({3,4},{},{2},{1})"
    assert D.virtual_sources[1].layer_of_v == 3 and D.virtual_sources[2].layer_of_v == 0
    assert str(construct_complete(parse_flow_spec(SFD), 3).partition) == "({2},{1})"
    coop = parse_flow_spec(COOP)
    D = construct_complete(coop, 3)
    oracle = {p for p in enumerate_partitions({1, 2}, 3, 3) if is_complete(FlowDecomposition(coop, p))}
    assert D.partition in oracle


def test_partition_from_virtual_example():
    s1 = dec(DIAMOND, "({3,4},{},{2},{1})", 5)
    part = partition_from_virtual(s1.virtual_flows.values(), {1: 3, 2: 0})
    assert str(part) == "({3,4},{},{2},{1})"
    single = partition_from_virtual([s1.virtual_flows[2]], {2: 0})
    assert len(single) == 1
    with pytest.raises(MalformedDecomposition):
        partition_from_virtual(s1.virtual_flows.values(), {1: 1, 2: 0})


def test_equivalence_examples():
    a = dec(DIAMOND, "({3},{4},{2},{1})", 5)
    b = dec(DIAMOND, "({},{3},{4},{2},{1})", 5)
    assert equivalent(a, b) and equivalent(a, a)
    assert equivalent(dec(SFD, "({2},{1})", 3), dec(SFD2, "({2},{},{1})", 3))
    assert not equivalent(a, dec(DIAMOND, "({3},{},{4},{1,2})", 5))


def test_enumerate_partitions_counts():
    parts = list(enumerate_partitions({1, 2}, 3, 2))
    assert len(set(parts)) == 4
    assert parse_partition("({},{1,2})", 3) in parts
    assert len(list(enumerate_partitions({1, 2, 3}, 4, 3))) == 27


def _split_oracle(D):
    """Every node of f(s,d) has u(s,i) = layer(i) + k_{s,i} >= u(s,v(s)); strictly for hops before v(s)."""
    for s in D.sources:
        f = D.flow(s)
        v = D.virtual_sources[s]
        u_v = v.layer_of_v + v.delay_to_v
        for idx, z in enumerate(f.hop_sets):
            for i in z:
                u = D.layer_of(i) + cumulative_delay(D.flow_set, s, i)
                if u < u_v or (idx < v.hop_index and u == u_v):
                    return False
    return True


def test_splitting_agrees_with_block_index_oracle():
    rng = np.random.default_rng(11)
    for _ in range(500):
        D = helpers.random_decomposition(rng)
        assert (check_splitting(D) == []) == _split_oracle(D)


@given(decompositions())
def test_virtual_source_members_share_layer_and_delay(D):
    for s, v in D.virtual_sources.items():
        assert {D.layer_of(i) for i in v.v_set} == {v.layer_of_v}
        assert {cumulative_delay(D.flow_set, s, i) for i in v.v_set} == {v.delay_to_v}


@given(decompositions())
def test_virtual_flows_are_acyclic(D):
    for s, g in D.virtual_flows.items():
        assert g.hop_sets[0] == D.virtual_sources[s].v_set
        layers = [D.layer_of(next(iter(z))) for z in g.hop_sets]
        for a, b, k in zip(layers, layers[1:], g.delays):
            assert a - b == k and k >= 1


@given(decompositions(), st.data())
def test_active_set_invariants(D, data):
    src = D.sources
    S1 = data.draw(st.sets(st.sampled_from(src)))
    S2 = S1 | data.draw(st.sets(st.sampled_from(src)))
    plan = decode_vector_offsets(D)
    for l in range(len(D.partition)):
        a1, k1 = active_sets(D, S1, l)
        a2, _ = active_sets(D, S2, l)
        assert a1 <= a2
        assert a1 | k1 == D.partition.up_to(l)
        assert plan.fresh[l] <= D.partition[l]
        assert plan.fresh[l] | plan.known[l] >= D.partition[l]


@given(decompositions())
def test_splitting_never_fails(D):
    assert check_splitting(D) == []


@given(flow_sets())
def test_construct_complete_is_complete(F):
    d = max(F.roles.all_nodes)
    D = construct_complete(F, d)
    assert is_complete(D)
    assert check_splitting(D) == []


@given(decompositions())
def test_partition_from_virtual_inverts_on_complete(D):
    if not is_complete(D):
        return
    layers = {s: v.layer_of_v for s, v in D.virtual_sources.items()}
    assert partition_from_virtual(D.virtual_flows.values(), layers) == D.partition


@given(decompositions())
def test_sources_bifurcate_trivially(D):
    assert bifurcates(D, D.sources)
    assert bifurcates(D, ())
