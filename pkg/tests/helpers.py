"""Random instances shared by the property tests."""
from __future__ import annotations

import numpy as np
from hypothesis import assume
from hypothesis import strategies as st

from flowdecomp.decomposition import FlowDecomposition, LayeredPartition, is_complete
from flowdecomp.flows import INFINITE, Flow, FlowSet, covered_nodes, validate_flow_set

DIAMOND = "flow 1 -> 5 : {1} k=1 ; {2} k=2 ; {3} k=inf\nflow 2 -> 5 : {2} k=1 ; {4} k=inf\n"
MARC3 = ("flow 1 -> 5 : {1} k=1 ; {4} k=inf\nflow 2 -> 5 : {2} k=1 ; {4} k=inf\n"
         "flow 3 -> 5 : {3} k=1 ; {4} k=inf\n")
COOP = "flow 1 -> 3 : {1} k=1 ; {2} k=inf\nflow 2 -> 3 : {2} k=1 ; {1} k=inf\n"


def _build(n, plan):
    """``plan``: source -> [(hop set, delay), ...] for flows into node ``n``."""
    flows = [Flow(s, n, tuple((frozenset(z), k) for z, k in hops)) for s, hops in sorted(plan.items())]
    return FlowSet.of(*flows)


def random_flow_set(rng: np.random.Generator, max_nodes: int = 5, max_delay: int = 3) -> FlowSet:
    """One destination, up to three sources, singleton or pair hop sets."""
    while True:
        n = int(rng.integers(3, max_nodes + 1))
        others = list(range(1, n))
        k = int(rng.integers(1, min(3, len(others)) + 1))
        sources = sorted(rng.choice(others, size=k, replace=False).tolist())
        plan = {}
        for s in sources:
            pool = [i for i in others if i != s]
            relays = rng.permutation(pool)[: int(rng.integers(0, len(pool) + 1))].tolist()
            sets = [{s}]
            for r in relays:
                if len(sets) > 1 and rng.random() < 0.25:
                    sets[-1].add(r)
                else:
                    sets.append({r})
            delays = [int(rng.integers(1, max_delay + 1)) for _ in sets]
            if rng.random() < 0.6:
                delays[-1] = INFINITE
            plan[s] = list(zip(sets, delays))
        F = _build(n, plan)
        if not validate_flow_set(F):
            return F


def random_partition(rng: np.random.Generator, F: FlowSet, d: int, max_layers: int = 5) -> LayeredPartition:
    nodes = sorted(covered_nodes(F, d, F.sources_for(d)))
    return LayeredPartition.from_layer_map(d, {i: int(rng.integers(0, max_layers)) for i in nodes})


def random_decomposition(rng, max_nodes=5, max_delay=3, max_layers=5, complete=False) -> FlowDecomposition:
    while True:
        F = random_flow_set(rng, max_nodes, max_delay)
        d = max(F.roles.all_nodes)
        D = FlowDecomposition(F, random_partition(rng, F, d, max_layers))
        if not complete or is_complete(D):
            return D


@st.composite
def flow_sets(draw, max_nodes=5, max_delay=3):
    n = draw(st.integers(3, max_nodes))
    others = list(range(1, n))
    sources = draw(st.lists(st.sampled_from(others), min_size=1, max_size=min(3, len(others)), unique=True))
    plan = {}
    for s in sorted(sources):
        pool = [i for i in others if i != s]
        relays = draw(st.permutations(pool)) if pool else []
        relays = relays[: draw(st.integers(0, len(relays)))]
        sets = [{s}]
        for r in relays:
            if len(sets) > 1 and draw(st.booleans()):
                sets[-1].add(r)
            else:
                sets.append({r})
        delays = [draw(st.integers(1, max_delay)) for _ in sets]
        if draw(st.booleans()):
            delays[-1] = INFINITE
        plan[s] = list(zip(sets, delays))
    F = _build(n, plan)
    assume(not validate_flow_set(F))
    return F


@st.composite
def decompositions(draw, max_nodes=5, max_delay=3, max_layers=5):
    F = draw(flow_sets(max_nodes, max_delay))
    d = max(F.roles.all_nodes)
    nodes = sorted(covered_nodes(F, d, F.sources_for(d)))
    layers = draw(st.lists(st.integers(0, max_layers - 1), min_size=len(nodes), max_size=len(nodes)))
    return FlowDecomposition(F, LayeredPartition.from_layer_map(d, dict(zip(nodes, layers))))


# criterion number -> (passed, detail); printed by the terminal-summary hook in conftest
ACCEPTANCE = {}
