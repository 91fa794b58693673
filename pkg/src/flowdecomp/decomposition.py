"""Layered partitions, virtual sources and virtual flows.

A layered partition assigns every node covered by the flows into a
destination ``d`` to a layer; layer ``l`` stands for the block ``b - l``.
From the layers and the encoding delays each source gets a *virtual
source* (the hop set that looks like the source to ``d``) and a *virtual
flow*, the acyclic part of its flow that actually helps ``d`` decode.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from functools import cached_property
from itertools import combinations, product
from typing import Iterable, Mapping

from .flows import (
    INFINITE,
    Flow,
    FlowSet,
    FlowSpecError,
    covered_nodes,
    format_set,
    is_finite,
    nodeset,
)


class MalformedDecomposition(ValueError):
    pass


class NotCompleteError(ValueError):
    pass


@dataclass(frozen=True)
class LayeredPartition:
    destination: int
    layers: tuple  # (frozenset, ...)

    def __post_init__(self):
        layers = tuple(nodeset(L) for L in self.layers)
        object.__setattr__(self, "layers", layers)
        if not layers or not layers[-1]:
            raise MalformedDecomposition("the deepest layer must be nonempty")
        seen = set()
        for L in layers:
            if seen & L:
                raise MalformedDecomposition(f"node(s) {format_set(seen & L)} in two layers")
            seen |= L

    @classmethod
    def from_layer_map(cls, d: int, layer_of: Mapping) -> "LayeredPartition":
        if not layer_of:
            raise MalformedDecomposition("empty layer assignment")
        if min(layer_of.values()) < 0:
            raise MalformedDecomposition("negative layer index")
        depth = max(layer_of.values()) + 1
        layers = [set() for _ in range(depth)]
        for i, l in layer_of.items():
            layers[l].add(i)
        return cls(d, tuple(layers))

    def __len__(self):
        return len(self.layers)

    def __getitem__(self, l):
        return self.layers[l]

    @cached_property
    def layer_map(self) -> dict:
        return {i: l for l, L in enumerate(self.layers) for i in L}

    @property
    def nodes(self) -> frozenset:
        return frozenset(self.layer_map)

    def layer_of(self, i: int) -> int:
        try:
            return self.layer_map[i]
        except KeyError:
            raise KeyError(f"node {i} is not in the partition") from None

    def up_to(self, l: int) -> frozenset:
        """Union of layers ``0..l``."""
        return frozenset().union(*self.layers[: l + 1])

    def nonempty_layers(self) -> tuple:
        return tuple(L for L in self.layers if L)

    def __str__(self):
        return "(" + ",".join(format_set(L) for L in self.layers) + ")"

    def render(self) -> str:
        return f"L d={self.destination} : {self}"


@dataclass(frozen=True)
class VirtualSource:
    source: int
    v_set: frozenset
    delay_to_v: int
    layer_of_v: int
    hop_index: int  # 0-based position of v_set inside f(s, d)

    @property
    def decode_offset(self) -> int:
        return self.delay_to_v + self.layer_of_v


@dataclass(frozen=True)
class VirtualFlow:
    source: int
    destination: int
    hops: tuple  # ((frozenset, Delay), ...), first hop set is v(s)

    @property
    def hop_sets(self) -> tuple:
        return tuple(z for z, _ in self.hops)

    @property
    def delays(self) -> tuple:
        return tuple(k for _, k in self.hops)

    @property
    def nodes(self) -> frozenset:
        return frozenset().union(*self.hop_sets)

    def __str__(self):
        return Flow(self.source, self.destination, self.hops).arrow_str()


@dataclass(frozen=True)
class DecodePlan:
    offsets: Mapping  # source -> k_{s,v(s)} + layer(v(s))
    fresh: tuple  # A_l(all sources), per layer
    known: tuple  # Ã_l(all sources), per layer


@dataclass(frozen=True)
class FlowDecomposition:
    flow_set: FlowSet
    partition: LayeredPartition

    def __post_init__(self):
        covered = covered_nodes(self.flow_set, self.destination, self.sources)
        if self.partition.nodes != covered:
            raise MalformedDecomposition(
                f"partition covers {format_set(self.partition.nodes)}, "
                f"flows into {self.destination} cover {format_set(covered)}"
            )

    @property
    def destination(self) -> int:
        return self.partition.destination

    @cached_property
    def sources(self) -> tuple:
        return self.flow_set.sources_for(self.partition.destination)

    def layer_of(self, i: int) -> int:
        return self.partition.layer_of(i)

    def flow(self, s: int) -> Flow:
        return self.flow_set.flow(s, self.destination)

    @cached_property
    def virtual_sources(self) -> dict:
        return {s: _virtual_source(self, s) for s in self.sources}

    @cached_property
    def virtual_flows(self) -> dict:
        return {s: _virtual_flow(self, s) for s in self.sources}

    def virtual_nodes(self, S: Iterable[int]) -> frozenset:
        """``G_d(S)``: nodes covered by the virtual flows of ``S``."""
        return frozenset().union(*(self.virtual_flows[s].nodes for s in S))

    def with_partition(self, partition: LayeredPartition) -> "FlowDecomposition":
        return FlowDecomposition(self.flow_set, partition)

    def __str__(self):
        return self.partition.render()


def _virtual_source(decomp: FlowDecomposition, s: int) -> VirtualSource:
    f = decomp.flow(s)
    best = None
    for idx, z in enumerate(f.hop_sets):
        k = f.delay_at(idx)
        for i in z:
            u = decomp.layer_of(i) + k
            # ties on u resolve to the shortest hop prefix
            key = (u, idx)
            if best is None or key < best[0]:
                best = (key, idx, {i})
            elif key == best[0]:
                best[2].add(i)
    (_, idx), _, members = best
    layers = {decomp.layer_of(i) for i in members}
    if len(layers) != 1:
        raise MalformedDecomposition(f"v({s}) members disagree on layer: {sorted(layers)}")
    return VirtualSource(s, frozenset(members), f.delay_at(idx), layers.pop(), idx)


def _virtual_flow(decomp: FlowDecomposition, s: int) -> VirtualFlow:
    f = decomp.flow(s)
    v = decomp.virtual_sources[s]
    kept = [(v.hop_index, v.v_set)]
    for idx in range(v.hop_index + 1, len(f)):
        rel = f.delay_at(idx) - v.delay_to_v
        z = frozenset(i for i in f.hop_sets[idx] if v.layer_of_v - decomp.layer_of(i) == rel)
        if z:
            kept.append((idx, z))
    hops = []
    for (a, z), nxt in zip(kept, kept[1:] + [(len(f), None)]):
        hops.append((z, f.delay_at(nxt[0]) - f.delay_at(a) if is_finite(f.delay_at(nxt[0])) else INFINITE))
    return VirtualFlow(s, decomp.destination, tuple(hops))


def virtual_source(decomp: FlowDecomposition, s: int) -> VirtualSource:
    if s not in decomp.virtual_sources:
        raise KeyError(f"no flow for pair ({s}, {decomp.destination})")
    return decomp.virtual_sources[s]


def virtual_flow(decomp: FlowDecomposition, s: int) -> VirtualFlow:
    if s not in decomp.virtual_flows:
        raise KeyError(f"no flow for pair ({s}, {decomp.destination})")
    return decomp.virtual_flows[s]


def check_splitting(decomp: FlowDecomposition) -> list:
    """Check both index-coding inequalities for every source and flow node.

    Downstream of (and including) the virtual source's hop set:
    ``layer(v) - layer(i) <= k_{v,i}``.  Upstream of it:
    ``layer(i) - layer(v) > k_{i,v}``.  Returns the violations; an empty
    list means the decode vector splits every encoded vector.
    """
    out = []
    for s in decomp.sources:
        f = decomp.flow(s)
        v = decomp.virtual_sources[s]
        for idx, z in enumerate(f.hop_sets):
            k = f.delay_at(idx)
            for i in sorted(z):
                diff = v.layer_of_v - decomp.layer_of(i)
                if idx >= v.hop_index:
                    if not diff <= k - v.delay_to_v:
                        out.append(f"s={s} i={i}: layer(v)-layer(i)={diff} > k_v,i={k - v.delay_to_v}")
                elif not -diff > v.delay_to_v - k:
                    out.append(f"s={s} i={i}: layer(i)-layer(v)={-diff} <= k_i,v={v.delay_to_v - k}")
    return out


def active_sets(decomp: FlowDecomposition, S: Iterable[int], l: int) -> tuple:
    """``(A_l(S), Ã_l(S))`` for layer ``l``."""
    if not 0 <= l < len(decomp.partition):
        raise IndexError(f"layer {l} out of range")
    fresh = decomp.virtual_nodes(S) & decomp.partition[l]
    return fresh, decomp.partition.up_to(l) - fresh


def decode_vector_offsets(decomp: FlowDecomposition) -> DecodePlan:
    offsets = {s: v.decode_offset for s, v in decomp.virtual_sources.items()}
    fresh, known = [], []
    for l in range(len(decomp.partition)):
        a, at = active_sets(decomp, decomp.sources, l)
        fresh.append(a)
        known.append(at)
    return DecodePlan(offsets, tuple(fresh), tuple(known))


def is_complete(decomp: FlowDecomposition, S: Iterable[int] = None) -> bool:
    """True iff ``F_d(S) == G_d(S)`` (all sources when ``S`` is None)."""
    S = decomp.sources if S is None else tuple(S)
    return covered_nodes(decomp.flow_set, decomp.destination, S) == decomp.virtual_nodes(S)


def bifurcates(decomp: FlowDecomposition, S: Iterable[int]) -> bool:
    """True iff some layer splits ``F_d(S)`` (deep side) from the rest."""
    inner = covered_nodes(decomp.flow_set, decomp.destination, S)
    rest = decomp.partition.nodes - inner
    if not inner or not rest:
        return True
    return max(map(decomp.layer_of, rest)) <= min(map(decomp.layer_of, inner))


def partition_from_virtual(g_set: Iterable[VirtualFlow], initial_layers: Mapping) -> LayeredPartition:
    """Rebuild the layers from virtual flows and the layers of their sources.

    ``initial_layers`` maps each source id to ``layer(v(s))``.  Hop set
    ``Z_l`` of a virtual flow lands on ``layer(v(s)) - (k_1 + ... + k_{l-1})``.
    """
    g_set = list(g_set)
    if not g_set:
        raise MalformedDecomposition("no virtual flows given")
    layer_of = {}
    for g in g_set:
        top = initial_layers[g.source]
        for idx, z in enumerate(g.hop_sets):
            l = top - sum(g.delays[:idx])
            if l < 0:
                raise MalformedDecomposition(f"negative layer {l} for {format_set(z)} on g({g.source})")
            for i in z:
                if layer_of.setdefault(i, l) != l:
                    raise MalformedDecomposition(f"node {i} assigned layers {layer_of[i]} and {l}")
    return LayeredPartition.from_layer_map(g_set[0].destination, layer_of)


def _candidate_virtual_flows(f: Flow):
    """Nonempty hop-index subsequences of ``f``, longest first."""
    n = len(f)
    for size in range(n, 0, -1):
        for idxs in combinations(range(n), size):
            yield idxs


def _layers_for(f: Flow, idxs) -> dict:
    # the last kept hop sits on layer 0; earlier hops go deeper by their delay
    end = f.delay_at(idxs[-1])
    return {i: end - f.delay_at(idx) for idx in idxs for i in f.hop_sets[idx]}


def construct_complete(F: FlowSet, d: int) -> FlowDecomposition:
    """Find a complete decomposition for destination ``d``.

    Backtracks over per-source virtual-flow candidates (smallest source id
    first), placing the last hop of each selected virtual flow at offset
    ``t`` from layer 0, smallest ``|t|`` first.  Disjoint selections are tried before
    overlapping ones; every candidate partition is re-derived and kept only
    if it is complete.  Layers are shifted so the shallowest one is nonempty.
    """
    sources = F.sources_for(d)
    if not sources:
        raise MalformedDecomposition(f"no flows terminate at {d}")
    target = covered_nodes(F, d, sources)
    flows = [F.flow(s, d) for s in sources]
    cands = [list(_candidate_virtual_flows(f)) for f in flows]
    # an offset beyond the total finite delay never helps: differences are all that matter
    span = 1 + sum(k for f in flows for k in f.delays if is_finite(k))

    def search(pos, layer_of, disjoint):
        if pos == len(flows):
            if set(layer_of) != target:
                return None
            low = min(layer_of.values())
            try:
                part = LayeredPartition.from_layer_map(d, {i: l - low for i, l in layer_of.items()})
                decomp = FlowDecomposition(F, part)
            except MalformedDecomposition:
                return None
            return decomp if is_complete(decomp) else None
        f = flows[pos]
        for idxs in cands[pos]:
            base = _layers_for(f, idxs)
            for t in (sorted(range(-span, span + 1), key=lambda x: (abs(x), x)) if pos else (0,)):
                placed = {i: l + t for i, l in base.items()}
                clash = set(placed) & set(layer_of)
                if disjoint and clash:
                    break
                if any(layer_of[i] != placed[i] for i in clash):
                    continue
                found = search(pos + 1, {**layer_of, **placed}, disjoint)
                if found is not None:
                    return found
        return None

    for disjoint in (True, False):
        found = search(0, {}, disjoint)
        if found is not None:
            return found
    raise MalformedDecomposition(
        f"no complete decomposition found for destination {d} (sources {list(sources)})"
    )


def equivalent(d1: FlowDecomposition, d2: FlowDecomposition) -> bool:
    """Same virtual flows (as hop-set sequences) and same nonempty layers."""
    if d1.destination != d2.destination or d1.sources != d2.sources:
        return False
    for s in d1.sources:
        if d1.virtual_flows[s].hop_sets != d2.virtual_flows[s].hop_sets:
            return False
    return d1.partition.nonempty_layers() == d2.partition.nonempty_layers()


def enumerate_partitions(nodes: Iterable[int], d: int, max_layers: int):
    """Every layered partition of ``nodes`` with at most ``max_layers`` layers.

    Exponential; meant for brute-force checks on small instances.
    """
    nodes = sorted(nodes)
    for assign in product(range(max_layers), repeat=len(nodes)):
        yield LayeredPartition.from_layer_map(d, dict(zip(nodes, assign)))


# ---------------------------------------------------------------- text format

_PART_RE = re.compile(r"^L\s*d\s*=\s*(\d+)\s*:\s*(\(.*\))$")


def parse_layers(text: str) -> tuple:
    text = text.strip()
    if not (text.startswith("(") and text.endswith(")")):
        raise FlowSpecError(f"expected a parenthesised layer list, got {text!r}")
    sets = re.findall(r"\{([^{}]*)\}", text)
    rebuilt = "(" + ",".join("{" + s + "}" for s in sets) + ")"
    if re.sub(r"\s", "", rebuilt) != re.sub(r"\s", "", text):
        raise FlowSpecError(f"bad layer list {text!r}")
    out = []
    for body in sets:
        body = body.strip()
        out.append(frozenset(int(t) for t in body.split(",")) if body else frozenset())
    return tuple(out)


def parse_partition(text: str, d: int = None) -> LayeredPartition:
    """Parse ``L d=5 : ({3,4},{},{2},{1})`` or a bare ``({3,4},...)`` with ``d``."""
    m = _PART_RE.match(text.strip())
    if m:
        return LayeredPartition(int(m.group(1)), parse_layers(m.group(2)))
    if d is None:
        raise FlowSpecError(f"partition {text!r} needs a destination")
    return LayeredPartition(d, parse_layers(text))
