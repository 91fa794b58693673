"""Flows, flow sets, encoding delays and the node sets they cover.

A flow ``f(s, d)`` is an ordered list of disjoint hop sets ``Z_1 ... Z_q``
with ``Z_1 = {s}``.  Each hop set carries the one-hop encoding delay of a
message leaving it; the last delay is the delay into the destination and
may be :data:`INFINITE` (the destination never forwards).
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Mapping, Union


class _Infinite:
    """Saturating infinite delay.  Compares greater than every integer."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INFINITE"

    def __str__(self):
        return "inf"

    def __reduce__(self):
        return (_Infinite, ())

    def __add__(self, other):
        return self

    __radd__ = __add__

    def __sub__(self, other):
        if other is self:
            raise ArithmeticError("INFINITE - INFINITE is undefined")
        return self

    def __eq__(self, other):
        return other is self

    def __hash__(self):
        return hash("flowdecomp.INFINITE")

    def __lt__(self, other):
        return False

    def __le__(self, other):
        return other is self

    def __gt__(self, other):
        return other is not self

    def __ge__(self, other):
        return True


INFINITE = _Infinite()

Delay = Union[int, _Infinite]
NodeSet = frozenset


def is_finite(k: Delay) -> bool:
    return k is not INFINITE


def nodeset(nodes: Iterable[int]) -> frozenset:
    return frozenset(int(i) for i in nodes)


def format_set(nodes: Iterable[int]) -> str:
    return "{" + ",".join(str(i) for i in sorted(nodes)) + "}"


class FlowSpecError(ValueError):
    """Raised for malformed flow-spec text or inconsistent flow sets."""


@dataclass(frozen=True)
class Flow:
    source: int
    destination: int
    hops: tuple  # ((frozenset, Delay), ...)

    def __post_init__(self):
        hops = tuple((nodeset(z), k) for z, k in self.hops)
        object.__setattr__(self, "hops", hops)

    @classmethod
    def from_path(cls, path: Iterable, delays: Iterable[Delay]) -> "Flow":
        """Build a flow from a node path ``[s, ..., d]`` and its hop delays.

        Elements of ``path`` may be single node ids or iterables of ids.
        """
        path = [p if isinstance(p, Iterable) else (p,) for p in path]
        delays = list(delays)
        if len(delays) != len(path) - 1:
            raise FlowSpecError("need exactly one delay per hop")
        (s,), (d,) = path[0], path[-1]
        return cls(s, d, tuple(zip(path[:-1], delays)))

    def __len__(self) -> int:
        return len(self.hops)

    @property
    def hop_sets(self) -> tuple:
        return tuple(z for z, _ in self.hops)

    @property
    def delays(self) -> tuple:
        return tuple(k for _, k in self.hops)

    @property
    def nodes(self) -> frozenset:
        return frozenset().union(*self.hop_sets)

    def hop_index(self, i: int):
        """0-based index of the hop set holding ``i``, or None."""
        for idx, z in enumerate(self.hop_sets):
            if i in z:
                return idx
        return None

    def delay_at(self, idx: int) -> Delay:
        """Cumulative delay from the source to hop set ``idx``.

        ``idx == len(self)`` addresses the destination.
        """
        total = 0
        for k in self.delays[:idx]:
            total = total + k
        return total

    def __str__(self):
        parts = [f"{format_set(z)} k={k}" for z, k in self.hops]
        return f"flow {self.source} -> {self.destination} : " + " ; ".join(parts)

    def arrow_str(self) -> str:
        """Compact ``1 -1-> 2 -inf-> 5`` rendering."""
        out = []
        for z, k in self.hops:
            label = str(next(iter(z))) if len(z) == 1 else format_set(z)
            out.append(f"{label} -{k}->")
        return " ".join(out) + f" {self.destination}"


@dataclass(frozen=True)
class ChannelRoles:
    all_nodes: frozenset
    inputs: frozenset
    sources: frozenset
    destinations: frozenset
    relays: frozenset

    def __post_init__(self):
        for name in ("all_nodes", "inputs", "sources", "destinations", "relays"):
            object.__setattr__(self, name, nodeset(getattr(self, name)))

    @classmethod
    def infer(cls, flows: Iterable[Flow], inputs=None) -> "ChannelRoles":
        flows = list(flows)
        sources = {f.source for f in flows}
        dests = {f.destination for f in flows}
        relays = set()
        for f in flows:
            for z in f.hop_sets[1:]:
                relays |= z
        if inputs is None:
            inputs = sources | relays
        inputs = set(inputs)
        return cls(inputs | dests, inputs, sources, dests, relays)

    def violations(self) -> list:
        out = []
        if not self.sources <= self.inputs:
            out.append("sources not contained in inputs")
        if not self.inputs <= self.all_nodes:
            out.append("inputs not contained in all_nodes")
        if not self.relays <= self.inputs:
            out.append("relays not contained in inputs")
        if not self.destinations <= self.all_nodes:
            out.append("destinations not contained in all_nodes")
        if any(i < 0 for i in self.all_nodes):
            out.append("negative node id")
        return out


@dataclass(frozen=True)
class FlowSet:
    flows: Mapping  # (s, d) -> Flow
    roles: ChannelRoles = field(default=None)

    def __post_init__(self):
        flows = dict(self.flows)
        object.__setattr__(self, "flows", flows)
        if self.roles is None:
            object.__setattr__(self, "roles", ChannelRoles.infer(flows.values()))

    @classmethod
    def of(cls, *flows: Flow, roles: ChannelRoles = None) -> "FlowSet":
        return cls({(f.source, f.destination): f for f in flows}, roles)

    def __getitem__(self, key) -> Flow:
        return self.flows[key]

    def __contains__(self, key) -> bool:
        return key in self.flows

    def __iter__(self):
        return iter(self.flows.values())

    def __len__(self):
        return len(self.flows)

    def sources_for(self, d: int) -> tuple:
        """Sorted sources with a flow terminating at ``d``."""
        return tuple(sorted(s for (s, dd) in self.flows if dd == d))

    def flow(self, s: int, d: int) -> Flow:
        try:
            return self.flows[(s, d)]
        except KeyError:
            raise KeyError(f"no flow for pair ({s}, {d})") from None

    def __str__(self):
        return "\n".join(str(self.flows[k]) for k in sorted(self.flows))


def validate_flow_set(F: FlowSet, roles: ChannelRoles = None) -> list:
    """Return the violated invariants of ``F`` (empty list when valid)."""
    roles = roles or F.roles
    out = list(roles.violations())
    for (s, d), f in sorted(F.flows.items()):
        tag = f"f({s},{d})"
        if (f.source, f.destination) != (s, d):
            out.append(f"{tag}: keyed under the wrong pair")
        if s == d:
            out.append(f"{tag}: source equals destination")
        if s not in roles.sources:
            out.append(f"{tag}: source {s} not in sources")
        if d not in roles.destinations:
            out.append(f"{tag}: destination {d} not in destinations")
        if not f.hops:
            out.append(f"{tag}: empty hop sequence")
            continue
        if f.hop_sets[0] != frozenset({s}):
            out.append(f"{tag}: first hop set must be {{{s}}}")
        for l, (z, k) in enumerate(f.hops, start=1):
            if not z:
                out.append(f"{tag}: hop set Z_{l} is empty")
            if d in z:
                out.append(f"{tag}: destination inside hop set Z_{l}")
            if l > 1:
                if s in z:
                    out.append(f"{tag}: source repeated in hop set Z_{l}")
                extra = z - roles.relays
                if extra:
                    out.append(f"{tag}: hop set Z_{l} has non-relay nodes {format_set(extra)}")
            if is_finite(k):
                if not isinstance(k, int) or k < 1:
                    out.append(f"{tag}: delay k_{l} must be a positive integer")
            elif l < len(f):
                out.append(f"{tag}: INFINITE delay on non-terminal hop k_{l}")
        for (a, za), (b, zb) in combinations(enumerate(f.hop_sets, start=1), 2):
            common = za & zb
            if common:
                out.append(f"{tag}: hop sets Z_{a} and Z_{b} share nodes {format_set(common)}")
    for s in sorted(roles.sources):
        for d in sorted(roles.destinations):
            if s != d and (s, d) not in F.flows:
                out.append(f"missing flow for pair ({s},{d})")
    # a node forwards one message vector, so its delay from s must be unique
    for s in sorted(roles.sources):
        seen = {}
        for (ss, d), f in sorted(F.flows.items()):
            if ss != s:
                continue
            for idx, z in enumerate(f.hop_sets):
                k = f.delay_at(idx)
                for i in z:
                    if i in seen and seen[i] != k:
                        out.append(f"inconsistent delay k_{{{s},{i}}} across flows from {s}")
                    seen.setdefault(i, k)
    return out


def cumulative_delay(F: FlowSet, s: int, i: int) -> Delay:
    """Encoding delay ``k_{s,i}`` between node ``s`` and node ``i``.

    Zero for ``i == s``.  When ``s`` forwards on some flow and ``i`` lies
    downstream on it (or is that flow's destination) the prefix sum of hop
    delays is returned.  Otherwise INFINITE.
    """
    if s not in F.roles.all_nodes or i not in F.roles.all_nodes:
        raise KeyError(f"unknown node id in k_{{{s},{i}}}")
    if s == i:
        return 0
    is_source = s in F.roles.sources
    for key in sorted(F.flows):
        f = F.flows[key]
        # a source's delays are measured on its own flows only
        if is_source and f.source != s:
            continue
        a = f.hop_index(s)
        if a is None:
            continue
        b = f.hop_index(i)
        if b is None and i == f.destination and not is_source:
            b = len(f)
        if b is not None and b > a:
            end = f.delay_at(b)
            return end - f.delay_at(a) if is_finite(end) else INFINITE
    return INFINITE


def covered_nodes(F: FlowSet, d: int, S: Iterable[int]) -> frozenset:
    """``F_d(S)``: nodes on the flows from ``S`` into ``d``."""
    out = set()
    for s in S:
        if s == d:
            raise ValueError(f"source {s} equals destination")
        out |= F.flow(s, d).nodes
    return frozenset(out)


def uncovered_inputs(F: FlowSet, d: int, S: Iterable[int]) -> frozenset:
    """Complement of :func:`covered_nodes` within the input nodes."""
    return F.roles.inputs - covered_nodes(F, d, S)


def encoded_vector(F: FlowSet, i: int, b: int) -> frozenset:
    """``w_i(b)``: the (source, block) pairs node ``i`` encodes in block ``b``."""
    out = set()
    for s in sorted(F.roles.sources):
        k = cumulative_delay(F, s, i)
        if is_finite(k):
            out.add((s, b - k))
    return frozenset(out)


# ---------------------------------------------------------------- text format

_FLOW_RE = re.compile(r"^flow\s*(\d+)\s*->\s*(\d+)\s*:(.*)$")
_HOP_RE = re.compile(r"^\{([\d,\s]*)\}\s*k\s*=\s*(\d+|inf)$")
_ROLE_RE = re.compile(r"^(sources|relays|destinations|inputs)\s*(\{[\d,\s]*\})$")


def parse_set(text: str) -> frozenset:
    text = text.strip()
    if not (text.startswith("{") and text.endswith("}")):
        raise FlowSpecError(f"expected a set literal, got {text!r}")
    body = text[1:-1].strip()
    if not body:
        return frozenset()
    try:
        return frozenset(int(t) for t in body.split(","))
    except ValueError:
        raise FlowSpecError(f"bad set literal {text!r}") from None


def parse_flow_line(line: str) -> Flow:
    m = _FLOW_RE.match(line.strip())
    if not m:
        raise FlowSpecError(f"not a flow line: {line!r}")
    s, d = int(m.group(1)), int(m.group(2))
    hops = []
    for chunk in m.group(3).split(";"):
        hm = _HOP_RE.match(chunk.strip())
        if not hm:
            raise FlowSpecError(f"bad hop {chunk.strip()!r} in {line!r}")
        body = hm.group(1).strip()
        z = frozenset(int(t) for t in body.split(",")) if body else frozenset()
        k = INFINITE if hm.group(2) == "inf" else int(hm.group(2))
        hops.append((z, k))
    return Flow(s, d, tuple(hops))


def parse_flow_spec(text: str) -> FlowSet:
    """Parse flow-spec text, one ``flow s -> d : {..} k=.. ; ...`` per line.

    Optional ``sources {..}``, ``relays {..}``, ``destinations {..}`` and
    ``inputs {..}`` lines override the roles inferred from the flows.
    ``#`` starts a comment.
    """
    flows = {}
    overrides = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        rm = _ROLE_RE.match(line)
        if rm:
            overrides[rm.group(1)] = parse_set(rm.group(2))
            continue
        f = parse_flow_line(line)
        key = (f.source, f.destination)
        if key in flows:
            raise FlowSpecError(f"duplicate flow for pair {key}")
        flows[key] = f
    roles = ChannelRoles.infer(flows.values(), overrides.get("inputs"))
    if overrides:
        fields = {
            "inputs": roles.inputs,
            "sources": overrides.get("sources", roles.sources),
            "destinations": overrides.get("destinations", roles.destinations),
            "relays": overrides.get("relays", roles.relays),
        }
        fields["all_nodes"] = roles.all_nodes | fields["inputs"] | fields["destinations"]
        roles = ChannelRoles(**fields)
    return FlowSet(flows, roles)


def format_flow_spec(F: FlowSet) -> str:
    return str(F) + "\n"
