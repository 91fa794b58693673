"""Symbolic rate-region constraints.

Each constraint bounds a partial sum rate ``R_S`` by a sum of conditional
mutual-information terms ``I(X_A; Y_d | X_B)``.  Nothing here evaluates a
term; see :mod:`flowdecomp.channel` for that.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Sequence

from .decomposition import FlowDecomposition, active_sets
from .flows import FlowSet, FlowSpecError, covered_nodes, format_set, nodeset


@dataclass(frozen=True)
class MITerm:
    """``I(X_fresh ; Y_dest | X_given)``."""

    fresh: frozenset
    given: frozenset
    dest: int

    def __post_init__(self):
        object.__setattr__(self, "fresh", nodeset(self.fresh))
        object.__setattr__(self, "given", nodeset(self.given))
        if self.fresh & self.given:
            raise ValueError(f"fresh and given overlap in {self}")

    @property
    def is_zero(self) -> bool:
        return not self.fresh

    def __str__(self):
        cond = f"|X{format_set(self.given)}" if self.given else ""
        return f"I(X{format_set(self.fresh)};Y{self.dest}{cond})"


def subsets(sources: Iterable[int]):
    """Nonempty subsets in size order, each as a sorted tuple."""
    sources = sorted(sources)
    for r in range(1, len(sources) + 1):
        yield from combinations(sources, r)


@dataclass(frozen=True)
class Constraint:
    subset: frozenset
    terms: tuple  # MITerm, summed
    strict: bool = True

    def __post_init__(self):
        object.__setattr__(self, "subset", nodeset(self.subset))
        object.__setattr__(self, "terms", tuple(self.terms))
        if not self.subset:
            raise ValueError("constraint on an empty source set")
        if len({t.dest for t in self.terms}) > 1:
            raise ValueError("terms of one constraint must share a destination")

    def __str__(self):
        rhs = " + ".join(str(t) for t in self.terms) if self.terms else "0"
        return f"R{format_set(self.subset)} < {rhs}"


@dataclass(frozen=True)
class Region:
    destination: int
    sources: tuple
    constraints: tuple

    def __post_init__(self):
        if len(self.constraints) != 2 ** len(self.sources) - 1:
            raise ValueError("a region needs one constraint per nonempty source subset")

    def __getitem__(self, S) -> Constraint:
        S = nodeset(S)
        for c in self.constraints:
            if c.subset == S:
                return c
        raise KeyError(f"no constraint for {format_set(S)}")

    def __iter__(self):
        return iter(self.constraints)

    def render(self) -> str:
        return "\n".join(str(c) for c in self.constraints)


@dataclass(frozen=True)
class RegionIntersection:
    """Several regions over the same sources; membership means all of them."""

    regions: tuple

    @property
    def sources(self) -> tuple:
        return self.regions[0].sources

    @property
    def constraints(self) -> tuple:
        return tuple(c for r in self.regions for c in r.constraints)

    def render(self) -> str:
        return "\n".join(str(c) for c in self.constraints)


def outer_region(F: FlowSet, d: int) -> Region:
    """Point-to-point super-channel bound for every nonempty ``S``."""
    sources = F.sources_for(d)
    out = []
    for S in subsets(sources):
        cover = covered_nodes(F, d, S)
        out.append(Constraint(S, (MITerm(cover, F.roles.inputs - cover, d),)))
    return Region(d, sources, tuple(out))


def df_terms(decomp: FlowDecomposition, S: Iterable[int]) -> tuple:
    """Per-layer terms of the decode-forward bound on ``R_S``; zero terms dropped."""
    S = tuple(S)
    terms = []
    for l in range(len(decomp.partition)):
        fresh, known = active_sets(decomp, S, l)
        if fresh:
            terms.append(MITerm(fresh, known, decomp.destination))
    return tuple(terms)


def df_region(decomp: FlowDecomposition) -> Region:
    sources = decomp.sources
    cons = tuple(Constraint(S, df_terms(decomp, S)) for S in subsets(sources))
    return Region(decomp.destination, sources, cons)


def intersect_regions(regions: Sequence) -> RegionIntersection:
    regions = tuple(regions)
    if not regions:
        raise ValueError("nothing to intersect")
    if len({tuple(sorted(r.sources)) for r in regions}) != 1:
        raise ValueError("regions must be over the same sources")
    return RegionIntersection(regions)


def side_information_terms(decomp: FlowDecomposition, S: Iterable[int]) -> tuple:
    """Optional looser per-layer terms conditioning on already-decoded senders.

    A node of layer ``l`` that is left out of every virtual flow but sends
    only messages decoded before the current block is known to ``d``; it is
    added to the conditioning set.  This is an annotation only; it is not
    part of :func:`df_region`.
    """
    plan_nodes = decomp.virtual_nodes(decomp.sources)
    outside = decomp.partition.nodes - plan_nodes
    terms = []
    for t in df_terms(decomp, S):
        terms.append(MITerm(t.fresh, t.given | (outside - t.fresh), t.dest))
    return tuple(terms)


def render_decoding_plan(decomp: FlowDecomposition) -> str:
    """One line per layer: fresh codewords and known context at block ``b - l``."""
    lines = []
    offsets = {s: v.decode_offset for s, v in decomp.virtual_sources.items()}
    head = ", ".join(f"<{s}, m{s}(b-{o})>" if o else f"<{s}, m{s}(b)>" for s, o in offsets.items())
    lines.append(f"node {decomp.destination} decodes {{{head}}}")
    for l in range(len(decomp.partition)):
        fresh, known = active_sets(decomp, decomp.sources, l)
        block = f"b-{l}" if l else "b"
        lines.append(f"layer {l} block {block}: fresh {format_set(fresh)} known {format_set(known)}")
    return "\n".join(lines)


# ---------------------------------------------------------------- text format

_TERM_RE = re.compile(r"^I\(\s*X\s*(\{[\d,\s]*\})\s*;\s*Y\s*(\d+)\s*(?:\|\s*X\s*(\{[\d,\s]*\}))?\s*\)$")
_CONS_RE = re.compile(r"^R(\{[\d,\s]*\})\s*<\s*(.*)$")


def _parse_set(text):
    from .flows import parse_set

    return parse_set(text)


def parse_term(text: str) -> MITerm:
    m = _TERM_RE.match(text.strip())
    if not m:
        raise FlowSpecError(f"bad mutual-information term {text!r}")
    given = _parse_set(m.group(3)) if m.group(3) else frozenset()
    return MITerm(_parse_set(m.group(1)), given, int(m.group(2)))


def parse_terms(text: str) -> tuple:
    text = text.strip()
    if text == "0":
        return ()
    return tuple(parse_term(t) for t in re.split(r"\s*\+\s*", text))


def parse_constraint(text: str) -> Constraint:
    m = _CONS_RE.match(text.strip())
    if not m:
        raise FlowSpecError(f"bad constraint {text!r}")
    return Constraint(_parse_set(m.group(1)), parse_terms(m.group(2)))
