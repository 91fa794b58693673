"""The SHIFT operator and the covering loop built on it.

``cover`` starts from a complete decomposition and repeatedly shifts by
the largest violating source subset until the rate vector is inside the
decode-forward region.  Completeness, the induction step on the satisfied
set and the no-strict-superset rule for successive ``U`` are checked
numerically at every step; a failed check raises :class:`LemmaViolation`
carrying the trace so far.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Mapping, Optional

from .channel import DEFAULT_EPS, DMChannel, InputDist, eval_region
from .decomposition import (
    FlowDecomposition,
    LayeredPartition,
    NotCompleteError,
    bifurcates,
    construct_complete,
    is_complete,
)
from .flows import FlowSet, covered_nodes, format_set, is_finite, nodeset
from .region import df_region, outer_region, subsets


class CoverError(RuntimeError):
    """The covering loop failed; ``trace`` holds every step taken."""

    def __init__(self, message: str, trace: "ShiftTrace" = None):
        super().__init__(message)
        self.trace = trace


class LemmaViolation(CoverError):
    pass


class OutsideRegionError(ValueError):
    pass


def shift(decomp: FlowDecomposition, S: Iterable[int]) -> FlowDecomposition:
    """Move the virtual nodes of ``S`` one layer deeper unless ``S`` is split off already.

    Layers stay absolute: an emptied layer 0 is kept.
    """
    S = tuple(sorted(nodeset(S)))
    if not set(S) <= set(decomp.sources):
        raise ValueError(f"{format_set(S)} is not a subset of the sources {format_set(decomp.sources)}")
    if not is_complete(decomp):
        raise NotCompleteError(f"shift needs a complete decomposition: {decomp.partition}")
    if not S or bifurcates(decomp, S):
        return decomp
    moving = decomp.virtual_nodes(S)
    layer_of = {i: l + (i in moving) for i, l in decomp.partition.layer_map.items()}
    return decomp.with_partition(LayeredPartition.from_layer_map(decomp.destination, layer_of))


class _Judge:
    """Which source subsets satisfy their decode-forward constraint."""

    def __init__(self, decomp, ch, dist, rates, eps):
        self.ok = eval_region(df_region(decomp), ch, dist, rates, eps).margins
        self.eps = eps

    def satisfied(self, S) -> bool:
        return self.ok[tuple(sorted(S))] >= self.eps

    def closed(self, S) -> bool:
        """Every nonempty subset of ``S`` is satisfied."""
        return all(self.satisfied(T) for T in subsets(S))


def _violating(judge: _Judge, sources) -> list:
    return [S for S in subsets(sources) if not judge.satisfied(S)]


def largest_violating_subset(decomp: FlowDecomposition, ch: DMChannel, dist: InputDist,
                             rates: Mapping, eps: float = DEFAULT_EPS) -> Optional[frozenset]:
    """Largest violating ``S``; ties go to the lexicographically smallest. ``None`` if none."""
    bad = _violating(_Judge(decomp, ch, dist, rates, eps), decomp.sources)
    if not bad:
        return None
    size = max(map(len, bad))
    return frozenset(min(S for S in bad if len(S) == size))


def satisfied_closure(decomp: FlowDecomposition, ch: DMChannel, dist: InputDist,
                      rates: Mapping, eps: float = DEFAULT_EPS) -> frozenset:
    """Largest ``V`` all of whose nonempty subsets are satisfied (ties lexicographic)."""
    return _closure(_Judge(decomp, ch, dist, rates, eps), decomp.sources)


def _closure(judge: _Judge, sources) -> frozenset:
    sources = sorted(sources)
    for r in range(len(sources), 0, -1):
        for V in combinations(sources, r):
            if judge.closed(V):
                return frozenset(V)
    return frozenset()


@dataclass
class ShiftStep:
    decomposition: FlowDecomposition
    U: Optional[frozenset]
    V: frozenset


@dataclass
class ShiftTrace:
    steps: list = field(default_factory=list)
    terminal: Optional[FlowDecomposition] = None
    # steps k where U_k != U_{k-1} yet |V_{k+1}| <= |V_k|; recorded, not fatal
    progress_stalls: list = field(default_factory=list)

    def __len__(self):
        return len(self.steps)

    def render(self) -> str:
        lines = []
        for k, st in enumerate(self.steps):
            u = format_set(st.U) if st.U is not None else "none"
            lines.append(f"step {k} U={u} V={format_set(st.V)} {st.decomposition.partition.render()}")
        if self.terminal is not None:
            lines.append(f"terminal {self.terminal.partition.render()}")
            lines.append(df_region(self.terminal).render())
        return "\n".join(lines)


def default_max_steps(F: FlowSet, d: int) -> int:
    sources = F.sources_for(d)
    delays = sum(k for s in sources for k in F.flow(s, d).delays if is_finite(k))
    return len(sources) * (1 + delays) * len(covered_nodes(F, d, sources))


def check_outer(F: FlowSet, d: int, ch: DMChannel, dist: InputDist, rates: Mapping, eps: float):
    m = eval_region(outer_region(F, d), ch, dist, rates, eps)
    if not m.member:
        worst = ", ".join(format_set(S) for S in m.violated)
        raise OutsideRegionError(f"rate vector is not inside the outer bound (violated: {worst})")
    return m


def cover(F: FlowSet, d: int, rates: Mapping, ch: DMChannel, dist: InputDist,
          eps: float = DEFAULT_EPS, max_steps: int = None, start: FlowDecomposition = None) -> ShiftTrace:
    """Shift from a complete decomposition until ``rates`` lies in its region."""
    check_outer(F, d, ch, dist, rates, eps)
    if max_steps is None:
        max_steps = default_max_steps(F, d)
    decomp = start if start is not None else construct_complete(F, d)
    sources = decomp.sources
    trace = ShiftTrace()
    prev = None  # (judge, U, V, U of the step before) of the previous step
    while True:
        if not is_complete(decomp):
            raise LemmaViolation(f"completeness lost at step {len(trace)}", trace)
        judge = _Judge(decomp, ch, dist, rates, eps)
        bad = _violating(judge, sources)
        U = None
        if bad:
            size = max(map(len, bad))
            U = frozenset(min(S for S in bad if len(S) == size))
        V = _closure(judge, sources)
        if prev is not None:
            _check_step(prev, judge, U, V, sources, trace)
        trace.steps.append(ShiftStep(decomp, U, V))
        if U is None:
            trace.terminal = decomp
            return trace
        if len(trace) > max_steps:
            raise CoverError(f"no covering decomposition within {max_steps} shifts", trace)
        nxt = shift(decomp, U)
        if nxt.partition == decomp.partition:
            # shift by U is the identity, so the loop would repeat this step forever
            raise CoverError(
                f"stalled at step {len(trace) - 1}: {format_set(U)} is violated but bifurcated, "
                f"so shifting by it changes nothing", trace)
        prev = (judge, U, V, prev[1] if prev else None)
        decomp = nxt


def _check_step(prev, judge: _Judge, U, V, sources, trace):
    old, U0, V0, U_before = prev
    k = len(trace)
    # every S whose overlap with U0 was closed before must be satisfied now
    for S in subsets(sources):
        inter = set(S) & U0
        if (not inter or old.closed(inter)) and not judge.satisfied(S):
            raise LemmaViolation(
                f"step {k}: {format_set(S)} lies in (S\\U) u V for U={format_set(U0)} but is violated", trace)
    if U is not None and U0 < U:
        raise LemmaViolation(f"step {k}: U={format_set(U0)} is a strict subset of U'={format_set(U)}", trace)
    if U_before is not None and U0 != U_before and not len(V0) < len(V):
        trace.progress_stalls.append(k - 1)
