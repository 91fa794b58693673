"""Seeded coverage experiment: sample rate vectors near the outer bound and cover each one."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Optional

from .channel import DEFAULT_EPS, DMChannel, InputDist, eval_region, random_battery, sample_boundary
from .flows import FlowSet
from .region import df_region, outer_region
from .shift import CoverError, cover

EXTERIOR = "exterior"
STALLED = "stalled"


@dataclass
class SampleResult:
    index: int
    rates: dict
    covered: bool
    scheme: str  # terminal partition, or EXTERIOR / STALLED
    steps: int  # shifts applied


@dataclass
class ExperimentReport:
    sources: tuple
    rows: list

    @property
    def coverage(self) -> float:
        if not self.rows:
            return math.nan
        return sum(r.covered for r in self.rows) / len(self.rows)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["sample_index", *(f"R{s}" for s in self.sources), "covered", "covering_scheme", "steps"])
        for r in self.rows:
            w.writerow([r.index, *(f"{r.rates[s]:.12g}" for s in self.sources), int(r.covered), r.scheme, r.steps])
        n = sum(r.covered for r in self.rows)
        buf.write(f"# coverage={self.coverage:.6f} ({n}/{len(self.rows)})\n")
        return buf.getvalue()


def default_channel(F: FlowSet, d: int, seed: int) -> tuple:
    """Binary inputs and a 4-ary output at ``d``, drawn from ``seed``."""
    (pair,) = random_battery(sorted(F.roles.inputs), (d,), 1, seed)
    return pair


def cover_sample(F: FlowSet, d: int, rates: dict, ch: DMChannel, dist: InputDist, index: int,
                 eps: float = DEFAULT_EPS, max_steps: Optional[int] = None) -> SampleResult:
    if not eval_region(outer_region(F, d), ch, dist, rates, eps).member:
        return SampleResult(index, rates, False, EXTERIOR, 0)
    try:
        trace = cover(F, d, rates, ch, dist, eps=eps, max_steps=max_steps)
    except CoverError as exc:
        steps = len(exc.trace) - 1 if exc.trace is not None else 0
        return SampleResult(index, rates, False, STALLED, max(steps, 0))
    inside = eval_region(df_region(trace.terminal), ch, dist, rates, eps).member
    return SampleResult(index, rates, inside, str(trace.terminal.partition), len(trace) - 1)


def verify_experiment(F: FlowSet, d: int, ch: DMChannel, dist: InputDist, samples: int, alpha: float,
                      eps: float = DEFAULT_EPS, seed: int = 0) -> ExperimentReport:
    """Draw ``samples`` points at ``alpha`` times the outer boundary and try to cover each."""
    if samples < 0:
        raise ValueError("samples must be nonnegative")
    region = outer_region(F, d)
    points = sample_boundary(region, ch, dist, alpha, samples, seed)
    rows = [cover_sample(F, d, p, ch, dist, k, eps) for k, p in enumerate(points)]
    return ExperimentReport(tuple(sorted(region.sources)), rows)
