"""Exact mutual information on finite channels with independent inputs.

Tensor layout: ``cond_pmf`` has one axis per input node in ascending id
order followed by one axis per output node in ascending id order, i.e.
``cond_pmf[x_1, ..., x_n, y_1, ..., y_m] = p(y | x)``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

import numpy as np

from .flows import format_set, nodeset
from .region import Constraint, MITerm, Region, RegionIntersection

MAX_STATES = 2 ** 20
DEFAULT_EPS = 1e-6


class ChannelError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class DMChannel:
    input_alphabets: Mapping  # node -> size
    output_alphabets: Mapping  # node -> size
    cond_pmf: np.ndarray

    def __post_init__(self):
        ins = {int(k): int(v) for k, v in sorted(self.input_alphabets.items())}
        outs = {int(k): int(v) for k, v in sorted(self.output_alphabets.items())}
        object.__setattr__(self, "input_alphabets", ins)
        object.__setattr__(self, "output_alphabets", outs)
        shape = tuple(ins.values()) + tuple(outs.values())
        if math.prod(shape) > MAX_STATES:
            raise ChannelError(f"{math.prod(shape)} joint states exceed the cap of {MAX_STATES}")
        p = np.asarray(self.cond_pmf, dtype=float)
        if p.size == math.prod(shape) and p.shape != shape:
            p = p.reshape(shape)
        if p.shape != shape:
            raise ChannelError(f"cond_pmf has shape {p.shape}, expected {shape}")
        if (p < 0).any():
            raise ChannelError("negative transition probability")
        rows = p.reshape(math.prod(ins.values()), -1).sum(axis=1)
        if not np.allclose(rows, 1.0, rtol=0, atol=1e-12):
            raise ChannelError("transition rows do not sum to 1")
        p.setflags(write=False)
        object.__setattr__(self, "cond_pmf", p)

    @property
    def inputs(self) -> tuple:
        return tuple(self.input_alphabets)

    @property
    def outputs(self) -> tuple:
        return tuple(self.output_alphabets)


@dataclass(frozen=True, eq=False)
class InputDist:
    pmfs: Mapping  # node -> 1-d array

    def __post_init__(self):
        pmfs = {}
        for k, v in sorted(self.pmfs.items()):
            a = np.asarray(v, dtype=float)
            if a.ndim != 1 or (a < 0).any() or abs(a.sum() - 1.0) > 1e-12:
                raise ChannelError(f"input pmf of node {k} is not a distribution")
            a.setflags(write=False)
            pmfs[int(k)] = a
        object.__setattr__(self, "pmfs", pmfs)


@dataclass(frozen=True)
class JointPMF:
    """``p(x_inputs, y_outputs)`` with axes labelled by node id."""

    p: np.ndarray
    inputs: tuple
    outputs: tuple

    def axis_of_input(self, i: int) -> int:
        return self.inputs.index(i)

    def axis_of_output(self, d: int) -> int:
        return len(self.inputs) + self.outputs.index(d)

    def marginal(self, inputs: Iterable[int], output: int = None) -> np.ndarray:
        """Marginal over the given inputs (ascending) and optionally one output."""
        keep = [self.axis_of_input(i) for i in sorted(inputs)]
        if output is not None:
            keep.append(self.axis_of_output(output))
        drop = tuple(a for a in range(self.p.ndim) if a not in keep)
        return self.p.sum(axis=drop)


def joint_distribution(ch: DMChannel, dist: InputDist) -> JointPMF:
    if set(dist.pmfs) != set(ch.inputs):
        raise ChannelError(f"input pmfs for {format_set(dist.pmfs)}, channel inputs {format_set(ch.inputs)}")
    px = np.ones(())
    for i in ch.inputs:
        pmf = dist.pmfs[i]
        if pmf.shape[0] != ch.input_alphabets[i]:
            raise ChannelError(f"alphabet mismatch on node {i}")
        px = np.multiply.outer(px, pmf)
    p = ch.cond_pmf * px.reshape(px.shape + (1,) * len(ch.outputs))
    return JointPMF(p, ch.inputs, ch.outputs)


def _cond_entropy(pcy: np.ndarray) -> float:
    """``H(Y|C)`` in bits from a joint array whose last axis is Y."""
    pc = pcy.sum(axis=-1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(pcy > 0, pcy / np.where(pc > 0, pc, 1.0), 1.0)
        return float(-(pcy * np.log2(ratio)).sum())


def mutual_info(term: MITerm, joint: JointPMF) -> float:
    """``I(X_A; Y_d | X_B) = H(Y_d|X_B) - H(Y_d|X_A,X_B)`` in bits."""
    if term.is_zero:
        return 0.0
    given = _cond_entropy(joint.marginal(term.given, term.dest))
    both = _cond_entropy(joint.marginal(term.fresh | term.given, term.dest))
    return max(given - both, 0.0)


class MIEvaluator:
    """Caches term values for one (channel, inputs) pair."""

    def __init__(self, ch: DMChannel, dist: InputDist):
        self.channel = ch
        self.dist = dist
        self.joint = joint_distribution(ch, dist)
        self._cache = {}

    def __call__(self, term: MITerm) -> float:
        v = self._cache.get(term)
        if v is None:
            v = self._cache[term] = mutual_info(term, self.joint)
        return v

    def total(self, terms: Iterable[MITerm]) -> float:
        return math.fsum(self(t) for t in terms)

    def bound(self, c: Constraint) -> float:
        return self.total(c.terms)


@lru_cache(maxsize=256)
def evaluator(ch: DMChannel, dist: InputDist) -> MIEvaluator:
    return MIEvaluator(ch, dist)


def rate_sum(rates: Mapping, S: Iterable[int]) -> float:
    return math.fsum(rates.get(s, 0.0) for s in S)


@dataclass
class Membership:
    member: bool
    margins: dict  # subset (sorted tuple) -> bound - R_S
    violated: list = field(default_factory=list)

    @property
    def binding(self) -> list:
        """Violated subsets, or the tightest ones when the point is inside."""
        if self.violated:
            return self.violated
        lo = min(self.margins.values())
        return [S for S, m in self.margins.items() if m == lo]


def eval_region(region, ch: DMChannel, dist: InputDist, rates: Mapping, eps: float = DEFAULT_EPS) -> Membership:
    """Membership with margin: ``R_S <= bound_S - eps`` for every constraint."""
    if any(r < 0 for r in rates.values()):
        raise ValueError("rates must be nonnegative")
    ev = evaluator(ch, dist)
    margins, violated = {}, []
    for c in region.constraints:
        S = tuple(sorted(c.subset))
        m = ev.bound(c) - rate_sum(rates, S)
        margins[S] = min(m, margins.get(S, math.inf))
        if m < eps and S not in violated:
            violated.append(S)
    return Membership(not violated, margins, violated)


def sample_boundary(region, ch: DMChannel, dist: InputDist, alpha: float, count: int, seed: int) -> list:
    """``count`` rate vectors at ``alpha`` times the boundary along random directions.

    Directions are drawn from the positive orthant.  Constraints are linear
    in the scale ``t``, so the largest feasible ``t`` is the exact minimum of
    ``bound_S / dir_S`` over all constraints.
    """
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    ev = evaluator(ch, dist)
    sources = tuple(sorted(region.sources))
    bounds = [(tuple(sorted(c.subset)), ev.bound(c)) for c in region.constraints]
    if all(b <= 0 for _, b in bounds):
        raise ChannelError("degenerate region: every bound is zero")
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        w = rng.uniform(0.0, 1.0, len(sources))
        w /= w.sum()
        direction = dict(zip(sources, w))
        t = min(b / rate_sum(direction, S) for S, b in bounds)
        out.append({s: alpha * t * direction[s] for s in sources})
    return out


def random_channel(input_sizes: Mapping, output_sizes: Mapping, rng: np.random.Generator) -> DMChannel:
    """Rows are i.i.d. uniform positives, normalised."""
    shape = tuple(v for _, v in sorted(input_sizes.items())) + tuple(v for _, v in sorted(output_sizes.items()))
    n_in = math.prod(v for _, v in sorted(input_sizes.items()))
    raw = rng.uniform(0.0, 1.0, (n_in, math.prod(shape) // n_in)) + 1e-12
    raw /= raw.sum(axis=1, keepdims=True)
    return DMChannel(dict(input_sizes), dict(output_sizes), raw.reshape(shape))


def random_inputs(input_sizes: Mapping, rng: np.random.Generator) -> InputDist:
    pmfs = {}
    for i, n in sorted(input_sizes.items()):
        w = rng.uniform(0.0, 1.0, n) + 1e-12
        pmfs[i] = w / w.sum()
    return InputDist(pmfs)


def terms_nodes(terms: Iterable[MITerm]) -> tuple:
    ins, outs = set(), set()
    for t in terms:
        ins |= t.fresh | t.given
        outs.add(t.dest)
    return tuple(sorted(ins)), tuple(sorted(outs))


def random_battery(inputs: Sequence[int], outputs: Sequence[int], trials: int, seed: int,
                   input_size: int = 2, output_size: int = 4) -> list:
    """``trials`` seeded (channel, input distribution) pairs over the given nodes."""
    rng = np.random.default_rng(seed)
    ins = {i: input_size for i in inputs}
    outs = {d: output_size for d in outputs}
    return [(random_channel(ins, outs, rng), random_inputs(ins, rng)) for _ in range(trials)]


@dataclass
class IdentityVerdict:
    holds: bool
    mode: str
    worst_margin: float  # equality: max |lhs-rhs|; geq: min(lhs-rhs)
    trials: int


def verify_identity(lhs: Sequence[MITerm], rhs: Sequence[MITerm], trials: int = 20, tol: float = 1e-9,
                    mode: str = "equality", seed: int = 0, battery: Sequence = None) -> IdentityVerdict:
    """Check ``sum(lhs) == sum(rhs)`` (or ``>=``) on random channels."""
    if mode not in ("equality", "geq"):
        raise ValueError(f"unknown mode {mode!r}")
    if battery is None:
        ins, outs = terms_nodes(list(lhs) + list(rhs))
        battery = random_battery(ins, outs or (0,), trials, seed)
    worst = 0.0 if mode == "equality" else math.inf
    for ch, dist in battery:
        ev = evaluator(ch, dist)
        diff = ev.total(lhs) - ev.total(rhs)
        worst = max(worst, abs(diff)) if mode == "equality" else min(worst, diff)
    holds = worst <= tol if mode == "equality" else worst >= -tol
    return IdentityVerdict(holds, mode, worst, len(battery))


# ---------------------------------------------------------------- file format

def load_channel(path) -> tuple:
    """Read a channel JSON file; returns ``(DMChannel, InputDist)``.

    Rows and input pmfs off by at most 1e-9 are renormalised; worse is an
    error.
    """
    with open(path) as fh:
        data = json.load(fh)
    return channel_from_dict(data)


def channel_from_dict(data: Mapping) -> tuple:
    try:
        ins = {int(k): int(v) for k, v in data["inputs"].items()}
        outs = {int(k): int(v) for k, v in data["outputs"].items()}
        pmfs = {int(k): np.asarray(v, dtype=float) for k, v in data["input_pmfs"].items()}
        flat = np.asarray(data["cond_pmf"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise ChannelError(f"bad channel file: {exc}") from None
    shape = tuple(v for _, v in sorted(ins.items())) + tuple(v for _, v in sorted(outs.items()))
    if math.prod(shape) > MAX_STATES:
        raise ChannelError(f"{math.prod(shape)} joint states exceed the cap of {MAX_STATES}")
    if flat.size != math.prod(shape):
        raise ChannelError(f"cond_pmf has {flat.size} entries, expected {math.prod(shape)}")
    n_in = math.prod(v for _, v in sorted(ins.items()))
    rows = flat.reshape(n_in, -1)
    if (rows < 0).any() or np.abs(rows.sum(axis=1) - 1).max() > 1e-9:
        raise ChannelError("transition rows are not distributions within 1e-9")
    rows = rows / rows.sum(axis=1, keepdims=True)
    for k, v in pmfs.items():
        if (v < 0).any() or abs(v.sum() - 1) > 1e-9:
            raise ChannelError(f"input pmf of node {k} is not a distribution within 1e-9")
        pmfs[k] = v / v.sum()
    return DMChannel(ins, outs, rows.reshape(shape)), InputDist(pmfs)


def channel_to_dict(ch: DMChannel, dist: InputDist) -> dict:
    return {
        "inputs": {str(k): v for k, v in ch.input_alphabets.items()},
        "outputs": {str(k): v for k, v in ch.output_alphabets.items()},
        "input_pmfs": {str(k): v.tolist() for k, v in dist.pmfs.items()},
        "cond_pmf": ch.cond_pmf.ravel().tolist(),
    }


def save_channel(path, ch: DMChannel, dist: InputDist) -> None:
    with open(path, "w") as fh:
        json.dump(channel_to_dict(ch, dist), fh, indent=1)
        fh.write("\n")
