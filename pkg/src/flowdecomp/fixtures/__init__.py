"""Golden worked examples: flow sets, partitions and what the engine must derive.

Each fixture is a JSON file under ``data/``.  The flow set is stored in the
flow-spec text format and partitions in the brace-list format, so a fixture
can be fed to the command line as-is.  ``where`` names the worked example a
fixture encodes.

Constraint expectations carry a raw term list (compared as a multiset of
canonical term renderings, since a sum does not depend on term order) and
optionally a collapsed form, checked by :func:`verify_identity` on random
channels over the fixture's inputs.  A ``printed`` entry records a literal
variant that differs from the raw list; it is kept for reference only.
"""
from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from typing import Optional

import numpy as np
from scipy.optimize import linprog

from ..channel import DEFAULT_EPS, evaluator, random_battery, verify_identity
from ..decomposition import (
    FlowDecomposition,
    LayeredPartition,
    active_sets,
    bifurcates,
    equivalent,
    is_complete,
    parse_partition,
)
from ..flows import (
    FlowSet,
    cumulative_delay,
    encoded_vector,
    format_set,
    parse_flow_spec,
    parse_set,
    validate_flow_set,
)
from ..region import df_region, outer_region, parse_terms, side_information_terms, subsets

CATALOG = (
    "sfd-i", "sfd-ii", "sfd-iii", "sfd-iv", "sfd-v",
    "diamond-s1", "diamond-s2", "diamond-s3", "diamond-s4",
    "coopmac-s1", "coopmac-s2", "coopmac-s3",
    "marc2-s1", "marc2-s2", "marc2-s3",
    "marc3-s1", "marc3-s2", "marc3-s3", "marc3-s4",
    "marc3-scenario1", "marc3-scenario2",
    "figure9-i", "figure9-ii",
)

IDENTITY_TRIALS = 20
IDENTITY_TOL = 1e-9


class UnknownFixture(KeyError):
    pass


@dataclass(frozen=True)
class Fixture:
    name: str
    where: str
    flow_text: str
    flow_set: FlowSet
    destination: int
    partition: Optional[LayeredPartition]
    expected: dict = field(hash=False, compare=False)

    @property
    def decomposition(self) -> Optional[FlowDecomposition]:
        if self.partition is None:
            return None
        return FlowDecomposition(self.flow_set, self.partition)


@dataclass
class FieldCheck:
    field: str
    ok: bool
    detail: str = ""


@dataclass
class FixtureReport:
    name: str
    checks: list

    @property
    def passed(self) -> bool:
        return all(c.ok for c in self.checks)

    @property
    def failures(self) -> list:
        return [c for c in self.checks if not c.ok]

    def render(self) -> str:
        lines = [f"{self.name}: {'PASS' if self.passed else 'FAIL'}"]
        for c in self.checks:
            tail = f"  {c.detail}" if c.detail else ""
            lines.append(f"  {'ok  ' if c.ok else 'FAIL'} {c.field}{tail}")
        return "\n".join(lines)


@lru_cache(maxsize=None)
def load_fixture(name: str) -> Fixture:
    if name not in CATALOG:
        raise UnknownFixture(f"unknown fixture {name!r}; known: {', '.join(CATALOG)}")
    raw = json.loads(resources.files(__package__).joinpath("data", f"{name}.json").read_text())
    F = parse_flow_spec(raw["flows"])
    d = int(raw["destination"])
    part = parse_partition(raw["partition"], d) if raw.get("partition") else None
    return Fixture(raw["name"], raw["where"], raw["flows"], F, d, part, raw["expected"])


def load_all() -> list:
    return [load_fixture(n) for n in CATALOG]


@lru_cache(maxsize=None)
def fixture_battery(inputs: tuple, dest: int, trials: int = IDENTITY_TRIALS, seed: int = 0) -> tuple:
    """Seeded channels over every input of a fixture (binary inputs, |Y| = 4)."""
    return tuple(random_battery(inputs, (dest,), trials, seed))


def _battery(fx: Fixture):
    return fixture_battery(tuple(sorted(fx.flow_set.roles.inputs)), fx.destination)


def _multiset(terms) -> Counter:
    return Counter(str(t) for t in terms)


def _cmp(name, got, want) -> FieldCheck:
    return FieldCheck(name, got == want, "" if got == want else f"got {got!r}, want {want!r}")


def _check_constraints(label, region, entries, battery) -> list:
    out = []
    for e in entries:
        S = parse_set(e["S"])
        got = region[S].terms
        want = parse_terms(e["raw"])
        tag = f"{label} R{format_set(S)}"
        ok = _multiset(got) == _multiset(want)
        out.append(FieldCheck(f"{tag} raw", ok, "" if ok else
                              f"got {' + '.join(map(str, got))}, want {e['raw']}"))
        if "collapsed" in e:
            v = verify_identity(got, parse_terms(e["collapsed"]), tol=IDENTITY_TOL, battery=battery)
            out.append(FieldCheck(f"{tag} collapsed", v.holds,
                                  f"worst gap {v.worst_margin:.3g} over {v.trials} channels"))
    return out


def _rates_for_pattern(decomp, battery, violated, eps=DEFAULT_EPS):
    """A rate vector inside the outer bound violating exactly ``violated``.

    Solves a small LP per channel, maximising the slack on every constraint,
    and returns the first channel where the slack is comfortably above
    ``eps``.
    """
    sources = decomp.sources
    n = len(sources)
    df = df_region(decomp)
    outer = outer_region(decomp.flow_set, decomp.destination)
    for ch, dist in battery:
        ev = evaluator(ch, dist)
        A, b = [], []
        for S in subsets(sources):
            row = [1.0 if s in S else 0.0 for s in sources]
            bound = ev.bound(df[S])
            if frozenset(S) in violated:
                A.append([-x for x in row] + [1.0])
                b.append(-bound)
            else:
                A.append(row + [1.0])
                b.append(bound)
            A.append(row + [1.0])
            b.append(ev.bound(outer[S]))
        res = linprog(c=[0.0] * n + [-1.0], A_ub=np.array(A), b_ub=np.array(b),
                      bounds=[(0, None)] * n + [(None, 0.05)], method="highs")
        if res.status == 0 and res.x[-1] > 1e3 * eps:
            return ch, dist, dict(zip(sources, res.x[:n]))
    return None


def run_fixture(fx: Fixture) -> FixtureReport:
    from ..shift import largest_violating_subset, shift

    exp = fx.expected
    F, d = fx.flow_set, fx.destination
    checks = [_cmp("flow set valid", validate_flow_set(F), [])]
    battery = _battery(fx)

    for key, k in exp.get("delays", {}).items():
        s, i = (int(t) for t in key.split(","))
        checks.append(_cmp(f"k_{{{s},{i}}}", str(cumulative_delay(F, s, i)), k))
    for node, pairs in exp.get("encoded", {}).items():
        got = sorted(encoded_vector(F, int(node), 0))
        checks.append(_cmp(f"w_{node}(b)", got, sorted(tuple(p) for p in pairs)))
    if "outer" in exp:
        checks += _check_constraints("outer", outer_region(F, d), exp["outer"], battery)

    D = fx.decomposition
    if D is not None:
        for s, v in exp.get("virtual_sources", {}).items():
            checks.append(_cmp(f"v({s})", format_set(D.virtual_sources[int(s)].v_set), v))
        for s, g in exp.get("virtual_flows", {}).items():
            checks.append(_cmp(f"g({s},{d})", str(D.virtual_flows[int(s)]), g))
        for s, o in exp.get("decode_offsets", {}).items():
            checks.append(_cmp(f"offset m{s}", D.virtual_sources[int(s)].decode_offset, o))
        for a in exp.get("active_sets", []):
            fresh, known = active_sets(D, parse_set(a["S"]), a["layer"])
            checks.append(_cmp(f"A_{a['layer']}({a['S']})", format_set(fresh), a["fresh"]))
            if "known" in a:
                checks.append(_cmp(f"A~_{a['layer']}({a['S']})", format_set(known), a["known"]))
        if "constraints" in exp:
            checks += _check_constraints("df", df_region(D), exp["constraints"], battery)
        for e in exp.get("side_information", []):
            got = side_information_terms(D, parse_set(e["S"]))
            checks.append(_cmp(f"side info R{e['S']}", _multiset(got), _multiset(parse_terms(e["raw"]))))
        if "complete" in exp:
            checks.append(_cmp("complete", is_complete(D), exp["complete"]))
        for S in exp.get("complete_on", []):
            checks.append(_cmp(f"complete on {S}", is_complete(D, parse_set(S)), True))
        for S in exp.get("not_complete_on", []):
            checks.append(_cmp(f"complete on {S}", is_complete(D, parse_set(S)), False))
        for S, want in exp.get("bifurcates", {}).items():
            checks.append(_cmp(f"E({S})", bifurcates(D, parse_set(S)), want))
        for sh in exp.get("shifts", []):
            got = str(shift(D, parse_set(sh["by"])).partition)
            checks.append(_cmp(f"shift by {sh['by']}", got, sh["result"]))
        for other in exp.get("equivalent", []):
            checks.append(_cmp(f"equivalent to {other}", equivalent(D, load_fixture(other).decomposition), True))
        if "violation" in exp:
            want_bad = {parse_set(S) for S in exp["violation"]["violated"]}
            found = _rates_for_pattern(D, battery, want_bad)
            if found is None:
                checks.append(FieldCheck("violating U", False, "no channel admits the violation pattern"))
            else:
                ch, dist, rates = found
                U = largest_violating_subset(D, ch, dist, rates)
                checks.append(_cmp("violating U", format_set(U or ()), exp["violation"]["U"]))

    for c in exp.get("chains", []):
        v = verify_identity(parse_terms(c["lhs"]), parse_terms(c["rhs"]), tol=IDENTITY_TOL,
                            mode=c["mode"], battery=battery)
        checks.append(FieldCheck(f"chain [{c['mode']}] {c['label']}", v.holds,
                                 f"worst margin {v.worst_margin:.3g} over {v.trials} channels"))
    return FixtureReport(fx.name, checks)


__all__ = [
    "CATALOG", "Fixture", "FieldCheck", "FixtureReport", "UnknownFixture",
    "fixture_battery", "load_all", "load_fixture", "run_fixture",
]
