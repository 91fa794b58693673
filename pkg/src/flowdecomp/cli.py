"""Command-line entry point.

Exit codes: 0 success, 1 domain error (bad spec, rate vector outside a
region, failed fixture), 2 usage error.  Results go to stdout, diagnostics
to stderr.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .channel import DEFAULT_EPS, ChannelError, eval_region, load_channel, sample_boundary
from .decomposition import (
    FlowDecomposition,
    MalformedDecomposition,
    NotCompleteError,
    construct_complete,
    is_complete,
    parse_partition,
)
from .experiment import default_channel, verify_experiment
from .flows import FlowSpecError, format_set, parse_flow_spec, parse_set, validate_flow_set
from .region import df_region, outer_region, render_decoding_plan
from .shift import CoverError, OutsideRegionError, cover, shift

U64 = 2 ** 64


class UsageError(Exception):
    pass


def _seed(text: str) -> int:
    v = int(text)
    if not 0 <= v < U64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return v


def _rates(text: str) -> dict:
    """``1=0.2,2=0.35``"""
    out = {}
    try:
        for part in text.split(","):
            k, v = part.split("=")
            out[int(k)] = float(v)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad rate vector {text!r}; expected e.g. 1=0.2,2=0.35") from None
    return out


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="flowdecomp", description=__doc__.splitlines()[0])
    verbs = p.add_subparsers(dest="verb", required=True)

    def spec_cmd(name, help_, dest=True):
        sp = verbs.add_parser(name, help=help_)
        sp.add_argument("flows", help="flow-spec file ('-' for stdin)")
        if dest:
            sp.add_argument("-d", "--dest", type=int, required=True, help="destination node")
        return sp

    spec_cmd("validate", "check a flow-spec file", dest=False)
    sp = spec_cmd("derive", "virtual sources, virtual flows and decode plan of a decomposition")
    sp.add_argument("-L", "--partition", help="layered partition; default: a complete one")
    sp = spec_cmd("region", "decode-forward region of a decomposition, or the outer bound")
    sp.add_argument("-L", "--partition", help="layered partition; omit for the outer bound")
    sp = spec_cmd("shift", "apply SHIFT to a complete decomposition")
    sp.add_argument("-L", "--partition", required=True)
    sp.add_argument("-S", "--set", required=True, help="source subset, e.g. {1,2}")
    for name, help_ in (("cover", "shift until a rate vector is covered"),
                        ("verify", "coverage experiment over boundary samples, as CSV")):
        sp = spec_cmd(name, help_)
        sp.add_argument("--channel", help="channel JSON file; default: random channel from --seed")
        sp.add_argument("--seed", type=_seed, default=0)
        sp.add_argument("--eps", type=float, default=DEFAULT_EPS)
        sp.add_argument("--alpha", type=float, default=0.99)
        if name == "cover":
            sp.add_argument("--rates", type=_rates, help="e.g. 1=0.2,2=0.35; default: one boundary sample")
            sp.add_argument("-L", "--partition", help="starting partition; default: a complete one")
        else:
            sp.add_argument("--samples", type=int, default=200)
    sp = verbs.add_parser("fixtures", help="list or run the worked-example fixtures")
    sp.add_argument("--run", metavar="NAME|all")
    return p


def _read_flows(path: str):
    text = sys.stdin.read() if path == "-" else Path(path).read_text()
    return parse_flow_spec(text)


def _decomp(F, d, text):
    if text is None:
        return construct_complete(F, d)
    return FlowDecomposition(F, parse_partition(text, d))


def _channel(args, F):
    if args.channel:
        return load_channel(args.channel)
    return default_channel(F, args.dest, args.seed)


def _cmd_validate(args, out):
    F = _read_flows(args.flows)
    problems = validate_flow_set(F)
    if problems:
        raise FlowSpecError("; ".join(problems))
    print(f"ok: {len(F)} flows, sources {format_set(F.roles.sources)}, "
          f"destinations {format_set(F.roles.destinations)}", file=out)


def _cmd_derive(args, out):
    F = _read_flows(args.flows)
    D = _decomp(F, args.dest, args.partition)
    print(D.partition.render(), file=out)
    for s in D.sources:
        v = D.virtual_sources[s]
        print(f"v({s}) = {format_set(v.v_set)}  g({s},{D.destination}) = {D.virtual_flows[s]}", file=out)
    print(render_decoding_plan(D), file=out)
    print(f"complete: {'yes' if is_complete(D) else 'no'}", file=out)


def _cmd_region(args, out):
    F = _read_flows(args.flows)
    if args.partition is None:
        print(outer_region(F, args.dest).render(), file=out)
    else:
        print(df_region(_decomp(F, args.dest, args.partition)).render(), file=out)


def _cmd_shift(args, out):
    F = _read_flows(args.flows)
    D = _decomp(F, args.dest, args.partition)
    print(shift(D, parse_set(args.set)).partition.render(), file=out)


def _cmd_cover(args, out):
    F = _read_flows(args.flows)
    ch, dist = _channel(args, F)
    rates = args.rates
    if rates is None:
        (rates,) = sample_boundary(outer_region(F, args.dest), ch, dist, args.alpha, 1, args.seed)
    start = _decomp(F, args.dest, args.partition) if args.partition else None
    print("rates " + " ".join(f"R{s}={r:.12g}" for s, r in sorted(rates.items())), file=out)
    trace = cover(F, args.dest, rates, ch, dist, eps=args.eps, start=start)
    print(trace.render(), file=out)
    if not eval_region(df_region(trace.terminal), ch, dist, rates, args.eps).member:
        raise OutsideRegionError("terminal region does not contain the rate vector")


def _cmd_verify(args, out):
    if args.samples < 0:
        raise UsageError("--samples must be nonnegative")
    F = _read_flows(args.flows)
    ch, dist = _channel(args, F)
    rep = verify_experiment(F, args.dest, ch, dist, args.samples, args.alpha, args.eps, args.seed)
    out.write(rep.to_csv())


def _cmd_fixtures(args, out):
    from .fixtures import CATALOG, load_fixture, run_fixture

    if args.run is None:
        for name in CATALOG:
            print(f"{name}\t{load_fixture(name).where}", file=out)
        return 0
    names = CATALOG if args.run == "all" else [args.run]
    if args.run != "all" and args.run not in CATALOG:
        raise UsageError(f"unknown fixture {args.run!r}")
    failed = 0
    for name in names:
        rep = run_fixture(load_fixture(name))
        print(rep.render(), file=out)
        failed += not rep.passed
    print(f"{len(names) - failed}/{len(names)} fixtures passed", file=out)
    if failed:
        print(f"error: {failed} fixture(s) failed", file=sys.stderr)
        return 1
    return 0


COMMANDS = {
    "validate": _cmd_validate, "derive": _cmd_derive, "region": _cmd_region, "shift": _cmd_shift,
    "cover": _cmd_cover, "verify": _cmd_verify, "fixtures": _cmd_fixtures,
}

DOMAIN_ERRORS = (FlowSpecError, MalformedDecomposition, NotCompleteError, OutsideRegionError,
                 ChannelError, CoverError, OSError, ValueError, KeyError)


def main(argv=None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.verb](args, sys.stdout) or 0
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except DOMAIN_ERRORS as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {msg}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
