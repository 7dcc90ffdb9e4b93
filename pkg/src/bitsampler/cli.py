"""Command-line entry point: ``bitsampler <subcommand> ...``.

Exit codes: 0 success, 2 validation error, 3 when a sampler hits a
non-halting safeguard. The ``demo`` subcommands exist to exhibit those
failures and exit 0 with a verdict line.
"""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys
from fractions import Fraction
from typing import List, Optional, Sequence

from .analysis import ExperimentConfig, riemann_gap, run_experiment
from .bisection import bisect_cdf, get_cdf
from .bitstream import BitSource, SeededBitSource, load_trace
from .discrete import DiscreteRejection, ProbVector, ky_sample
from .errors import BitSamplerError, NaiveLoopForever, NonRiemannSuspected, ValidationError
from .oracle import RatioDensitySpec, cantor_density, get_density, lambda_cantor
from .rejection import (
    DEFAULT_DEPTH_CAP,
    NAIVE_LOOP_CAP,
    grid_spiked_density,
    grid_zeroed_density,
    naive_sample_broken,
    naive_trial,
    sample_compact,
    sample_general,
)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NONHALTING = 3


def _default_seed() -> int:
    return int(os.environ.get("BITSAMPLER_SEED", "0"))


def _source(args) -> BitSource:
    if getattr(args, "bits_file", None):
        return load_trace(args.bits_file)
    return SeededBitSource(args.seed)


def _emit(args, header: Sequence[str], rows) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    text = buf.getvalue()
    out = getattr(args, "out", None)
    if out and out != "-":
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _parse_probs(text: str) -> List[Fraction]:
    try:
        return [Fraction(tok.strip()) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise ValidationError(f"bad probability list {text!r}") from None


# --- subcommands ---------------------------------------------------------------


def cmd_sample(args) -> int:
    target = get_density(args.density)
    sampler = sample_general if isinstance(target, RatioDensitySpec) else sample_compact
    source = _source(args)
    rows = []
    for i in range(args.n):
        res = sampler(target, args.epsilon, source, args.depth_cap)
        tel = res.telemetry
        rows.append(
            [i, *res.coords, tel.decision_bits, tel.bisection_bits, tel.oracle_calls, tel.restarts, tel.total_bits]
        )
    values = ["value"] + [f"value{j}" for j in range(2, target.dimension + 1)]
    _emit(args, ["i", *values, "decision_bits", "bisection_bits", "oracle_calls", "restarts", "total_bits"], rows)
    return EXIT_OK


def cmd_discrete(args) -> int:
    p = ProbVector(_parse_probs(args.p))
    source = _source(args)
    if args.q is not None:
        q = ProbVector(_parse_probs(args.q))
        if args.C is not None:
            C = Fraction(args.C)
        else:
            C = max(pi / qi for pi, qi in zip(p.probs, q.probs) if qi > 0)
        sampler = DiscreteRejection(p, q, C)
        draw = sampler.sample
    else:
        def draw(src):
            return ky_sample(p, src)
    rows = []
    for i in range(args.n):
        start = source.consumed
        outcome = draw(source)
        rows.append([i, outcome, source.consumed - start])
    _emit(args, ["i", "outcome", "bits"], rows)
    return EXIT_OK


def cmd_bisect(args) -> int:
    cdf = get_cdf(args.cdf)
    source = _source(args)
    rows = []
    for i in range(args.n):
        res = bisect_cdf(cdf, args.epsilon, source)
        rows.append([i, res.value, res.telemetry.bisection_bits])
    _emit(args, ["index", "value", "bits"], rows)
    return EXIT_OK


def cmd_gaps(args) -> int:
    target = get_density(args.density)
    density = target.tilde if isinstance(target, RatioDensitySpec) else target
    rows = []
    for k in range(args.kmax + 1):
        g = riemann_gap(density, k)
        rows.append([k, g.I_plus, g.I_minus, g.gap])
    _emit(args, ["k", "I_plus", "I_minus", "gap"], rows)
    return EXIT_OK


def cmd_verify(args) -> int:
    config = ExperimentConfig(
        density=args.density,
        epsilons=args.epsilon,
        n=args.n,
        seed=args.seed,
        depth_cap=args.depth_cap,
        jobs=args.jobs,
    )
    reports = run_experiment(config)
    rows = [
        [r.bound_name, r.theoretical, r.empirical_mean, r.empirical_stderr, str(r.satisfied).lower()]
        for r in reports
    ]
    _emit(args, ["bound_name", "theoretical", "empirical_mean", "stderr", "satisfied"], rows)
    return EXIT_OK


def cmd_demo_cantor(args) -> int:
    density = cantor_density(args.delta)
    source = SeededBitSource(args.seed)
    hits = 0
    for _ in range(args.attempts):
        try:
            sample_compact(density, args.epsilon, source, args.depth_cap)
        except NonRiemannSuspected:
            hits += 1
    freq = hits / args.attempts
    verdict = "NON-HALTING" if hits else "HALTS"
    print(
        f"cantor delta={args.delta!r} lambda={lambda_cantor(args.delta)!r} "
        f"depth_cap={args.depth_cap} cap_hits={hits}/{args.attempts} freq={freq!r} verdict={verdict}"
    )
    return EXIT_OK


def cmd_demo_naive(args) -> int:
    eps = args.epsilon
    source = SeededBitSource(args.seed)
    spiked = grid_spiked_density(eps, stride=2)
    on = on_acc = off = off_acc = 0
    for _ in range(args.trials):
        (x,), accepted = naive_trial(spiked, eps, source)
        if spiked.is_spike(x):
            on += 1
            on_acc += accepted
        else:
            off += 1
            off_acc += accepted
    # the spikes carry zero mass, so the correct acceptance rate is 1/2 everywhere
    print(
        f"naive spiked eps={eps!r} accept_on_spikes={on_acc / max(on, 1)!r} "
        f"accept_off_spikes={off_acc / max(off, 1)!r} correct_rate=0.5 verdict=BIASED"
    )
    zeroed = grid_zeroed_density(eps)
    try:
        naive_sample_broken(zeroed, eps, source, max_iterations=args.loop_cap)
        print(f"naive zeroed eps={eps!r} verdict=ACCEPTED (unexpected)")
    except NaiveLoopForever as exc:
        print(f"naive zeroed eps={eps!r} iterations={exc.iterations} verdict=LOOPS-FOREVER")
    return EXIT_OK


# --- parser ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bitsampler", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    seed_default = _default_seed()

    def common(p, replay=True, out=True):
        p.add_argument("--seed", type=int, default=seed_default)
        if replay:
            p.add_argument("--bits-file", help="replay a 0/1 text trace instead of seeding")
        if out:
            p.add_argument("--out", help="output CSV path (default stdout)")

    p = sub.add_parser("sample", help="quadtree rejection sampling")
    p.add_argument("--density", required=True)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--depth-cap", type=int, default=DEFAULT_DEPTH_CAP)
    common(p)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("discrete", help="Knuth-Yao sampling, or discrete rejection when --q is given")
    p.add_argument("--p", required=True, help="comma-separated probabilities (decimals or a/b)")
    p.add_argument("--q")
    p.add_argument("--C")
    p.add_argument("--n", type=int, default=1)
    common(p)
    p.set_defaults(func=cmd_discrete)

    p = sub.add_parser("bisect", help="CDF bisection")
    p.add_argument("--cdf", required=True)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--n", type=int, default=1)
    common(p)
    p.set_defaults(func=cmd_bisect)

    p = sub.add_parser("gaps", help="Riemann gaps per grid level")
    p.add_argument("--density", required=True)
    p.add_argument("--kmax", type=int, default=10)
    p.add_argument("--out")
    p.set_defaults(func=cmd_gaps)

    p = sub.add_parser("verify", help="compare telemetry with the theoretical bounds")
    p.add_argument("--density", required=True)
    p.add_argument("--epsilon", type=float, nargs="+", required=True)
    p.add_argument("--n", type=int, default=10000)
    p.add_argument("--depth-cap", type=int, default=DEFAULT_DEPTH_CAP)
    p.add_argument("--jobs", type=int, default=1)
    common(p, replay=False)
    p.set_defaults(func=cmd_verify)

    demo = sub.add_parser("demo", help="failure demonstrations").add_subparsers(dest="demo", required=True)
    p = demo.add_parser("cantor", help="non-Riemann density defeats the oracle")
    p.add_argument("--delta", type=float, default=0.2)
    p.add_argument("--attempts", type=int, default=1000)
    p.add_argument("--depth-cap", type=int, default=24)
    p.add_argument("--epsilon", type=float, default=2.0**-10)
    common(p, replay=False, out=False)
    p.set_defaults(func=cmd_demo_cantor)

    p = demo.add_parser("naive", help="bisect-then-test shortcut is biased or never halts")
    p.add_argument("--epsilon", type=float, default=0.125)
    p.add_argument("--trials", type=int, default=10000)
    p.add_argument("--loop-cap", type=int, default=NAIVE_LOOP_CAP)
    common(p, replay=False, out=False)
    p.set_defaults(func=cmd_demo_naive)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and EXIT_VALIDATION
    try:
        return args.func(args)
    except (NonRiemannSuspected, NaiveLoopForever) as exc:
        print(f"bitsampler: {exc}", file=sys.stderr)
        return EXIT_NONHALTING
    except (BitSamplerError, ValueError, OSError) as exc:
        print(f"bitsampler: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
