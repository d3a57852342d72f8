"""Command line front end.

Exit codes: 0 success, 1 usage or config error, 2 assertion failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import analytics, demo, experiments, protocol

EXIT_OK, EXIT_USAGE, EXIT_ASSERT = 0, 1, 2
FORMULAS = ("eps", "eq1", "eq2", "eq3", "eq4", "eq5", "eq9", "eq10")
FORMULA_HELP = """formulas:
  eps   reading error bound sin^2(Theta/n^alpha)        --Theta --alpha --n
  eq1   pass probability of a fake qubit                --theta --theta-prime
  eq2   eq1 averaged over the angle range               --Theta --alpha --n --theta-prime
  eq3   pass probability of a measured, unfaked qubit   --theta
  eq4   product of eq3 over read qubits                 --thetas
  eq5   information bound n - log2(m)                   --n --m
  eq9   single basis vector bound prod cos^2            --thetas
  eq10  collective bound 2^-k prod 2cos^2               --thetas --k
"""


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _resolve_seed(seed):
    if seed is None:
        seed = int(np.random.SeedSequence().entropy % 2 ** 63)
        print(f"seed: {seed}", file=sys.stderr)
    return seed


def _emit(obj, out: str | None):
    text = json.dumps(obj, indent=2) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _load_record(path):
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot load sealed record {path}: {exc}") from exc


def _parse_bits(text: str) -> np.ndarray:
    if not text or set(text) - {"0", "1"}:
        raise UsageError("--bits must be a non-empty string of 0s and 1s")
    return np.array([int(c) for c in text], dtype=np.int8)


def _parse_floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise UsageError(f"bad angle list {text!r}") from exc


def cmd_seal(args) -> int:
    seed = _resolve_seed(args.seed)
    rng = np.random.default_rng(seed)
    if args.bits is not None:
        bits = _parse_bits(args.bits)
        if args.n is not None and args.n != bits.size:
            raise UsageError(f"--n {args.n} does not match {bits.size} bits given")
        n = bits.size
    else:
        if args.n is None:
            raise UsageError("give --n or --bits")
        n = args.n
        bits = None
    params = protocol.ProtocolParams(n, args.theta, args.alpha, seed)
    if bits is None:
        bits = rng.integers(0, 2, n, dtype=np.int8)
    sealed = protocol.seal(params, bits, rng)
    if args.public_out:
        Path(args.public_out).write_text(json.dumps(sealed.to_record(public=True), indent=2) + "\n")
    _emit(sealed.to_record(), args.out)
    return EXIT_OK


def cmd_read(args) -> int:
    rec = _load_record(args.input)
    state = protocol.state_from_record(rec["state"])
    seed = _resolve_seed(args.seed)
    # the reader only ever touches the public state
    bits, after = protocol.read_public(state, np.random.default_rng(seed))
    rec["state"] = protocol.state_to_record(after)
    Path(args.out or args.input).write_text(json.dumps(rec, indent=2) + "\n")
    print(json.dumps({"bits": "".join(map(str, bits.tolist())), "seed": seed}))
    return EXIT_OK


def cmd_check(args) -> int:
    sealed = protocol.SealedString.from_record(_load_record(args.input))
    seed = _resolve_seed(args.seed)
    report, after = protocol.check(sealed, np.random.default_rng(seed), early_exit=args.early_exit,
                                   stream=str(seed))
    Path(args.out or args.input).write_text(json.dumps(after.to_record(), indent=2) + "\n")
    print(json.dumps(report.to_record()))
    return EXIT_OK


def _need(args, *names):
    missing = [n for n in names if getattr(args, n) is None]
    if missing:
        raise UsageError(f"formula {args.formula} needs " + ", ".join("--" + m.replace("_", "-") for m in missing))


def evaluate_formula(args) -> tuple[dict, float]:
    f = args.formula
    if f == "eps":
        _need(args, "Theta", "alpha", "n")
        inputs = {"Theta": args.Theta, "alpha": args.alpha, "n": args.n}
        return inputs, analytics.eps_bound(**inputs)
    if f == "eq1":
        _need(args, "theta", "theta_prime")
        inputs = {"theta": args.theta, "theta_prime": args.theta_prime}
        return inputs, analytics.pass_prob_fake(**inputs)
    if f == "eq2":
        _need(args, "Theta", "alpha", "n")
        tp = args.theta_prime if args.theta_prime is not None else 0.0
        inputs = {"Theta": args.Theta, "alpha": args.alpha, "n": args.n, "theta_prime": tp}
        return inputs, analytics.avg_pass_prob(**inputs)
    if f == "eq3":
        _need(args, "theta")
        return {"theta": args.theta}, analytics.pass_prob_leave(args.theta)
    if f == "eq4":
        _need(args, "thetas")
        thetas = _parse_floats(args.thetas)
        return {"thetas": thetas}, analytics.evade_prob_individual(thetas)
    if f == "eq5":
        _need(args, "n", "m")
        return {"n": args.n, "m": args.m}, analytics.info_bound(args.n, args.m)
    if f == "eq9":
        _need(args, "thetas")
        thetas = _parse_floats(args.thetas)
        return {"thetas": thetas}, analytics.per_v_amplitude_bound(thetas)
    _need(args, "thetas", "k")
    thetas = _parse_floats(args.thetas)
    return {"thetas": thetas, "k": args.k}, analytics.evade_bound_collective(thetas, args.k)


def cmd_analytic(args) -> int:
    inputs, value = evaluate_formula(args)
    out = {"formula": args.formula, "inputs": inputs, "value": value}
    if args.formula == "eq10":
        out["clamped"] = min(value, 1.0)
    _emit(out, args.out)
    return EXIT_OK


def cmd_demo(args) -> int:
    seed = _resolve_seed(args.seed)
    kwargs = {"secret_bit": args.secret_bit, "dummy_count": args.dummy_count,
              "payload_basis_angle": args.angle}
    if args.text is not None:
        kwargs["instruction_text"] = args.text
    spec = demo.DemoSpec(**kwargs)
    t = demo.run_demo(spec, args.theta, args.alpha, seed=seed, read=not args.no_read)
    _emit(t.to_dict(), args.out)
    return EXIT_OK


def assertion_failures(reports) -> list[str]:
    failures = []
    for r in reports:
        label = f"{r.sweep_variable}={r.sweep_value}" if r.sweep_variable else "point"
        if r.analytic_ref is not None:
            if not r.agrees(3.0):
                failures.append(f"{label}: estimate {r.estimate:.6g} vs reference {r.analytic_ref:.6g} "
                                f"(3 sigma = {3 * r.sigma():.3g})")
        elif r.bound_raw is not None:
            slack = 3 * math.sqrt(max(r.estimate * (1 - r.estimate), 0.0) / max(r.counted, 1))
            if r.estimate > r.bound_clamped + slack:
                failures.append(f"{label}: estimate {r.estimate:.6g} above bound {r.bound_clamped:.6g}")
    return failures


def cmd_experiment(args) -> int:
    config = experiments.load_config(args.config)
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if overrides or args.workers:
        data = config.model_dump()
        data["params"].update(overrides)
        if args.workers:
            data["workers"] = args.workers
        config = experiments.parse_config(data, source=args.config)
    if args.do_assert and config.trials < 100:
        raise experiments.ConfigError("--assert needs trials >= 100")
    reports = experiments.run(config)
    reports = reports if isinstance(reports, list) else [reports]
    if args.expect is not None:
        for r in reports:
            r.analytic_ref = args.expect
    fmt = args.format or config.output.format
    out = args.out or config.output.path
    text = experiments.format_reports(reports, fmt)
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)
    if args.do_assert:
        failures = assertion_failures(reports)
        for msg in failures:
            print(f"ASSERTION FAILED {msg}", file=sys.stderr)
        if failures:
            return EXIT_ASSERT
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="master RNG seed")
    common.add_argument("--out", default=argparse.SUPPRESS, help="output file (default stdout)")
    common.add_argument("--format", choices=("json", "csv"), default=argparse.SUPPRESS)
    common.add_argument("--assert", dest="do_assert", action="store_true", default=argparse.SUPPRESS,
                        help="compare estimates against analytic references at 3 sigma")

    p = _Parser(prog="qseal", description="Quantum bit string sealing simulator", parents=[common])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("seal", parents=[common], help="seal a bit string")
    s.add_argument("--n", type=int)
    s.add_argument("--bits", help="bit string of 0/1 characters; random if omitted")
    s.add_argument("--theta", type=float, required=True, help="Theta, the angle range constant")
    s.add_argument("--alpha", type=float, required=True)
    s.add_argument("--public-out", help="also write the public view (no private fields)")
    s.set_defaults(func=cmd_seal)

    r = sub.add_parser("read", parents=[common], help="honest reading of a sealed record")
    r.add_argument("--in", dest="input", required=True)
    r.set_defaults(func=cmd_read)

    c = sub.add_parser("check", parents=[common], help="Alice's check of a sealed record")
    c.add_argument("--in", dest="input", required=True)
    c.add_argument("--early-exit", action="store_true")
    c.set_defaults(func=cmd_check)

    a = sub.add_parser("analytic", parents=[common], help="evaluate a closed-form quantity",
                       epilog=FORMULA_HELP, formatter_class=argparse.RawDescriptionHelpFormatter)
    a.add_argument("formula", choices=FORMULAS)
    a.add_argument("--theta", type=float, help="single-qubit angle")
    a.add_argument("--theta-prime", type=float)
    a.add_argument("--Theta", type=float, help="angle range constant")
    a.add_argument("--alpha", type=float)
    a.add_argument("--n", type=int)
    a.add_argument("--m", type=float)
    a.add_argument("--k", type=float)
    a.add_argument("--thetas", help="comma-separated angles")
    a.set_defaults(func=cmd_analytic)

    d = sub.add_parser("demo", parents=[common], help="single-bit sealing demo")
    d.add_argument("--secret-bit", type=int, choices=(0, 1), required=True)
    d.add_argument("--dummy-count", type=int, default=32)
    d.add_argument("--angle", type=float, default=demo.DEFAULT_ANGLE, help="payload basis angle (radians)")
    d.add_argument("--text", help="instruction text (ASCII)")
    d.add_argument("--theta", type=float, default=0.2, help="Theta for sealing the instruction")
    d.add_argument("--alpha", type=float, default=0.25)
    d.add_argument("--no-read", action="store_true", help="skip the honest decode")
    d.set_defaults(func=cmd_demo)

    e = sub.add_parser("experiment", parents=[common], help="run a Monte Carlo campaign")
    e.add_argument("config")
    e.add_argument("--workers", type=int)
    e.add_argument("--expect", type=float, help="override the analytic reference used by --assert")
    e.set_defaults(func=cmd_experiment)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    # parent actions are shared with every subparser, so defaults are filled in here
    for name, default in (("seed", None), ("out", None), ("format", None), ("do_assert", False)):
        if not hasattr(args, name):
            setattr(args, name, default)
    try:
        return args.func(args)
    except (UsageError, experiments.ConfigError, protocol.ParamError, ValueError, KeyError, OSError) as exc:
        print(f"qseal {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
