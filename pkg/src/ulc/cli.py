"""Command-line front end.

Results go to stdout as JSON (default) or CSV (``--emit csv``); a one-line
human summary goes to stderr.  Exit codes: 0 success, 1 a check failed,
2 usage or input error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

from . import extremal, freedom, oracle, seqcore

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class InputError(Exception):
    pass


def _load_seq(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise InputError(f"{path}: cannot read input: {exc.strerror}") from exc
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from exc
    try:
        return seqcore.seq_from_dict(obj)
    except ValueError as exc:
        raise InputError(f"{path}:1: {exc}") from exc


def _flatten(d: dict, prefix: str = "") -> dict:
    out = {}
    for key, value in d.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            out.update(_flatten(value, name + "."))
        elif isinstance(value, list):
            out[name] = json.dumps(value)
        else:
            out[name] = "" if value is None else value
    return out


def _emit(args, payload: dict, csv_rows: tuple | None = None):
    if args.emit == "json":
        sys.stdout.write(json.dumps(payload, indent=2) + "\n")
        return
    writer = csv.writer(sys.stdout, lineterminator="\n")
    if csv_rows is not None:
        header, row = csv_rows
    else:
        flat = _flatten(payload)
        header, row = list(flat), [flat[k] for k in flat]
    writer.writerow(header)
    writer.writerow(row)


def _note(msg: str):
    sys.stderr.write(msg + "\n")


# subcommands


def cmd_validate(args) -> int:
    s = _load_seq(args.input)
    report = seqcore.validate_log_concave(s)
    payload = report.to_dict()
    ok = report.is_log_concave
    if isinstance(s, seqcore.Pmf):
        try:
            ulc = seqcore.is_ulc_inf(s)
        except ValueError:
            ulc = None
        payload["ulc_inf"] = ulc
        ok = ok and bool(ulc)
    _emit(args, payload)
    _note(f"log-concave: {report.is_log_concave} (worst index {report.worst_index})")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_dof(args) -> int:
    s = _load_seq(args.input)
    seq = s.seq if isinstance(s, seqcore.Pmf) else s
    try:
        cert = freedom.certify_dof(seq, samples=args.samples, seed=args.seed)
    except freedom.CertificationError as exc:
        _note(f"certification failed: {exc}")
        return EXIT_FAIL
    except ValueError as exc:
        raise InputError(f"{args.input}: {exc}") from exc
    _emit(args, cert.to_dict())
    _note(f"certified {cert.size} degrees of freedom at eps={cert.epsilon:g}")
    return EXIT_OK


def cmd_family(args) -> int:
    try:
        profile = extremal.family_profile(args.k, args.l, args.x)
        check = extremal.verify_h_nonneg(args.k, args.l, args.grid)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    payload = {
        "profile": profile.to_dict(),
        "claim1_ok": profile.claim1_ok,
        "y0": check.y0,
        "h_y0": check.h_y0,
        "h_check": check.to_dict(),
    }
    _emit(args, payload)
    ok = profile.claim1_ok and check.ok
    _note(f"family [{args.k}, {args.l}] at x={args.x:g}: mean {profile.mean:.12g}, "
          f"y0={check.y0:.12g}, h(y0)={check.h_y0:.6g}, checks {'pass' if ok else 'FAIL'}")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_extremal(args) -> int:
    try:
        res = extremal.minimize_prob_at_mean(args.mean, args.support)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    _emit(args, res.to_dict(), (res.CSV_HEADER, res.csv_row()))
    ok = res.min_prob >= res.poisson_prob - 1e-9
    _note(f"min P(X={res.n0}) = {res.min_prob:.12g} at [k, l] = [{res.best_k}, {res.best_l}]; "
          f"Poisson {res.poisson_prob:.12g}; gap {res.gap:.3g}")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_verify(args) -> int:
    try:
        cfg = oracle.TrialConfig(args.mean, args.support, args.trials, args.seed)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    rep = oracle.run_theorem_trials(cfg, workers=args.workers)
    _emit(args, rep.to_dict())
    _note(f"{rep.evaluated} of {rep.trials} trials evaluated, {rep.violations} violations")
    return EXIT_OK if rep.violations == 0 else EXIT_FAIL


def cmd_suite(args) -> int:
    try:
        rep = oracle.property_suite(args.support, args.cases, args.seed)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    _emit(args, rep.to_dict())
    _note(
        "failures: convolution {}, domination {}, entropy {}".format(
            rep.convolution.failed, rep.domination.failed, rep.entropy.failed
        )
    )
    return EXIT_OK if rep.ok else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ulc",
        description="Ultra-log-concave sequences, discrete degrees of freedom and "
        "the Poisson lower bound for P(X = E X).",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True, metavar="SUBCOMMAND")

    def add(name, func, help_):
        p = sub.add_parser(name, help=help_, description=help_)
        p.add_argument("--emit", choices=("json", "csv"), default="json",
                       help="output format on stdout (default: json)")
        p.set_defaults(func=func)
        return p

    p = add("validate", cmd_validate, "log-concavity (and ULC for pmfs) of a sequence")
    p.add_argument("--input", required=True, help="sequence JSON file")

    p = add("dof", cmd_dof, "certify degrees of freedom of a positive log-concave sequence")
    p.add_argument("--input", required=True, help="sequence JSON file")
    p.add_argument("--samples", type=int, default=100, help="sampled perturbations (default: 100)")
    p.add_argument("--seed", type=int, default=0, help="sampling seed (default: 0)")

    p = add("family", cmd_family, "profile of the truncated exponential family at one x")
    p.add_argument("--k", type=int, required=True, help="lower end of the support")
    p.add_argument("--l", type=int, required=True, help="upper end of the support")
    p.add_argument("--x", type=float, required=True, help="family parameter x > 0")
    p.add_argument("--grid", type=int, default=100, help="h-verification grid points (default: 100)")

    p = add("extremal", cmd_extremal, "minimise P(X = n0) over the extreme family on [0, L]")
    p.add_argument("--mean", type=int, required=True, help="integral mean n0")
    p.add_argument("--support", type=int, required=True, help="support bound L")

    p = add("verify", cmd_verify, "Monte-Carlo check of P(X = n0) >= P(Pois(n0) = n0)")
    p.add_argument("--mean", type=int, required=True, help="integral mean n0")
    p.add_argument("--support", type=int, required=True, help="support bound L")
    p.add_argument("--trials", type=int, default=1000, help="random pmfs (default: 1000)")
    p.add_argument("--seed", type=int, default=0, help="run seed (default: 0)")
    p.add_argument("--workers", type=int, default=1, help="worker processes (default: 1)")

    p = add("suite", cmd_suite, "convolution, convex-domination and entropy property suites")
    p.add_argument("--support", type=int, default=10, help="support bound L (default: 10)")
    p.add_argument("--cases", type=int, default=500, help="cases per sub-suite (default: 500)")
    p.add_argument("--seed", type=int, default=0, help="suite seed (default: 0)")
    return parser


def run_cli(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        return args.func(args)
    except InputError as exc:
        _note(f"ulc {args.subcommand}: error: {exc}")
        return EXIT_USAGE


def main():
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
