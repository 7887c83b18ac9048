"""Command line entry point.

Exit status: 0 on success, 2 when a config/instance fails validation (or
``validate`` finds a violated hypothesis), 1 on any other error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import harness
from .decoder import DecoderConfig, joint_typicality_decode
from .errors import ConfigError
from .harness import ExperimentConfig
from .model import derive_seed, gen_gaussian_matrix, gen_sparse_signal, load_instance, measure, save_instance

log = logging.getLogger("jtdecoder")

_RULES = {"min-deviation": "min_deviation", "first-lex": "first_lexicographic"}


class ValidationFailure(Exception):
    pass


def _load_config(path) -> ExperimentConfig:
    try:
        return ExperimentConfig.load(path)
    except (ValueError, json.JSONDecodeError, OSError) as exc:
        raise ValidationFailure(f"{path}: {exc}") from exc


def _write(text: str, out) -> None:
    if out:
        Path(out).write_text(text)
        log.info("wrote %s", out)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def cmd_decode(args) -> int:
    try:
        inst = load_instance(args.instance)
        cfg = DecoderConfig(
            delta=args.delta, zeta=args.zeta, mu=inst.signal.mu,
            selection_rule=_RULES[args.rule], workers=args.threads,
        )
    except (ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        raise ValidationFailure(str(exc)) from exc
    res = joint_typicality_decode(inst.matrix, inst.observation, inst.l, inst.sigma2, cfg)
    _write(json.dumps(res.to_dict()), args.out)
    return 0


def cmd_make_instance(args) -> int:
    A = gen_gaussian_matrix(args.n, args.m, derive_seed(args.seed, 0))
    x = gen_sparse_signal(args.m, args.l, args.mu, args.amplitude_rule, derive_seed(args.seed, 1))
    inst = measure(A, x, args.sigma2, derive_seed(args.seed, 2))
    save_instance(inst, args.out)
    return 0


def cmd_experiment(args) -> int:
    cfg = _load_config(args.config)
    report = harness.run_experiment(cfg, parallelism=args.threads)
    fmt = args.format or cfg.output_format
    text = harness.emit_report(report, fmt)
    _write(text, args.out)
    return 0


def _parse_shapes(text: str):
    shapes = []
    for item in text.split(","):
        n, m, l = (int(v) for v in item.lower().split("x"))  # noqa: E741
        shapes.append((n, m, l))
    return shapes


def cmd_sweep(args) -> int:
    cfg = _load_config(args.config)
    if args.shapes:
        shapes = _parse_shapes(args.shapes)
    else:
        shapes = [(cfg.n * s, cfg.m * s, cfg.l * s) for s in (int(v) for v in args.scales.split(","))]
    try:
        reports = harness.run_shape_sweep(cfg, shapes)
    except ValueError as exc:
        raise ValidationFailure(str(exc)) from exc
    table = harness.gap_table_csv(reports)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        for r in reports:
            c = r.config
            harness.emit_report(r, "json", out / f"report_{c['n']}x{c['m']}x{c['l']}.json")
        (out / "gap_table.csv").write_text(table)
    sys.stdout.write(table)
    return 0


def cmd_validate(args) -> int:
    cfg = _load_config(args.config)
    rep = harness.regime_report(cfg)
    print(json.dumps(rep.to_dict(), indent=2))
    return 0 if rep.passed else 2


def cmd_bounds(args) -> int:
    cfg = _load_config(args.config)
    print(json.dumps(harness.bound_values(cfg), indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="jtdecoder", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("decode", help="decode one instance file")
    d.add_argument("--instance", required=True)
    g = d.add_mutually_exclusive_group()
    g.add_argument("--delta", type=float)
    g.add_argument("--zeta", type=float)
    d.add_argument("--rule", choices=sorted(_RULES), default="min-deviation")
    d.add_argument("--threads", type=int, default=1)
    d.add_argument("--out")
    d.set_defaults(func=cmd_decode)

    mi = sub.add_parser("make-instance", help="write a random instance file")
    mi.add_argument("--n", type=int, required=True)
    mi.add_argument("--m", type=int, required=True)
    mi.add_argument("--l", type=int, required=True)
    mi.add_argument("--sigma2", type=float, required=True)
    mi.add_argument("--mu", type=float, default=1.0)
    mi.add_argument("--amplitude-rule", default="constant", choices=["constant", "uniform_above_mu"])
    mi.add_argument("--seed", type=int, default=0)
    mi.add_argument("--out", required=True)
    mi.set_defaults(func=cmd_make_instance)

    e = sub.add_parser("experiment", help="run a Monte Carlo experiment")
    e.add_argument("--config", required=True)
    e.add_argument("--out")
    e.add_argument("--format", choices=harness.OUTPUT_FORMATS)
    e.add_argument("--threads", type=int)
    e.set_defaults(func=cmd_experiment)

    s = sub.add_parser("sweep", help="gap-versus-size sweep")
    s.add_argument("--config", required=True)
    s.add_argument("--scales", default="1")
    s.add_argument("--shapes", help="explicit NxMxL list, e.g. 40x24x3,53x36x4")
    s.add_argument("--out")
    s.set_defaults(func=cmd_sweep)

    v = sub.add_parser("validate", help="check the regime hypotheses for a config")
    v.add_argument("--config", required=True)
    v.set_defaults(func=cmd_validate)

    b = sub.add_parser("bounds", help="print analytical bound values for a config")
    b.add_argument("--config", required=True)
    b.set_defaults(func=cmd_bounds)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (ValidationFailure, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
