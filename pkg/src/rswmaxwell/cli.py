"""Command line: ``rswmaxwell {verify,evolve,dispersion,beam}``.

Exit codes: 0 success, 1 a check failed, 2 bad configuration or
precondition, 3 the run blew up (non-finite field).  Reports go to stdout
as JSON (CSV for dispersion); human-readable tables and summaries go to
stderr.  FFT worker threads come from ``RSWMAXWELL_THREADS``.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import runner
from . import verify as vf
from .config import ConfigError, load_config
from .evolve import PlanError, RunAbort
from .io import FormatError
from .medium import MediumError
from .operators import OperatorError

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_ABORT = 0, 1, 2, 3


def _err(msg: str):
    print(msg, file=sys.stderr)


def cmd_verify(args) -> int:
    scope = args.scope_flag or args.scope or "all"
    if scope not in vf.SCOPES:
        _err(f"error: unknown scope {scope!r}; choose from {', '.join(vf.SCOPES)}")
        return EXIT_CONFIG
    consts = None
    if args.mutate:
        try:
            consts = vf.mutated_constants(vf.load_mutation(args.mutate))
        except (OSError, ValueError, KeyError) as exc:
            _err(f"error: --mutate: {exc}")
            return EXIT_CONFIG
    checks = vf.run_checks(scope, args.seed, consts)
    text = vf.report_json(checks, scope, args.seed)
    _err(vf.format_table(checks))
    sys.stdout.write(text)
    if args.output:
        out = Path(args.output)
        out.mkdir(parents=True, exist_ok=True)
        (out / "verify_report.json").write_text(text)
    return EXIT_OK if all(ch.passed for ch in checks) else EXIT_CHECK


def _load(args):
    cfg = load_config(args.config)
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    return cfg


def cmd_evolve(args) -> int:
    cfg = _load(args)
    outdir = args.output or (cfg.base_dir / cfg.output["dir"] if cfg.output["dir"] else Path("out"))
    oracle = None if args.oracle is None else args.oracle == "on"
    summary = runner.run_evolve(cfg, outdir, oracle)
    line = (f"steps {summary['steps']}  t_end {summary['t_end']:.6g}  "
            f"energy drift {summary['energy_drift']:.3e} (tol {cfg.tolerances['energy_drift']:.1e})  "
            f"max constraint residual {summary['max_constraint_residual']:.3e}")
    if "phase_error" in summary:
        line += f"  phase error {summary['phase_error']:.3e} (tol {cfg.tolerances['phase_error']:.1e})"
    if "oracle_diff" in summary:
        od = summary["oracle_diff"]
        line += "  oracle n/a (exact propagator)" if od is None else \
            f"  oracle diff {od:.3e} (tol {cfg.tolerances['oracle']:.1e})"
    if summary["failed"]:
        line += "  FAILED: " + ", ".join(summary["failed"])
    print(line)
    return EXIT_CHECK if summary["failed"] else EXIT_OK


def cmd_dispersion(args) -> int:
    cfg = _load(args)
    res = runner.run_dispersion(cfg, args.output)
    sys.stdout.write(res["csv"])
    _err(f"max rel err {res['max_rel_err']:.3e} (tol {res['tolerance']:.1e})")
    return EXIT_CHECK if res["failed"] else EXIT_OK


def cmd_beam(args) -> int:
    cfg = _load(args)
    rep = runner.run_beam(cfg, args.seed, args.output)
    sys.stdout.write(json.dumps(rep, indent=2, sort_keys=True) + "\n")
    return EXIT_CHECK if rep["failed"] else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rswmaxwell", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="run the identity and residual suites")
    v.add_argument("scope", nargs="?", help="algebra, operators, evolution or all (default)")
    v.add_argument("--scope", dest="scope_flag", help="same as the positional scope")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--output", help="directory for verify_report.json")
    v.add_argument("--mutate", help="JSON fixture replacing one constant-matrix entry")
    v.set_defaults(func=cmd_verify)

    e = sub.add_parser("evolve", help="run a configured simulation")
    e.add_argument("--config", required=True)
    e.add_argument("--output", help="output directory (default: output.dir of the config, else ./out)")
    e.add_argument("--oracle", choices=("on", "off"), help="cross-check against the curl-equation solver")
    e.add_argument("--seed", type=int)
    e.set_defaults(func=cmd_evolve)

    d = sub.add_parser("dispersion", help="measure omega(k) with the exact propagator")
    d.add_argument("--config", required=True)
    d.add_argument("--output", help="directory for dispersion.csv")
    d.add_argument("--seed", type=int)
    d.set_defaults(func=cmd_dispersion)

    b = sub.add_parser("beam", help="check the beam-optics Hamiltonian structure")
    b.add_argument("--config", required=True)
    b.add_argument("--seed", type=int)
    b.add_argument("--output", help="directory for beam_report.json")
    b.set_defaults(func=cmd_beam)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, MediumError, PlanError, FormatError, OperatorError) as exc:
        _err(f"error: {exc}")
        return EXIT_CONFIG
    except RunAbort as exc:
        _err(f"aborted: {exc}")
        return EXIT_ABORT


if __name__ == "__main__":
    sys.exit(main())
