"""Command line entry point: ``percolab <subcommand> ...``.

Every subcommand accepts ``--config FILE`` plus one flag per config field
(``--m``, ``--n``, ``--lambda``, ``--theta``, ``--reps``, ``--seed`` ...);
flags override values from the file.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from ..stats import summarize
from . import plotting
from .config import ExperimentConfig, default_output_dir, load_config
from .records import emit_summary_json, read_csv, write_csv
from .runner import OracleMismatch, calibrate_theta, check_against_oracle, run_experiment, run_ladder

log = logging.getLogger("percolab")


def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _config_args(p):
    g = p.add_argument_group("experiment configuration")
    g.add_argument("--config", type=Path, help="key = value config file")
    g.add_argument("--m", type=int)
    g.add_argument("--n", type=float, help="box side (window is [-n/2, n/2]^m)")
    g.add_argument("--lambda", dest="lam", type=float, help="Poisson intensity")
    g.add_argument("--r", type=float, help="connection radius")
    g.add_argument("--theta", type=float)
    g.add_argument("--reps", type=int)
    g.add_argument("--master-seed", "--seed", dest="master_seed",
                   help="64-bit unsigned seed, decimal or 0x-hex")
    g.add_argument("--compute-local", action=argparse.BooleanOptionalAction, default=None)
    g.add_argument("--compute-e3", action=argparse.BooleanOptionalAction, default=None)
    g.add_argument("--oracle-check", action=argparse.BooleanOptionalAction, default=None)
    g.add_argument("--parallelism", help="worker count or 'auto'")
    g.add_argument("--point-cap", type=float, help="refuse runs expecting more points than this")
    p.add_argument("--out", type=Path, help="output directory (default $PERCOLAB_OUTPUT_DIR or ./percolab-out)")
    p.add_argument("--no-plots", action="store_true", help="skip the matplotlib figures")
    p.add_argument("-v", "--verbose", action="store_true")


_FIELDS = ("m", "n", "lam", "r", "theta", "reps", "master_seed", "compute_local", "compute_e3",
           "oracle_check", "parallelism", "point_cap")


def _config(args, config_path=None) -> ExperimentConfig:
    overrides = {f: getattr(args, f) for f in _FIELDS}
    return load_config(args.config or config_path, overrides)


def _outdir(args) -> Path:
    out = args.out or Path(default_output_dir())
    out.mkdir(parents=True, exist_ok=True)
    return out


def _progress(done, total):
    if done == total or done % max(1, total // 10) == 0:
        log.info("%d/%d replications", done, total)


def _write(path: Path, data: bytes):
    path.write_bytes(data)
    log.info("wrote %s", path)


def cmd_simulate(args) -> int:
    cfg = _config(args)
    out = _outdir(args)
    records = run_experiment(cfg, _progress)
    write_csv(out / "records.csv", records)
    (out / "config.txt").write_text(cfg.to_text())
    summary = summarize(records, cfg) if len(records) >= 2 else None
    if summary is not None:
        _write(out / "summary.json", emit_summary_json(summary, config=cfg))
        if not args.no_plots:
            plotting.plot_normality([r.N for r in records], out / "normality.png")
        print(json.dumps({k: summary.as_dict()[k] for k in ("mean_N", "sigma2_hat", "rho_hat", "dk_global",
                                                             "dk_local", "mismatch_frac")}))
    return 0


_LADDER_COLUMNS = ("n", "theta", "reps", "mean_N", "rho_hat", "rho_hat_se", "sigma2_hat", "sigma2_hat_se",
                   "dk_global", "dk_local", "second_mean", "second_ratio", "mismatch_frac")


def cmd_ladder(args) -> int:
    cfg = _config(args)
    out = _outdir(args)
    res = run_ladder(cfg, args.n_values, args.theta_rule, args.theta_power,
                     progress=lambda n, d, t: _progress(d, t))
    for n, recs in res.records.items():
        sub = out / f"n_{n:g}"
        sub.mkdir(exist_ok=True)
        write_csv(sub / "records.csv", recs)
        (sub / "config.txt").write_text(res.configs[n].to_text())
        _write(sub / "summary.json", emit_summary_json(res.summaries[list(res.records).index(n)],
                                                       config=res.configs[n]))
    with open(out / "ladder.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(_LADDER_COLUMNS)
        for s in res.summaries:
            row = dict(s.as_dict(), theta=res.configs[s.n].theta)
            w.writerow(["" if row.get(c) is None else repr(row[c]) if isinstance(row[c], float) else row[c]
                        for c in _LADDER_COLUMNS])
    fits = {"dk_global": res.fit_global, "dk_local": res.fit_local}
    extra = {"second_largest_scaling": {"ratios": res.scaling.ratios, "bounded": res.scaling.bounded,
                                        "band": res.scaling.band},
             "theta_rule": args.theta_rule, "notes": res.notes}
    _write(out / "ladder.json", emit_summary_json(res.summaries, fits, cfg, extra))
    if not args.no_plots:
        plotting.plot_ladder(res, out / "ladder.png")
    for name, fit in fits.items():
        if fit is not None:
            print(f"{name}: slope {fit.slope:.3f}  intercept {fit.intercept:.3f}  r2 {fit.r2:.3f}")
    return 0


def cmd_calibrate(args) -> int:
    cfg = _config(args)
    out = _outdir(args)
    rows = calibrate_theta(cfg, args.thetas, progress=lambda th, d, t: log.info("theta %g done", th))
    with open(out / "calibration.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("theta", "half_edge", "mismatch_frac", "e0_frac", "mean_wall_ms", "inclusion_violations"))
        for r in rows:
            w.writerow((repr(r.theta), repr(r.half_edge), repr(r.mismatch_frac), repr(r.e0_frac),
                        repr(r.mean_wall_ms), r.inclusion_violations))
    log.info("wrote %s", out / "calibration.csv")
    if not args.no_plots:
        plotting.plot_calibration(rows, out / "calibration.png")
    for r in rows:
        print(f"theta {r.theta:g}: mismatch {r.mismatch_frac:.3f}  E0 {r.e0_frac:.3f}  {r.mean_wall_ms:.0f} ms")
    return 0


def _records_and_config(args):
    records = read_csv(args.records)
    sibling = args.records.parent / "config.txt"
    cfg = _config(args, sibling if sibling.exists() else None)
    return records, cfg


def cmd_analyze(args) -> int:
    records, cfg = _records_and_config(args)
    data = emit_summary_json(summarize(records, cfg), config=cfg)
    if args.out:
        args.out.mkdir(parents=True, exist_ok=True)
        _write(args.out / "summary.json", data)
        if not args.no_plots:
            plotting.plot_normality([r.N for r in records], args.out / "normality.png")
    sys.stdout.write(data.decode())
    return 0


def cmd_oracle_check(args) -> int:
    records, cfg = _records_and_config(args)
    if args.limit is not None:
        records = records[:args.limit]
    bad = 0
    for rec in records:
        try:
            check_against_oracle(cfg, rec)
            print(f"rep {rec.rep_id}: ok")
        except OracleMismatch as exc:
            bad += 1
            print(f"MISMATCH {exc}")
    print(f"{len(records) - bad}/{len(records)} replications agree with the reference implementation")
    return 1 if bad else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="percolab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="one configuration -> records CSV + summary JSON")
    _config_args(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("ladder", help="sweep n -> per-n summaries + rate fits")
    _config_args(p)
    p.add_argument("--n-values", type=_floats, required=True, help="comma-separated box sides")
    p.add_argument("--theta-rule", choices=("fixed", "log-power"), default="fixed")
    p.add_argument("--theta-power", type=float, default=1.0)
    p.set_defaults(func=cmd_ladder)

    p = sub.add_parser("calibrate-theta", help="sweep theta on paired seeds -> coupling CSV")
    _config_args(p)
    p.add_argument("--thetas", type=_floats, required=True, help="comma-separated theta values")
    p.set_defaults(func=cmd_calibrate)

    for name, func, helptext in (("analyze", cmd_analyze, "re-summarize a records CSV"),
                                 ("oracle-check", cmd_oracle_check, "recheck a records CSV with the reference code")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("records", type=Path)
        _config_args(p)
        if name == "oracle-check":
            p.add_argument("--limit", type=int, help="check only the first LIMIT records")
        p.set_defaults(func=func)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"percolab: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
