"""Command-line interface: ``progadjust simulate | analyze | report``.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 estimation or
internal error.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .config import apply_overrides, config_digest, load_config, scenario_dict
from .dataset import load_historical_csv, load_trial_csv
from .errors import ConfigError, DataError, ProgAdjustError
from .estimators import (
    REPORT_COLUMNS,
    crossfit_outcome_regressions,
    estimate_aipw,
    estimate_ancova_hc3,
    estimate_tmle,
    estimate_unadjusted,
)
from .learners import PROFILES, SuperLearnerConfig
from .prognostic import augment, fit_prognostic_model, load_model, save_model, score_trial
from .seeding import derive_seed
from .simulation import (
    aggregate,
    metrics_rows,
    preset,
    run_scenario,
    write_metrics_csv,
    write_raw_csv,
    write_selection_csv,
)

log = logging.getLogger("progadjust")

ANALYZE_ROSTER = ("unadjusted", "ancova", "ancova_prog", "tmle", "tmle_prog")
ANALYZE_ESTIMATORS = ("unadjusted", "ancova", "ancova_prog", "tmle", "tmle_prog",
                      "aipw", "aipw_prog")


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _write_manifest(out_dir: Path, command: str, config: dict, digest: str,
                    master_seed, started: str, outputs, **extra) -> Path:
    manifest = {
        "command": command,
        "tool_version": __version__,
        "config_digest": digest,
        "master_seed": master_seed,
        "started": started,
        "finished": _now(),
        "outputs": sorted(str(Path(p).name) for p in outputs),
        **config,
        **extra,
    }
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def _out_dir(path) -> Path:
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise DataError(f"cannot create output directory {out}: {exc}") from exc
    return out


# --- simulate -------------------------------------------------------------

def cmd_simulate(args) -> int:
    started = _now()
    if (args.config is None) == (args.preset is None):
        raise ConfigError("give exactly one of --config or --preset")
    configs = load_config(args.config) if args.config else preset(args.preset)
    overrides = {}
    if args.profile:
        overrides["sl_profile"] = args.profile
    if args.reps is not None:
        overrides["reps"] = args.reps
    if args.seed is not None:
        overrides["master_seed"] = args.seed
    configs = [apply_overrides(c, overrides) for c in configs]
    out = _out_dir(args.out)

    raw_rows, metric_rows, sel_rows, failures = [], [], [], []
    for cfg in configs:
        t0 = time.perf_counter()
        log.info("scenario %s: %d reps, n=%d, n_hist=%d", cfg.scenario_id, cfg.reps,
                 cfg.n, cfg.n_hist)
        raw = run_scenario(cfg, workers=args.workers)
        raw_rows += raw.rows
        sel_rows += raw.selections
        failures += [{"scenario_id": cfg.scenario_id, "rep": r, "error": e}
                     for r, e in raw.failures]
        table = aggregate(raw, raw.true_ate, cfg.alpha, min_reps=1)
        metric_rows += metrics_rows(table, {**scenario_dict(cfg),
                                            "scenario_id": cfg.scenario_id})
        log.info("scenario %s done in %.1fs", cfg.scenario_id, time.perf_counter() - t0)

    outputs = [write_raw_csv(raw_rows, out / "raw.csv"),
               write_metrics_csv(metric_rows, out / "metrics.csv"),
               write_selection_csv(sel_rows, out / "selection.csv")]
    seeds = sorted({c.master_seed for c in configs})
    _write_manifest(out, "simulate", {"scenarios": [scenario_dict(c) for c in configs]},
                    config_digest(configs), seeds[0] if len(seeds) == 1 else seeds,
                    started, outputs, failures=failures,
                    workers=args.workers)
    print(f"wrote {len(raw_rows)} estimates for {len(configs)} scenario(s) to {out}")
    return 0


# --- analyze --------------------------------------------------------------

def _fmt_cell(v):
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def _write_rows(path: Path, columns, rows) -> Path:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt_cell(r[c]) for c in columns])
    return path


def score_correlations(trial, r) -> list[dict]:
    """Pearson correlation of the score with the outcome, within each arm."""
    rows = []
    for arm in (0, 1):
        m = trial.a == arm
        y, s = trial.y[m], r[m]
        corr = float(np.corrcoef(s, y)[0, 1]) if s.std() > 0 and y.std() > 0 else float("nan")
        rows.append({"arm": arm, "n": int(m.sum()), "correlation": corr})
    return rows


def cmd_analyze(args) -> int:
    started = _now()
    if args.historical and args.model:
        raise ConfigError("give at most one of --historical and --model")
    ests = tuple(args.estimators.split(",")) if args.estimators else ANALYZE_ROSTER
    bad = [e for e in ests if e not in ANALYZE_ESTIMATORS]
    if bad:
        raise ConfigError(f"unknown estimators {bad}; choose from {ANALYZE_ESTIMATORS}")
    trial = load_trial_csv(args.trial, args.outcome, args.treatment, args.pi1)
    sl = SuperLearnerConfig.from_profile(args.profile)
    out = _out_dir(args.out)
    outputs = []

    model = None
    if args.model:
        model = load_model(args.model)
    elif args.historical:
        hist = load_historical_csv(args.historical, args.outcome, trial.covariate_names)
        model = fit_prognostic_model(hist, sl.with_seed(derive_seed(args.seed, "prognostic")))
        outputs.append(_selection_csv(model.selection, out / "prognostic_selection.csv"))
    if args.save_model:
        if model is None:
            raise ConfigError("--save-model needs --historical")
        save_model(model, args.save_model)

    datasets = {"plain": trial}
    if model is not None:
        r = score_trial(model, trial)
        datasets["prog"] = augment(trial, r)
        outputs.append(_write_rows(out / "score_correlation.csv", ("arm", "n", "correlation"),
                                   score_correlations(trial, r)))
    else:
        skipped = [e for e in ests if e.endswith("_prog")]
        if skipped:
            print(f"notice: no historical data or model given; skipping {', '.join(skipped)}",
                  file=sys.stderr)
        ests = tuple(e for e in ests if not e.endswith("_prog"))

    cf_seed = derive_seed(args.seed, "crossfit")
    crossfits = {}
    reports = []
    for est in ests:
        family, _, variant = est.partition("_")
        key = variant or "plain"
        data = datasets[key]
        if family == "unadjusted":
            reports.append(estimate_unadjusted(data, args.alpha, est))
        elif family == "ancova":
            reports.append(estimate_ancova_hc3(data, args.alpha, est))
        else:
            if key not in crossfits:
                crossfits[key] = crossfit_outcome_regressions(data, sl.with_seed(cf_seed),
                                                              args.folds)
            fn = estimate_tmle if family == "tmle" else estimate_aipw
            reports.append(fn(data, crossfit=crossfits[key], alpha=args.alpha,
                              estimator_id=est))
    outputs.append(_write_rows(out / "estimates.csv", REPORT_COLUMNS,
                               [r.row() for r in reports]))
    cfg = {"trial": str(args.trial), "historical": args.historical and str(args.historical),
           "model": args.model and str(args.model), "outcome": args.outcome,
           "treatment": args.treatment, "pi1": args.pi1, "estimators": list(ests),
           "profile": args.profile, "folds": args.folds, "alpha": args.alpha}
    digest = hashlib.sha256(json.dumps(cfg, sort_keys=True).encode()).hexdigest()
    _write_manifest(out, "analyze", {"config": cfg}, digest, args.seed, started, outputs)
    for r in reports:
        print(f"{r.estimator_id:>12s}  {r.psi_hat: .4f}  se {r.se_hat:.4f}  "
              f"[{r.ci_low: .4f}, {r.ci_high: .4f}]  p={r.p_value:.3g}")
    return 0


def _selection_csv(report, path: Path) -> Path:
    report.to_csv(path)
    return path


# --- report ---------------------------------------------------------------

def cmd_report(args) -> int:
    from .report import load_metrics, write_plots, write_tables
    rows = load_metrics(args.inputs)
    out = _out_dir(args.out)
    written = write_tables(rows, out)
    if args.plots:
        written += write_plots(rows, out)
    for p in written:
        print(p)
    return 0


# --- entry point ----------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="progadjust", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run Monte Carlo scenarios")
    s.add_argument("--config", type=Path, help="TOML scenario file")
    s.add_argument("--preset", help="built-in scenario grid, e.g. het_base")
    s.add_argument("--out", type=Path, required=True)
    s.add_argument("--profile", choices=PROFILES, help="override the learner library")
    s.add_argument("--workers", type=int, default=None,
                   help="parallel processes (default: all CPUs)")
    s.add_argument("--reps", type=int, help="override the number of reps")
    s.add_argument("--seed", type=int, help="override the master seed")
    s.set_defaults(func=cmd_simulate)

    a = sub.add_parser("analyze", help="estimate the ATE of a trial CSV")
    a.add_argument("--trial", type=Path, required=True)
    src = a.add_mutually_exclusive_group()
    src.add_argument("--historical", type=Path, help="historical controls CSV")
    src.add_argument("--model", type=Path, help="saved prognostic model (JSON)")
    a.add_argument("--outcome", required=True)
    a.add_argument("--treatment", required=True)
    a.add_argument("--pi1", type=float, default=0.5)
    a.add_argument("--out", type=Path, required=True)
    a.add_argument("--estimators", help=f"comma list from {','.join(ANALYZE_ESTIMATORS)}")
    a.add_argument("--profile", choices=PROFILES, default="fast")
    a.add_argument("--folds", type=int, default=5, help="cross-fitting folds")
    a.add_argument("--alpha", type=float, default=0.05)
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--save-model", type=Path, help="export the fitted prognostic model")
    a.set_defaults(func=cmd_analyze)

    r = sub.add_parser("report", help="tables and charts from simulation output")
    r.add_argument("--in", dest="inputs", type=Path, action="append", required=True,
                   help="output directory or metrics CSV (repeatable)")
    r.add_argument("--out", type=Path, required=True)
    r.add_argument("--plots", action="store_true", help="also write SVG charts")
    r.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ProgAdjustError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
