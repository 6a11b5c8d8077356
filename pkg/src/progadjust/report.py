"""Tables and static SVG charts from simulation output.

Everything here is a pure function of the input CSVs.
"""
from __future__ import annotations

import json
from collections import defaultdict
from pathlib import Path

from .errors import SchemaError
from .simulation.dgp import DgpSpec, true_ate
from .simulation.io import (
    METRICS_COLUMNS,
    metrics_rows,
    read_metrics_csv,
    read_raw_csv,
)
from .simulation.metrics import aggregate
from .simulation.presets import FIG1_SIZES, SHIFT_ORDER

# (row label, column label) -> estimator id, in the Table 1/2 layout
GRID_ROWS = ("oracle", "fit", "none")
GRID_COLS = ("TMLE", "linear", "unadjusted")
_GRID = {("oracle", "TMLE"): "tmle_oracle", ("fit", "TMLE"): "tmle_prog",
         ("none", "TMLE"): "tmle", ("oracle", "linear"): "ancova_oracle",
         ("fit", "linear"): "ancova_prog", ("none", "linear"): "ancova",
         ("none", "unadjusted"): "unadjusted"}
TABLE5_FIELDS = ("bias", "var", "se_bias", "se_var", "rmse", "power", "coverage")


def _metrics_from_raw(directory: Path) -> list[dict]:
    manifest = directory / "manifest.json"
    if not manifest.is_file():
        raise SchemaError(f"{directory}: raw.csv needs manifest.json for scenario details")
    scenarios = {s["scenario_id"]: s for s in json.loads(manifest.read_text())["scenarios"]}
    raw = read_raw_csv(directory / "raw.csv")
    by_sid = defaultdict(list)
    for r in raw:
        by_sid[r["scenario_id"]].append(r)
    rows = []
    for sid, sc_rows in by_sid.items():
        if sid not in scenarios:
            raise SchemaError(f"scenario {sid!r} missing from manifest")
        sc = scenarios[sid]
        psi = true_ate(DgpSpec(sc["effect_kind"]))
        rows += metrics_rows(aggregate(sc_rows, psi, sc["alpha"], min_reps=1),
                             {**sc, "scenario_id": sid})
    return rows


def load_metrics(paths) -> list[dict]:
    """Metric rows from metrics CSVs or simulation output directories."""
    rows = []
    for p in map(Path, paths):
        if p.is_dir():
            if (p / "metrics.csv").is_file():
                rows += read_metrics_csv(p / "metrics.csv")
            elif (p / "raw.csv").is_file():
                rows += _metrics_from_raw(p)
            else:
                raise SchemaError(f"{p} holds neither metrics.csv nor raw.csv")
        else:
            rows += read_metrics_csv(p)
    if not rows:
        raise SchemaError("no metric rows found")
    return rows


def _by_scenario(rows) -> dict[str, dict[str, dict]]:
    out: dict[str, dict[str, dict]] = {}
    for r in rows:
        out.setdefault(r["scenario_id"], {})[r["estimator_id"]] = r
    return out


def pair_cell(a: float, b: float, digits: int = 3) -> str:
    return f"{a:.{digits}f} ({b:.{digits}f})"


def grid_table(metrics: dict[str, dict], first: str, second: str) -> list[list[str]]:
    """Table 1 (bias, var) or Table 2 (se_bias, se_var) layout for one scenario."""
    table = [["Prognostic Score", *GRID_COLS]]
    for row in GRID_ROWS:
        cells = [row]
        for col in GRID_COLS:
            est = _GRID.get((row, col))
            m = metrics.get(est) if est else None
            cells.append(pair_cell(m[first], m[second]) if m else "-")
        table.append(cells)
    return table


def table5(rows) -> list[list[str]]:
    out = [["scenario_id", "estimator_id", *TABLE5_FIELDS]]
    for r in rows:
        out.append([r["scenario_id"], r["estimator_id"],
                    *(f"{r[f]:.3f}" for f in TABLE5_FIELDS)])
    return out


def _markdown(table: list[list[str]]) -> str:
    head, *body = table
    lines = ["| " + " | ".join(head) + " |", "|" + "---|" * len(head)]
    lines += ["| " + " | ".join(r) + " |" for r in body]
    return "\n".join(lines) + "\n"


def _write_tsv(table, path: Path) -> Path:
    path.write_text("".join("\t".join(r) + "\n" for r in table))
    return path


def write_tables(rows, out_dir) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = [_write_tsv(table5(rows), out_dir / "table5.tsv")]
    md = ["# Simulation summary\n"]
    for sid, metrics in _by_scenario(rows).items():
        t1 = grid_table(metrics, "bias", "var")
        t2 = grid_table(metrics, "se_bias", "se_var")
        written.append(_write_tsv(t1, out_dir / f"table1_{sid}.tsv"))
        written.append(_write_tsv(t2, out_dir / f"table2_{sid}.tsv"))
        md += [f"\n## {sid}\n", "\nPoint estimate: bias (variance)\n\n", _markdown(t1),
               "\nEstimated standard error: bias (variance)\n\n", _markdown(t2)]
    md += ["\n## All scenarios\n\n", _markdown(table5(rows))]
    path = out_dir / "report.md"
    path.write_text("".join(md))
    written.append(path)
    return written


# --- charts ---------------------------------------------------------------

def _series(rows, key, value):
    """estimator -> sorted [(x, y)] over the given rows."""
    out = defaultdict(list)
    for r in rows:
        out[r["estimator_id"]].append((key(r), value(r)))
    return {e: sorted(pts) for e, pts in out.items()}


def _baseline(r, n=None, n_hist=None):
    return (r["effect_kind"] == "heterogeneous" and r["shift"] == "none"
            and (n is None or r["n"] == n) and (n_hist is None or r["n_hist"] == n_hist))


def chart_data(rows) -> dict[str, dict]:
    """Series for each chart that the input rows can support (>= 2 x values)."""
    charts = {}
    a = [r for r in rows if _baseline(r, n=250) and r["n_hist"] in FIG1_SIZES]
    b = [r for r in rows if _baseline(r, n_hist=1000) and r["n"] in FIG1_SIZES]
    c = [r for r in rows if r["n_hist"] == r["n"] ** 2]
    d = [r for r in rows if r["n"] == 250 and r["n_hist"] == 1000
         and r["effect_kind"] == "heterogeneous"]
    specs = [
        ("fig1a", a, "historical sample size", "mean estimated SE",
         lambda r: r["n_hist"], lambda r: r["mean_se"]),
        ("fig1b", b, "trial sample size", "mean estimated SE",
         lambda r: r["n"], lambda r: r["mean_se"]),
        ("fig2", c, "trial sample size n (historical = n^2)", "n x variance of estimated SE",
         lambda r: r["n"], lambda r: r["n"] * r["se_var"]),
    ]
    for name, sub, xl, yl, key, val in specs:
        if len({key(r) for r in sub}) >= 2:
            charts[name] = {"xlabel": xl, "ylabel": yl, "series": _series(sub, key, val)}
    panels = {}
    for label, kinds in (("observed", ("none", "observed_small", "observed_large")),
                         ("unobserved", ("none", "unobserved_small", "unobserved_large"))):
        sub = [r for r in d if r["shift"] in kinds]
        if len({r["shift"] for r in sub}) >= 2:
            panels[label] = _series(sub, lambda r: SHIFT_ORDER.index(r["shift"]),
                                    lambda r: r["mean_se"])
    if panels:
        charts["fig3"] = {"xlabel": "shift magnitude", "ylabel": "mean estimated SE",
                          "panels": panels}
    return charts


def _plot_series(ax, series):
    for est, pts in series.items():
        xs, ys = zip(*pts)
        ax.plot(xs, ys, marker="o", label=est)


def write_plots(rows, out_dir) -> list[Path]:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "progadjust"
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for name, ch in chart_data(rows).items():
        if "panels" in ch:
            fig, axes = plt.subplots(1, len(ch["panels"]), figsize=(5 * len(ch["panels"]), 4),
                                     squeeze=False)
            for ax, (label, series) in zip(axes[0], ch["panels"].items()):
                _plot_series(ax, series)
                ticks = sorted({x for pts in series.values() for x, _ in pts})
                ax.set_xticks(ticks)
                ax.set_xticklabels([SHIFT_ORDER[t].replace("_", " ") for t in ticks])
                ax.set_title(f"{label} shift")
                ax.set_xlabel(ch["xlabel"])
                ax.set_ylabel(ch["ylabel"])
            axes[0][-1].legend(fontsize="small")
        else:
            fig, ax = plt.subplots(figsize=(6, 4))
            _plot_series(ax, ch["series"])
            ax.set_xlabel(ch["xlabel"])
            ax.set_ylabel(ch["ylabel"])
            ax.legend(fontsize="small")
        fig.tight_layout()
        path = out_dir / f"{name}.svg"
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
        written.append(path)
    return written


__all__ = ["METRICS_COLUMNS", "chart_data", "grid_table", "load_metrics", "pair_cell",
           "table5", "write_plots", "write_tables"]
