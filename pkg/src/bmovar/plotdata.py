"""CSV export of report series for external plotting."""
from __future__ import annotations

import csv
from pathlib import Path

from .experiments import RunReport

# columns of every series each experiment may emit
SERIES_SCHEMAS: dict[str, dict[str, list[str]]] = {
    "kernel-bounds": {
        "derivative_constants": ["estimate", "resolution", "constant"],
        "kernel_window_sweep": ["M", "size_constant", "gradient_constant"],
        "tail_bound": ["m", "constant"],
    },
    "bmo-lemma": {"bmo_structure": ["function", "per_octave", "quantity", "m", "constant"]},
    "l2-bound": {
        "multiplier_integral": ["xi", "coarse", "fine"],
        "l2_ratio": ["instance", "window_halfwidth", "ratio"],
    },
    "lp-sweep": {"lp_ratio": ["function", "operator", "p", "P", "ratio"]},
    "cotlar": {"cotlar_ratio": ["function", "M", "x_index", "ratio"]},
    "oracle-suite": {"oracle_checks": ["check", "instances", "max_error"]},
}
for _name in ("bmo-blo-osc", "bmo-blo-var", "bmo-blo-maxdiff"):
    SERIES_SCHEMAS[_name] = {
        "ratio_vs_P": ["function", "operator", "P", "ratio"],
        "operator_slice": ["function", "operator", "x", "value"],
    }


def emit_plot_data(report: RunReport, outdir: str | Path) -> list[Path]:
    """Write one CSV per declared series; series without rows give header-only files.

    ``ratio_vs_P`` is additionally split into one file per test function.
    I/O errors propagate unchanged.
    """
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    schemas = dict(SERIES_SCHEMAS.get(report.experiment, {}))
    for name, s in report.series.items():
        schemas.setdefault(name, s["columns"])
    written = []
    for name, columns in schemas.items():
        rows = report.series.get(name, {}).get("rows", [])
        written.append(_write(outdir / f"{name}.csv", columns, rows))
        if name == "ratio_vs_P":
            by_fn: dict[str, list] = {}
            for row in rows:
                by_fn.setdefault(row[0], []).append(row)
            for fn, fn_rows in by_fn.items():
                written.append(_write(outdir / f"ratio_vs_P_{_safe(fn)}.csv", columns, fn_rows))
    return written


def _safe(name: str) -> str:
    return "".join(ch if ch.isalnum() or ch in "-_" else "_" for ch in name)


def _write(path: Path, columns: list[str], rows: list) -> Path:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        w.writerows(rows)
    return path
