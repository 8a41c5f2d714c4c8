"""Report bundle: framed CSVs, a JSON summary and the displacement-vs-stage SVG figure."""
from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import numpy as np

from .analysis import RECORDED_CALIBRATION_SLOPE, THEORY_WEAK_VALUES, ExperimentResult, FramedSet
from .figure import figure2_svg

SCHEMA = 1
CSV_COLUMNS = ("class_id", "x_um", "x_prime_um", "y_bar_px", "displacement_um")

# pass/fail tolerances applied to every run
SLOPE_REL_TOL = 0.05
WEAK_VALUE_TOL = 0.05
CROSSING_TOL_UM = 5.0


class ReportError(OSError):
    pass


def _clean(obj):
    """Replace non-finite floats with None so the JSON stays strict."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def framed_csv(fs: FramedSet) -> str:
    buf = io.StringIO()
    buf.write(",".join(CSV_COLUMNS) + "\n")
    for cid, x, xp, y, d in fs.rows():
        buf.write(f"{cid},{x!r},{xp!r},{y!r},{d!r}\n")
    return buf.getvalue()


def read_framed_csv(path) -> FramedSet:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ReportError(f"{path}: no data rows")
    missing = set(CSV_COLUMNS) - set(rows[0])
    if missing:
        raise ReportError(f"{path}: missing columns {sorted(missing)}")
    col = {k: np.array([float(r[k]) for r in rows]) for k in CSV_COLUMNS[1:]}
    return FramedSet(int(rows[0]["class_id"]), col["x_um"], col["x_prime_um"], col["y_bar_px"], col["displacement_um"])


def summarize(result: ExperimentResult, config_echo: dict | None = None) -> dict:
    ext = result.extraction
    cal = result.calibration
    n_hat = {str(k): v for k, v in sorted(ext.values.items())}
    crossing_err = result.frame.x0 - result.stage.x_zero
    checks = {
        "ordering": bool(ext.ordering_ok),
        "weak_values_within_tol": all(abs(ext.values[i] - THEORY_WEAK_VALUES[i]) <= WEAK_VALUE_TOL for i in (0, 1, 2)),
        "calibration_slope_within_tol": abs(cal.slope / RECORDED_CALIBRATION_SLOPE - 1) <= SLOPE_REL_TOL,
        "crossing_within_tol": abs(crossing_err) <= CROSSING_TOL_UM,
    }
    return {
        "schema": SCHEMA,
        "config": config_echo,
        "theory": {"N_w": {str(k): v for k, v in sorted(result.theory.items())}},
        "calibration": {
            "slope_px_per_um": cal.slope,
            "intercept_px": cal.intercept,
            "residual_rms_px": cal.residual_rms,
            "gain_estimate": cal.gain_estimate,
            "expected_slope_px_per_um": -result.stage.gain / result.camera.pitch,
            "recorded_slope_px_per_um": RECORDED_CALIBRATION_SLOPE,
        },
        "frame": {
            "x0_um": result.frame.x0,
            "y0_px": result.frame.y0,
            "x_zero_configured_um": result.stage.x_zero,
            "crossing_error_um": crossing_err,
        },
        "bounds": {
            "gamma_raw_um": 2 * result.sigma,
            "x_prime_raw_um": result.bound.raw,
            "x_prime_margin_window_um": result.bound.window,
            "margin": result.bound.margin,
        },
        "extraction": {
            "window_um": ext.window,
            "N_hat": n_hat,
            "intercepts_um": {str(k): v for k, v in sorted(ext.intercepts.items())},
            "residual_rms_um": {str(k): v for k, v in sorted(ext.residuals.items())},
            "points_in_window": {str(k): v for k, v in sorted(ext.counts.items())},
            "ordering_ok": bool(ext.ordering_ok),
        },
        "excitation": {"class2_over_class1": result.excitation_ratio},
        "checks": checks,
        "passed": all(checks.values()),
    }


def figure_from_sets(framed: dict, gain: float, bound_x: float, weak_values=None) -> str:
    wv = THEORY_WEAK_VALUES if weak_values is None else weak_values
    series = {i: (framed[i].x_prime, framed[i].displacement) for i in (0, 1, 2) if i in framed}
    return figure2_svg(series, gain, wv, bound_x)


def emit_report(result: ExperimentResult, out_dir, config_echo: dict | None = None) -> dict:
    """Write s0..s3.csv, report.json and figure2.svg into ``out_dir``.

    Every file is rendered in memory first; if writing fails midway the files
    already written by this call are removed.
    """
    out = Path(out_dir)
    summary = summarize(result, config_echo)
    files = {f"s{i}.csv": framed_csv(result.framed[i]) for i in sorted(result.framed)}
    files["report.json"] = json.dumps(_clean(summary), indent=2, allow_nan=False) + "\n"
    files["figure2.svg"] = figure_from_sets(result.framed, result.stage.gain, result.bound.raw, result.theory)
    write_bundle(out, files)
    return summary


def write_bundle(out: Path, files: dict) -> None:
    written = []
    try:
        out.mkdir(parents=True, exist_ok=True)
        for name, text in files.items():
            path = out / name
            with open(path, "w", newline="") as fh:
                fh.write(text)
            written.append(path)
    except OSError as exc:
        for path in written:
            path.unlink(missing_ok=True)
        raise ReportError(f"could not write {getattr(exc, 'filename', None) or out}: {exc.strerror or exc}") from exc
