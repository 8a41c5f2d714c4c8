"""Command-line entry point: ``twinmz {run,calibrate,weakvalue,modular,figure2}``.

Exit codes: 0 success, 1 a run completed but failed its checks, 2 usage or
input error.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import modular as mod
from .analysis import (
    NoCrossingError,
    WindowTooNarrowError,
    fit_calibration,
    run_calibration_sweep,
    run_pipeline,
    to_frame,
    Frame,
)
from .config import ConfigError, RunConfig, load_config
from .pathspace import (
    OrthogonalSelectionError,
    PathState,
    Plane,
    ProjectorObservable,
    class_selection,
    weak_value,
)
from .pointerlab import (
    EmptyPortError,
    network_report,
    postselect_at,
    prepare,
    validity_check,
    weak_prediction,
)
from .report import ReportError, _clean, figure_from_sets, framed_csv, read_framed_csv, write_bundle, emit_report


class CliError(Exception):
    pass


def _emit(payload: dict, as_json: bool, lines: list[str]):
    if as_json:
        print(json.dumps(_clean(payload), indent=2, allow_nan=False))
    else:
        for line in lines:
            print(line)


def _load(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if args.out is not None:
        cfg = replace(cfg, output_dir=args.out)
    return cfg


def _echo(cfg: RunConfig) -> dict:
    d = cfg.to_dict()
    d.pop("output_dir")
    return d


def cmd_run(args) -> int:
    cfg = _load(args)
    try:
        result = run_pipeline(
            cfg.stage,
            cfg.effective_camera(),
            cfg.sigma,
            cfg.fidelity,
            cfg.network,
            presets=cfg.analysis.presets,
            window=cfg.analysis.window_um,
            margin=cfg.analysis.margin,
            threshold=cfg.analysis.excited_threshold,
        )
    except (NoCrossingError, WindowTooNarrowError) as exc:
        print(f"error: analysis failed: {exc}", file=sys.stderr)
        return 1
    summary = emit_report(result, cfg.output_dir, _echo(cfg))
    ext = summary["extraction"]["N_hat"]
    _emit(
        summary,
        args.json,
        [
            f"calibration slope  {summary['calibration']['slope_px_per_um']:.5f} px/um "
            f"(recorded {summary['calibration']['recorded_slope_px_per_um']})",
            f"crossing           x0 = {summary['frame']['x0_um']:.4f} um (configured {cfg.stage.x_zero:g})",
            f"extracted N_hat    0: {ext['0']:.4f}  1: {ext['1']:.4f}  2: {ext['2']:.4f}",
            f"ordering N0<N2<N1  {'pass' if summary['extraction']['ordering_ok'] else 'FAIL'}",
            f"checks             {'all passed' if summary['passed'] else 'FAILED: ' + ', '.join(k for k, v in summary['checks'].items() if not v)}",
            f"outputs            {cfg.output_dir}",
        ],
    )
    return 0 if summary["passed"] else 1


def cmd_calibrate(args) -> int:
    cfg = _load(args)
    cam = cfg.effective_camera()
    ds = run_calibration_sweep(cfg.stage, cam, cfg.sigma, cfg.network)
    fit = fit_calibration(ds, cam.pitch)
    frame = Frame(cfg.stage.x_zero, fit.slope * cfg.stage.x_zero + fit.intercept)
    payload = {
        "schema": 1,
        "config": _echo(cfg),
        "calibration": {
            "slope_px_per_um": fit.slope,
            "intercept_px": fit.intercept,
            "residual_rms_px": fit.residual_rms,
            "gain_estimate": fit.gain_estimate,
        },
    }
    write_bundle(
        Path(cfg.output_dir),
        {
            "s3.csv": framed_csv(to_frame(ds, frame, cam.pitch)),
            "calibration.json": json.dumps(_clean(payload), indent=2, allow_nan=False) + "\n",
        },
    )
    _emit(
        payload,
        args.json,
        [f"slope {fit.slope:.5f} px/um, gain estimate {fit.gain_estimate:.4f}, rms {fit.residual_rms:.3g} px"],
    )
    return 0


def _parse_post(values) -> PathState:
    try:
        amps = [complex(v.replace(" ", "")) for v in values]
    except ValueError as exc:
        raise CliError(f"--post: {exc}") from exc
    return PathState(Plane.PLANE2, amps)


def cmd_weakvalue(args) -> int:
    net, pre, post = class_selection(args.class_id)
    if args.post is not None:
        post = _parse_post(args.post)
    obs = ProjectorObservable.on(args.observable)
    aw = weak_value(pre, post, obs)
    moments = {m: weak_value(pre, post, obs, m) for m in (2, 3, 4)}
    if args.post is None:
        report = network_report(net, pre, args.gamma, args.sigma)
    else:
        report = postselect_at(prepare(pre, args.gamma, args.sigma), post)
    validity = validity_check(args.gamma, args.sigma, [(aw, moments)], args.margin)
    payload = {
        "class_id": args.class_id,
        "observable": args.observable,
        "gamma_um": args.gamma,
        "sigma_um": args.sigma,
        "weak_value": {"re": aw.real, "im": aw.imag},
        "weak_prediction_um": weak_prediction(args.gamma, aw),
        "centroid_um": report.centroid,
        "probability": report.probability,
        "validity": {
            "is_weak": validity.is_weak,
            "raw_bound_um": validity.raw_bound,
            "window_um": validity.window,
            "margin": validity.margin,
        },
    }
    _emit(
        payload,
        args.json,
        [
            f"class {args.class_id}  gamma = {args.gamma:g} um  sigma = {args.sigma:g} um",
            f"weak value  {args.observable}: {aw.real:.12g}{aw.imag:+.3g}i",
            f"centroid    {report.centroid:.9g} um (weak prediction {weak_prediction(args.gamma, aw):.9g})",
            f"probability {report.probability:.9g}",
            f"weak regime {'yes' if validity.is_weak else 'no'} (|gamma| <= {validity.window:g} um; raw bound {validity.raw_bound:g} um)",
        ],
    )
    return 0


def _modular_state(args):
    if args.single_packet:
        return mod.make_single_packet(args.ell, args.sigma, n=args.n)
    return mod.make_two_slit_state(args.ell, args.sigma, args.alpha, n=args.n, allow_overlap=args.allow_overlap)


def cmd_modular(args) -> int:
    state = _modular_state(args)
    params = {
        "ell": args.ell,
        "sigma": args.sigma,
        "alpha": None if args.single_packet else args.alpha,
        "single_packet": args.single_packet,
        "n": args.n,
        "length": state.packet.length,
    }
    out = Path(args.out) if args.out else None
    sub = args.modular_cmd
    if sub == "expectation":
        d = args.ell if args.distance is None else args.distance
        t = mod.translate_expectation(state, d, args.power)
        payload = {"params": params, "distance": d, "n": args.power, "re": t.real, "im": t.imag, "abs": abs(t), "arg": float(np.angle(t))}
        lines = [f"<T^{args.power}> at distance {d:g}: {t.real:.12g}{t.imag:+.12g}i  |.| = {abs(t):.6g}  arg = {np.angle(t):.6g} rad"]
    elif sub == "uncertainty":
        rep = mod.complete_uncertainty_check(state, args.ell, args.n_max, args.eps, args.bins)
        payload = {
            "params": params,
            "is_completely_uncertain": rep.is_completely_uncertain,
            "max_overlap": rep.max_overlap,
            "max_uniformity_deviation": rep.max_uniformity_deviation,
            "overlaps": list(rep.overlaps),
            "eps": args.eps,
        }
        lines = [
            f"completely uncertain: {rep.is_completely_uncertain}",
            f"max |<T^n>| (n <= {args.n_max}): {rep.max_overlap:.3g}",
            f"max uniformity deviation: {rep.max_uniformity_deviation:.3g}",
        ]
    elif sub == "distribution":
        dist = mod.modular_distribution(state, args.ell, args.bins)
        payload = {"params": params, "bins": args.bins, "masses": dist.masses.tolist(), "uniformity_deviation": dist.uniformity_deviation()}
        lines = [f"{args.bins} bins over [0, {dist.period:.6g}); max deviation from uniform {dist.uniformity_deviation():.3g}"]
        if out:
            out.mkdir(parents=True, exist_ok=True)
            mod.write_distribution_csv(out / "modular_distribution.csv", dist, params)
    else:  # screen
        packet = state
        if args.close:
            packet = mod.close_slit(state, args.close)
            params["closed"] = args.close
        x, dens = mod.screen_pattern(packet, args.t)
        params["t"] = args.t
        payload = {"params": params, "mass": float(np.sum(dens) * (x[1] - x[0]))}
        lines = [f"screen pattern at t = {args.t:g}: total mass {payload['mass']:.12g}"]
        if out:
            out.mkdir(parents=True, exist_ok=True)
            mod.write_density_csv(out / "screen_pattern.csv", x, dens, params)
    if out:
        out.mkdir(parents=True, exist_ok=True)
        (out / f"modular_{sub}.json").write_text(json.dumps(_clean(payload), indent=2, allow_nan=False) + "\n")
    _emit(payload, args.json, lines)
    return 0


def cmd_figure2(args) -> int:
    src = Path(args.input)
    framed = {i: read_framed_csv(src / f"s{i}.csv") for i in (0, 1, 2)}
    gain, sigma = args.gain, args.sigma
    report = src / "report.json"
    if report.exists() and (gain is None or sigma is None):
        data = json.loads(report.read_text())
        gain = gain if gain is not None else data["config"]["stage"]["gain"]
        sigma = sigma if sigma is not None else data["config"]["pointer"]["sigma"]
    gain = 1.5 if gain is None else gain
    sigma = 150.0 if sigma is None else sigma
    svg = figure_from_sets(framed, gain, 2 * sigma / gain)
    dest = Path(args.out) if args.out else src / "figure2.svg"
    dest.parent.mkdir(parents=True, exist_ok=True)
    dest.write_text(svg)
    print(dest)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="twinmz", description="Twin Mach-Zehnder weak-measurement simulator")
    sub = p.add_subparsers(dest="cmd", required=True)

    def common(sp, out_default=None):
        sp.add_argument("--config", help="JSON run configuration")
        sp.add_argument("--seed", type=int, default=None, help="noise seed (overrides the config)")
        sp.add_argument("--out", default=out_default, help="output directory (overrides the config)")
        sp.add_argument("--json", action="store_true", help="machine-readable output")

    sp = sub.add_parser("run", help="calibration + three class sweeps + reduction + report")
    common(sp)
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("calibrate", help="calibration sweep only")
    common(sp)
    sp.set_defaults(func=cmd_calibrate)

    sp = sub.add_parser("weakvalue", help="weak value, pointer centroid and validity for one class")
    sp.add_argument("--class", dest="class_id", type=int, choices=(0, 1, 2), required=True)
    sp.add_argument("--gamma", type=float, required=True, help="coupling strength in um")
    sp.add_argument("--sigma", type=float, default=150.0, help="pointer width in um")
    sp.add_argument("--margin", type=float, default=5.0)
    sp.add_argument("--observable", default="L2", choices=("L2", "R2"))
    sp.add_argument("--post", nargs=2, metavar=("AMP_L2", "AMP_R2"), help="override the post-selected state at plane 2 (complex, e.g. 1 1j)")
    sp.add_argument("--json", action="store_true")
    sp.set_defaults(func=cmd_weakvalue)

    sp = sub.add_parser("modular", help="modular momentum demonstrations")
    msub = sp.add_subparsers(dest="modular_cmd", required=True)
    for name in ("expectation", "uncertainty", "distribution", "screen"):
        m = msub.add_parser(name)
        m.add_argument("--ell", type=float, default=mod.DEFAULT_ELL)
        m.add_argument("--sigma", type=float, default=mod.DEFAULT_SIGMA)
        m.add_argument("--alpha", type=float, default=0.0)
        m.add_argument("--n", type=int, default=mod.DEFAULT_N, help="grid size (power of two)")
        m.add_argument("--single-packet", action="store_true", help="right slit only")
        m.add_argument("--allow-overlap", action="store_true")
        m.add_argument("--bins", type=int, default=mod.DEFAULT_BINS)
        m.add_argument("--out", default=None)
        m.add_argument("--json", action="store_true")
        if name == "expectation":
            m.add_argument("--distance", type=float, default=None, help="translation distance (default ell)")
            m.add_argument("--power", type=int, default=1, help="power n of the translation")
        if name == "uncertainty":
            m.add_argument("--n-max", type=int, default=8)
            m.add_argument("--eps", type=float, default=mod.DEFAULT_EPS)
        if name == "screen":
            m.add_argument("--t", type=float, default=40.0)
            m.add_argument("--close", choices=("left", "right"), default=None)
    sp.set_defaults(func=cmd_modular)

    sp = sub.add_parser("figure2", help="redraw figure2.svg from existing CSVs")
    sp.add_argument("--in", dest="input", required=True, help="directory holding s0.csv..s2.csv")
    sp.add_argument("--out", default=None, help="SVG path (default <in>/figure2.svg)")
    sp.add_argument("--gain", type=float, default=None)
    sp.add_argument("--sigma", type=float, default=None)
    sp.set_defaults(func=cmd_figure2)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (
        ConfigError,
        OrthogonalSelectionError,
        EmptyPortError,
        ReportError,
        CliError,
        mod.DomainError,
        mod.EmptyProjectionError,
        FileNotFoundError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
