import json
import re

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from twinmz.analysis import (
    RECORDED_CALIBRATION_SLOPE,
    DataSet,
    Frame,
    MeasurementPair,
    NoCrossingError,
    StageConfig,
    WindowTooNarrowError,
    estimate_crossing,
    estimate_crossing_lsq,
    extract_weak_values,
    fit_calibration,
    from_frame,
    ideal_lines,
    ordering_holds,
    run_calibration_sweep,
    run_class_sweep,
    run_pipeline,
    strong_regime_slope,
    to_frame,
    weak_regime_bound,
)
from twinmz.camera import CameraConfig, NoiseConfig
from twinmz.pointerlab import FidelityMode
from twinmz.report import emit_report, figure_from_sets, read_framed_csv

STAGE = StageConfig()
ANALOG = CameraConfig(quantize=False)


@pytest.fixture(scope="module")
def analog_result():
    return run_pipeline(STAGE, ANALOG)


def line_set(cid, xs, m, c):
    return DataSet(cid, [MeasurementPair(x, m * x + c) for x in xs])


def test_stage_defaults():
    xs = np.array(STAGE.positions)
    assert len(xs) == 14 and np.allclose(np.diff(xs), 100.0)
    assert xs[7] - STAGE.x_zero == pytest.approx(37.0)
    assert STAGE.gamma(STAGE.x_zero) == 0.0
    with pytest.raises(ValueError):
        StageConfig(positions=(0, 0))


def test_calibration_slope_noiseless():
    fit = fit_calibration(run_calibration_sweep(STAGE, ANALOG), ANALOG.pitch)
    assert fit.slope == pytest.approx(-STAGE.gain / ANALOG.pitch, abs=1e-9)
    assert fit.gain_estimate == pytest.approx(STAGE.gain, abs=1e-8)
    quant = fit_calibration(run_calibration_sweep(STAGE, CameraConfig()), 7.4)
    assert quant.slope == pytest.approx(-0.2027, abs=5e-4)
    assert abs(quant.slope / RECORDED_CALIBRATION_SLOPE - 1) <= 0.05
    assert quant.gain_estimate == pytest.approx(STAGE.gain, rel=0.03)


@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(-100, 100), st.floats(-100, 100))
def test_crossing_of_exact_lines(m1, m2, c1, c2):
    if abs(m1 - m2) < 1e-3:
        return
    xs = np.arange(8) * 10.0
    f = estimate_crossing(line_set(1, xs, m1, c1), line_set(2, xs, m2, c2))
    x0 = (c2 - c1) / (m1 - m2)
    assert f.x0 == pytest.approx(x0, rel=1e-8, abs=1e-8)
    assert f.y0 == pytest.approx(m1 * x0 + c1, rel=1e-8, abs=1e-6)
    g = estimate_crossing_lsq(line_set(1, xs, m1, c1), line_set(2, xs, m2, c2))
    assert g.x0 == pytest.approx(x0, rel=1e-6, abs=1e-6)


def test_parallel_lines_have_no_crossing():
    xs = np.arange(6.0)
    with pytest.raises(NoCrossingError):
        estimate_crossing(line_set(1, xs, 2, 0), line_set(2, xs, 2, 1))


def test_mismatched_abscissas_rejected():
    with pytest.raises(ValueError):
        estimate_crossing(line_set(1, np.arange(6.0), 1, 0), line_set(2, np.arange(6.0) + 1, 2, 0))


def test_noiseless_crossing(analog_result):
    assert abs(analog_result.frame.x0 - STAGE.x_zero) < 1e-6


def test_frame_round_trip():
    ds = line_set(2, np.arange(10) * 7.0, -0.1, 300.0)
    fr = Frame(12.5, 301.0)
    back = from_frame(to_frame(ds, fr, 7.4), fr, 7.4)
    assert np.allclose(back.x, ds.x) and np.allclose(back.y, ds.y)


def test_ideal_lines():
    lines = ideal_lines(1.5)
    assert lines[1](100.0) == pytest.approx(-150.0)
    assert lines[2](100.0) == pytest.approx(-75.0)
    assert lines[0](100.0) == 0.0


def test_regime_bounds():
    b = weak_regime_bound(150, 1.5)
    assert b.raw == 200.0
    assert weak_regime_bound(150, 3.0).raw == 100.0
    assert b.window == 40.0


def test_extraction_noiseless(analog_result):
    ext = analog_result.extraction
    for i, target in {0: 0.0, 1: 1.0, 2: 0.5}.items():
        assert ext.values[i] == pytest.approx(target, abs=1e-6)
    assert ext.ordering_ok


def test_extraction_window_too_narrow(analog_result):
    with pytest.raises(WindowTooNarrowError):
        extract_weak_values(analog_result.framed, 1.5, 40.0)


def test_identical_classes_fail_ordering():
    res = run_pipeline(STAGE, ANALOG, presets=(1, 1, 2))
    assert not res.extraction.ordering_ok
    assert not ordering_holds({0: 0.5, 1: 1.0, 2: 0.5})


def test_bias_injection_and_removal(analog_result, inject_bias):
    fs = analog_result.framed[0]
    biased = inject_bias(fs, 90.0)
    assert np.allclose(biased.displacement - fs.displacement, 90.0)
    sets = dict(analog_result.framed)
    sets[0] = biased
    # a constant offset moves the intercept, not the slope
    ext = extract_weak_values(sets, 1.5, 200.0)
    assert ext.values[0] == pytest.approx(0.0, abs=1e-6)
    assert ext.intercepts[0] == pytest.approx(90.0, abs=1e-6)
    restored = inject_bias(biased, -90.0)
    assert np.allclose(restored.displacement, fs.displacement)


def test_strong_regime_convergence(analog_result):
    # incoherent recombination makes classes 1 and 2 coincide, so the frame
    # comes from the coherent run
    with pytest.raises(NoCrossingError):
        run_pipeline(STAGE, ANALOG, fidelity=FidelityMode.visibility(0, 0))
    res = run_pipeline(STAGE, ANALOG, fidelity=FidelityMode.visibility(0, 0), frame=analog_result.frame)
    slope = strong_regime_slope(res.framed[1])
    assert slope == pytest.approx(-STAGE.gain / 2, rel=0.10)


def test_empty_port_flagged():
    ds = run_class_sweep(1, STAGE, cam=ANALOG)
    assert all(p.flag is None for p in ds.pairs)


def test_seeded_noise_pipeline():
    res = run_pipeline(STAGE, CameraConfig(noise=NoiseConfig(seed=3)))
    assert abs(res.frame.x0 - STAGE.x_zero) < 5
    assert res.extraction.ordering_ok


def test_report_bundle(tmp_path, analog_result):
    summary = emit_report(analog_result, tmp_path, {"k": 1})
    names = sorted(p.name for p in tmp_path.iterdir())
    assert names == ["figure2.svg", "report.json", "s0.csv", "s1.csv", "s2.csv", "s3.csv"]
    data = json.loads((tmp_path / "report.json").read_text())
    assert data["schema"] == 1 and data["passed"] == summary["passed"]
    fs = read_framed_csv(tmp_path / "s1.csv")
    assert np.allclose(fs.displacement, analog_result.framed[1].displacement)
    assert (tmp_path / "s1.csv").read_text().splitlines()[0] == "class_id,x_um,x_prime_um,y_bar_px,displacement_um"


def test_report_deterministic(tmp_path):
    cam = CameraConfig(noise=NoiseConfig(seed=11))
    for d in ("a", "b"):
        emit_report(run_pipeline(STAGE, cam), tmp_path / d)
    for name in ("report.json", "s0.csv", "s1.csv", "s2.csv", "s3.csv", "figure2.svg"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_svg_structure(analog_result):
    svg = figure_from_sets(analog_result.framed, 1.5, 200.0)
    assert svg.startswith("<svg") and "xlink:href" not in svg and "<image" not in svg
    assert len(re.findall(r'<line class="ideal-line"[^>]*stroke-dasharray', svg)) == 3
    assert len(re.findall(r"<rect", svg)) == 1
    assert svg.count('class="point"') == 3 * 14 + 3
