"""Stage sweeps and the data reduction that turns pointer images into weak values.

Every sweep records one (x, y_bar) pair per M1 stage position: x is the
absolute stage position in micrometres and y_bar the intensity-averaged
pixel index of the pointer image. The reduction follows the experiment:

1. calibrate pixel displacement against stage position (set 3),
2. locate the class-1 / class-2 crossing from their middle two pairs,
3. move every set into the crossing frame and scale pixels to micrometres,
4. compare against the ideal lines rho_i(x') = -gain * x' * N_w,i.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .camera import CameraConfig, centroid_pixels, excited_pixel_count, render
from .pathspace import (
    NetworkConfig,
    PathState,
    Plane,
    class_network,
    class_selection,
    class_weak_values,
    forward_propagate,
)
from .pointerlab import (
    DEFAULT_MARGIN,
    DEFAULT_SIGMA,
    EmptyPortError,
    FidelityMode,
    network_report,
)

# calibration slope (px/um) measured on the bench with the 14-point sweep
RECORDED_CALIBRATION_SLOPE = -0.198
THEORY_WEAK_VALUES = {0: 0.0, 1: 1.0, 2: 0.5}


class NoCrossingError(ValueError):
    pass


class WindowTooNarrowError(ValueError):
    pass


def default_positions() -> tuple:
    return tuple(float(x) for x in np.linspace(0.0, 1300.0, 14))


@dataclass(frozen=True)
class StageConfig:
    """M1 stage positions and the mapping to coupling strength.

    gamma(x) = -gain * (x - x_zero). The default x_zero puts the eighth
    position 37 um past the crossing, as in the recorded sweep.
    """

    positions: tuple = field(default_factory=default_positions)
    x_zero: float = 663.0
    gain: float = 1.5

    def __post_init__(self):
        pos = tuple(float(x) for x in self.positions)
        object.__setattr__(self, "positions", pos)
        if len(pos) < 2 or np.any(np.diff(pos) <= 0):
            raise ValueError("stage positions must be strictly increasing")
        if not self.gain > 0:
            raise ValueError("gain must be positive")

    def gamma(self, x):
        return -self.gain * (np.asarray(x, dtype=float) - self.x_zero)


@dataclass(frozen=True)
class MeasurementPair:
    x: float
    y_bar: float
    flag: str | None = None


@dataclass(frozen=True)
class DataSet:
    class_id: int
    pairs: tuple

    def __post_init__(self):
        object.__setattr__(self, "pairs", tuple(self.pairs))
        xs = self.x
        if np.any(np.diff(xs) <= 0):
            raise ValueError("pairs must be in increasing stage-position order")

    @property
    def x(self) -> np.ndarray:
        return np.array([p.x for p in self.pairs], dtype=float)

    @property
    def y(self) -> np.ndarray:
        return np.array([p.y_bar for p in self.pairs], dtype=float)

    def shifted(self, dy: float) -> "DataSet":
        return DataSet(self.class_id, [MeasurementPair(p.x, p.y_bar + dy, p.flag) for p in self.pairs])


def check_shared_abscissas(*sets: DataSet) -> None:
    ref = sets[0].x
    for s in sets[1:]:
        if s.x.shape != ref.shape or not np.array_equal(s.x, ref):
            raise ValueError(f"data set {s.class_id} does not share stage positions with set {sets[0].class_id}")


@dataclass(frozen=True)
class Frame:
    x0: float
    y0: float


@dataclass(frozen=True)
class CalibrationFit:
    slope: float
    intercept: float
    residual_rms: float
    gain_estimate: float


def _sweep(class_id, net, pre, stage, fidelity, cam, sigma) -> DataSet:
    pairs = []
    for k, x in enumerate(stage.positions):
        g = float(stage.gamma(x))
        try:
            report = network_report(net, pre, g, sigma, fidelity)
        except EmptyPortError:
            pairs.append(MeasurementPair(x, math.nan, "empty-port"))
            continue
        img = render(report, cam, key=(class_id, k))
        pairs.append(MeasurementPair(x, centroid_pixels(img), "off-sensor" if img.off_sensor else None))
    return DataSet(class_id, pairs)


def run_class_sweep(
    class_id: int,
    stage: StageConfig,
    fidelity: FidelityMode | None = None,
    cam: CameraConfig | None = None,
    sigma: float = DEFAULT_SIGMA,
    base: NetworkConfig | None = None,
    preset: int | None = None,
) -> DataSet:
    """One measurement sequence: couple, propagate, post-select on R6, image.

    ``preset`` selects the network configuration when it should differ from
    the label ``class_id`` (used to force identical classes in checks).
    """
    cam = cam or CameraConfig()
    net, pre, _ = class_selection(class_id if preset is None else preset, base)
    return _sweep(class_id, net, pre, stage, fidelity, cam, sigma)


def run_calibration_sweep(
    stage: StageConfig,
    cam: CameraConfig | None = None,
    sigma: float = DEFAULT_SIGMA,
    base: NetworkConfig | None = None,
) -> DataSet:
    """L3 and R4 blocked: only the M1 arm reaches the camera."""
    cam = cam or CameraConfig()
    net = class_network(3, base)
    pre = forward_propagate(net, PathState.basis("R1"), Plane.PLANE2)
    return _sweep(3, net, pre, stage, FidelityMode.ideal(), cam, sigma)


def _valid(ds: DataSet):
    y = ds.y
    ok = np.isfinite(y)
    return ds.x[ok], y[ok]


def fit_calibration(ds: DataSet, pitch: float) -> CalibrationFit:
    x, y = _valid(ds)
    if len(x) < 2:
        raise ValueError("calibration needs at least two valid pairs")
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    if slope == 0:
        raise ValueError("calibration slope is zero")
    return CalibrationFit(float(slope), float(intercept), float(np.sqrt(np.mean(resid**2))), float(abs(slope) * pitch))


def _intersect(p1, p2, q1, q2) -> Frame:
    m1 = (p2[1] - p1[1]) / (p2[0] - p1[0])
    m2 = (q2[1] - q1[1]) / (q2[0] - q1[0])
    if abs(m1 - m2) < 1e-12:
        raise NoCrossingError(f"lines are parallel (slopes {m1:.6g}, {m2:.6g})")
    # y = m1 (x - p1x) + p1y = m2 (x - q1x) + q1y
    x0 = (q1[1] - p1[1] + m1 * p1[0] - m2 * q1[0]) / (m1 - m2)
    return Frame(float(x0), float(m1 * (x0 - p1[0]) + p1[1]))


def estimate_crossing(s1: DataSet, s2: DataSet) -> Frame:
    """Intersect the lines through the middle two pairs of each set."""
    check_shared_abscissas(s1, s2)
    n = len(s1.pairs)
    if n < 4:
        raise ValueError("crossing estimation needs at least four pairs per set")
    a, b = n // 2 - 1, n // 2
    pts = []
    for s in (s1, s2):
        pa, pb = s.pairs[a], s.pairs[b]
        if not (math.isfinite(pa.y_bar) and math.isfinite(pb.y_bar)):
            raise NoCrossingError("middle pairs are flagged")
        pts.append(((pa.x, pa.y_bar), (pb.x, pb.y_bar)))
    return _intersect(*pts[0], *pts[1])


def estimate_crossing_lsq(s1: DataSet, s2: DataSet) -> Frame:
    """Robust alternative: intersect least-squares lines through all pairs."""
    check_shared_abscissas(s1, s2)
    fits = []
    for s in (s1, s2):
        x, y = _valid(s)
        m, c = np.polyfit(x, y, 1)
        fits.append(((0.0, c), (1.0, m + c)))
    return _intersect(*fits[0], *fits[1])


@dataclass(frozen=True)
class FramedSet:
    """A data set moved into the crossing frame."""

    class_id: int
    x: np.ndarray
    x_prime: np.ndarray
    y_bar: np.ndarray
    displacement: np.ndarray

    def rows(self):
        for row in zip(self.x, self.x_prime, self.y_bar, self.displacement):
            yield (self.class_id,) + tuple(float(v) for v in row)


def to_frame(s: DataSet, frame: Frame, pitch: float) -> FramedSet:
    x, y = s.x, s.y
    return FramedSet(s.class_id, x, x - frame.x0, y, (y - frame.y0) * pitch)


def from_frame(fs: FramedSet, frame: Frame, pitch: float) -> DataSet:
    xs = fs.x_prime + frame.x0
    ys = fs.displacement / pitch + frame.y0
    return DataSet(fs.class_id, [MeasurementPair(float(a), float(b)) for a, b in zip(xs, ys)])


def offset_displacements(fs: FramedSet, bias_um: float) -> FramedSet:
    """Add a constant displacement bias (and remove one with a negative value)."""
    return FramedSet(fs.class_id, fs.x, fs.x_prime, fs.y_bar, fs.displacement + bias_um)


def ideal_lines(gain: float, weak_values=None) -> dict:
    """rho_i(x') = -gain * x' * N_w,i for each class."""
    wv = THEORY_WEAK_VALUES if weak_values is None else weak_values

    def line(n):
        n = complex(n).real
        return lambda xp: -gain * np.asarray(xp, dtype=float) * n

    return {i: line(n) for i, n in wv.items()}


@dataclass(frozen=True)
class RegimeBound:
    raw: float
    window: float
    margin: float


def weak_regime_bound(sigma: float, gain: float, margin: float = DEFAULT_MARGIN) -> RegimeBound:
    """|x'| << 2 sigma / gain, from |gamma| << 2 sigma with gamma = -gain x'."""
    if not (sigma > 0 and gain > 0):
        raise ValueError("sigma and gain must be positive")
    raw = 2 * sigma / gain
    return RegimeBound(raw, raw / margin, margin)


@dataclass(frozen=True)
class Extraction:
    values: dict
    intercepts: dict
    residuals: dict
    counts: dict
    window: float
    ordering_ok: bool


def ordering_holds(values: dict) -> bool:
    return values[0] < values[2] < values[1]


def extract_weak_values(sets: dict, gain: float, window: float) -> Extraction:
    """Least-squares slope of displacement against -gain * x' inside |x'| <= window."""
    values, intercepts, residuals, counts = {}, {}, {}, {}
    for i in (0, 1, 2):
        fs = sets[i]
        sel = (np.abs(fs.x_prime) <= window) & np.isfinite(fs.displacement)
        if np.count_nonzero(sel) < 2:
            raise WindowTooNarrowError(
                f"class {i}: {np.count_nonzero(sel)} pair(s) inside |x'| <= {window:g} um, need 2"
            )
        g = -gain * fs.x_prime[sel]
        d = fs.displacement[sel]
        slope, icpt = np.polyfit(g, d, 1)
        values[i] = float(slope)
        intercepts[i] = float(icpt)
        residuals[i] = float(np.sqrt(np.mean((d - slope * g - icpt) ** 2)))
        counts[i] = int(np.count_nonzero(sel))
    return Extraction(values, intercepts, residuals, counts, window, ordering_holds(values))


def strong_regime_slope(fs: FramedSet, lo: float = 400.0, hi: float = 650.0) -> float:
    """Slope of displacement (um) against x' over lo <= |x'| <= hi."""
    sel = (np.abs(fs.x_prime) >= lo) & (np.abs(fs.x_prime) <= hi) & np.isfinite(fs.displacement)
    if np.count_nonzero(sel) < 2:
        raise WindowTooNarrowError(f"fewer than two pairs with {lo} <= |x'| <= {hi}")
    return float(np.polyfit(fs.x_prime[sel], fs.displacement[sel], 1)[0])


def excitation_ratio(
    x_prime: float,
    stage: StageConfig,
    cam: CameraConfig | None = None,
    sigma: float = DEFAULT_SIGMA,
    threshold: int = 10,
    fidelity: FidelityMode | None = None,
) -> float:
    """Excited-pixel count of class 2 over class 1 at one stage displacement."""
    cam = cam or CameraConfig()
    g = float(-stage.gain * x_prime)
    counts = []
    for c in (2, 1):
        net, pre, _ = class_selection(c)
        img = render(network_report(net, pre, g, sigma, fidelity), cam, key=(c, 9999))
        counts.append(excited_pixel_count(img, threshold))
    return counts[0] / counts[1]


@dataclass
class ExperimentResult:
    stage: StageConfig
    camera: CameraConfig
    sigma: float
    raw: dict
    calibration: CalibrationFit
    frame: Frame
    framed: dict
    bound: RegimeBound
    extraction: Extraction
    excitation_ratio: float
    theory: dict = field(default_factory=dict)


def run_pipeline(
    stage: StageConfig,
    cam: CameraConfig,
    sigma: float = DEFAULT_SIGMA,
    fidelity: FidelityMode | None = None,
    base: NetworkConfig | None = None,
    presets=(0, 1, 2),
    window: float | None = None,
    margin: float = DEFAULT_MARGIN,
    threshold: int = 10,
    frame: Frame | None = None,
) -> ExperimentResult:
    """Calibration sweep, three class sweeps and the full reduction.

    ``frame`` reuses a crossing found earlier (e.g. in the coherent regime);
    without one it is estimated from the class 1 and 2 sweeps.
    """
    raw = {i: run_class_sweep(i, stage, fidelity, cam, sigma, base, preset=p) for i, p in enumerate(presets)}
    raw[3] = run_calibration_sweep(stage, cam, sigma, base)
    check_shared_abscissas(*raw.values())
    calib = fit_calibration(raw[3], cam.pitch)
    if frame is None:
        frame = estimate_crossing(raw[1], raw[2])
    framed = {i: to_frame(ds, frame, cam.pitch) for i, ds in raw.items()}
    bound = weak_regime_bound(sigma, stage.gain, margin)
    extraction = extract_weak_values(framed, stage.gain, bound.raw if window is None else window)
    # weakest measurement: the stage position closest to the crossing
    xp = framed[1].x_prime
    nearest = float(xp[np.argmin(np.abs(xp))])
    ratio = excitation_ratio(nearest, stage, cam, sigma, threshold, fidelity)
    theory = {i: complex(v).real for i, v in class_weak_values("L2", base).items()}
    return ExperimentResult(stage, cam, sigma, raw, calib, frame, framed, bound, extraction, ratio, theory)
