"""Joint path x pointer dynamics with a Gaussian pointer.

The pointer wavefunction is real, phi(q) = (2 pi sigma^2)^(-1/4) exp(-q^2 / 4 sigma^2),
so |phi|^2 is a normal density with standard deviation ``sigma`` (the
transverse position uncertainty, in micrometres). Every element of the
network either translates the pointer or forms complex-linear combinations,
so a pointer state is always a finite Gaussian mixture

    sum_k w_k phi(q - s_k)

and all norms, centroids and pixel integrals have closed forms built from the
pairwise overlap O(a, b) = exp(-(a - b)^2 / (8 sigma^2)).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import ndtr

from .pathspace import (
    NetworkConfig,
    PathState,
    Plane,
    ProjectorObservable,
    class_selection,
    expectation,
)

DEFAULT_SIGMA = 150.0
DEFAULT_MARGIN = 5.0
EMPTY_PORT_TOL = 1e-14


class EmptyPortError(ValueError):
    """Post-selection onto a port that carries (numerically) no probability."""


@dataclass(frozen=True)
class GaussianPointer:
    sigma: float = DEFAULT_SIGMA

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")

    def amplitude(self, q):
        q = np.asarray(q, dtype=float)
        return (2 * np.pi * self.sigma**2) ** -0.25 * np.exp(-(q**2) / (4 * self.sigma**2))

    def mixture(self, weight: complex = 1.0, shift: float = 0.0) -> "GaussianMixture":
        return GaussianMixture([weight], [shift], self.sigma)


def overlap(a, b, sigma: float) -> np.ndarray:
    """<phi(. - a)|phi(. - b)> for every pair; broadcasts like an outer product."""
    a = np.asarray(a, dtype=float)[:, None]
    b = np.asarray(b, dtype=float)[None, :]
    return np.exp(-((a - b) ** 2) / (8 * sigma**2))


@dataclass(frozen=True)
class GaussianMixture:
    """sum_k weights[k] * phi(q - shifts[k]) for one pointer width."""

    weights: np.ndarray
    shifts: np.ndarray
    sigma: float = DEFAULT_SIGMA

    def __post_init__(self):
        w = np.array(self.weights, dtype=complex).reshape(-1)
        s = np.array(self.shifts, dtype=float).reshape(-1)
        if w.shape != s.shape:
            raise ValueError("weights and shifts must have equal length")
        w.setflags(write=False)
        s.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "shifts", s)
        object.__setattr__(self, "sigma", float(self.sigma))

    @classmethod
    def empty(cls, sigma: float) -> "GaussianMixture":
        return cls([], [], sigma)

    def __len__(self) -> int:
        return len(self.weights)

    def inner(self, other: "GaussianMixture") -> complex:
        """<self|other>."""
        if not len(self) or not len(other):
            return 0.0j
        o = overlap(self.shifts, other.shifts, self.sigma)
        return complex(self.weights.conj() @ o @ other.weights)

    def norm2(self) -> float:
        return max(self.inner(self).real, 0.0)

    def centroid(self) -> float:
        return _coherent_stats([self], np.ones((1, 1)))[1]

    def amplitude(self, q) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        pointer = GaussianPointer(self.sigma)
        out = np.zeros(q.shape, dtype=complex)
        for w, s in zip(self.weights, self.shifts):
            out += w * pointer.amplitude(q - s)
        return out

    def density(self, q) -> np.ndarray:
        return np.abs(self.amplitude(q)) ** 2

    def scaled(self, c: complex) -> "GaussianMixture":
        return GaussianMixture(self.weights * c, self.shifts, self.sigma)

    def shifted(self, d: float) -> "GaussianMixture":
        return GaussianMixture(self.weights, self.shifts + d, self.sigma)

    def __add__(self, other: "GaussianMixture") -> "GaussianMixture":
        if other.sigma != self.sigma:
            raise ValueError("cannot add mixtures with different pointer widths")
        return GaussianMixture(
            np.concatenate([self.weights, other.weights]),
            np.concatenate([self.shifts, other.shifts]),
            self.sigma,
        ).merged()

    def merged(self) -> "GaussianMixture":
        """Combine terms with equal shift and drop exact zeros."""
        if not len(self):
            return self
        shifts, inv = np.unique(self.shifts, return_inverse=True)
        weights = np.zeros(len(shifts), dtype=complex)
        np.add.at(weights, inv, self.weights)
        keep = weights != 0
        return GaussianMixture(weights[keep], shifts[keep], self.sigma)


def combine(mixtures: Sequence[GaussianMixture], coefficients: Sequence[complex], sigma: float):
    out = GaussianMixture.empty(sigma)
    for c, m in zip(coefficients, mixtures):
        if c != 0 and len(m):
            out = out + m.scaled(c)
    return out


def _pair_terms(mixtures: Sequence[GaussianMixture], coherence: np.ndarray):
    """Flatten partially coherent branches into pair coefficients.

    Returns (coef, mid, ovl) arrays over all term pairs so that the intensity
    is sum coef * ovl * N(q; mid, sigma), with N the normal density.
    """
    weights, shifts, branch = [], [], []
    for b, m in enumerate(mixtures):
        weights.append(m.weights)
        shifts.append(m.shifts)
        branch.append(np.full(len(m), b))
    if not weights:
        z = np.zeros(0)
        return z, z, z
    w = np.concatenate(weights)
    s = np.concatenate(shifts)
    br = np.concatenate(branch)
    sigma = mixtures[0].sigma
    k = np.asarray(coherence, dtype=float)[br[:, None], br[None, :]]
    coef = (k * (w[:, None] * w[None, :].conj())).real
    mid = 0.5 * (s[:, None] + s[None, :])
    ovl = overlap(s, s, sigma)
    return coef.ravel(), mid.ravel(), ovl.ravel()


def _coherent_stats(mixtures, coherence) -> tuple[float, float]:
    coef, mid, ovl = _pair_terms(mixtures, coherence)
    norm = float(np.sum(coef * ovl))
    if norm <= EMPTY_PORT_TOL:
        return max(norm, 0.0), math.nan
    return norm, float(np.sum(coef * ovl * mid) / norm)


@dataclass(frozen=True)
class FidelityMode:
    """How coherently the two interferometers recombine their arms.

    ``ideal`` keeps every amplitude coherent. ``collapsed`` treats each path
    history after the coupling plane as distinguishable, so histories add
    as intensities. ``visibility(v1, v2)`` scales the cross terms between
    histories that differ in the first (v1) or second (v2) interferometer arm.
    """

    kind: str = "ideal"
    v1: float = 1.0
    v2: float = 1.0

    def __post_init__(self):
        if self.kind not in ("ideal", "collapsed", "visibility"):
            raise ValueError(f"unknown fidelity mode {self.kind!r}")
        if not (0.0 <= self.v1 <= 1.0 and 0.0 <= self.v2 <= 1.0):
            raise ValueError("visibilities must lie in [0, 1]")

    @classmethod
    def ideal(cls) -> "FidelityMode":
        return cls("ideal")

    @classmethod
    def collapsed(cls) -> "FidelityMode":
        return cls("collapsed", 0.0, 0.0)

    @classmethod
    def visibility(cls, v1: float, v2: float) -> "FidelityMode":
        return cls("visibility", float(v1), float(v2))

    @property
    def factors(self) -> tuple[float, float]:
        if self.kind == "ideal":
            return 1.0, 1.0
        if self.kind == "collapsed":
            return 0.0, 0.0
        return self.v1, self.v2

    def coherence(self, h1: tuple, h2: tuple) -> float:
        v = 1.0
        for arm1, arm2, factor in zip(h1, h2, self.factors):
            if arm1 != arm2:
                v *= factor
        return v

    def to_dict(self) -> dict:
        if self.kind == "visibility":
            return {"mode": "visibility", "v1": self.v1, "v2": self.v2}
        return {"mode": self.kind}

    @classmethod
    def from_dict(cls, data: dict) -> "FidelityMode":
        data = dict(data)
        kind = data.pop("mode", "ideal")
        if kind == "visibility":
            v1, v2 = data.pop("v1", 1.0), data.pop("v2", 1.0)
            if data:
                raise ValueError(f"unknown fidelity keys: {sorted(data)}")
            return cls.visibility(v1, v2)
        if data:
            raise ValueError(f"unknown fidelity keys: {sorted(data)}")
        return cls(kind) if kind == "ideal" else cls.collapsed()


@dataclass(frozen=True)
class JointState:
    """Path x pointer state: one Gaussian mixture per path mode of a plane."""

    plane: Plane
    mixtures: tuple
    blocked_loss: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "mixtures", tuple(self.mixtures))
        if len(self.mixtures) != len(self.plane.modes):
            raise ValueError(f"{self.plane.name} needs {len(self.plane.modes)} mixtures")

    @classmethod
    def product(cls, path: PathState, pointer: GaussianPointer) -> "JointState":
        return cls(path.plane, [pointer.mixture(a, 0.0) for a in path.amplitudes])

    @property
    def sigma(self) -> float:
        return self.mixtures[0].sigma

    def mode(self, label: str) -> GaussianMixture:
        return self.mixtures[self.plane.index(label)]

    def norm2(self) -> float:
        return sum(m.norm2() for m in self.mixtures)


@dataclass(frozen=True)
class IntensityField:
    """Partially coherent field: per mode, a list of (history, mixture) branches."""

    plane: Plane
    branches: tuple
    fidelity: FidelityMode
    blocked_loss: float = 0.0

    def mode_report(self, label: str) -> "PointerReport":
        entries = self.branches[self.plane.index(label)]
        return _report_from_branches(entries, self.fidelity)

    def norm2(self) -> float:
        return sum(self.mode_report(m).probability for m in self.plane.modes)


def couple(joint: JointState, gamma: float) -> JointState:
    """Impulsive von Neumann coupling of |L2><L2| to the pointer momentum."""
    if joint.plane != Plane.PLANE2:
        raise ValueError("the coupling acts at plane 2")
    l2, r2 = joint.mixtures
    return JointState(joint.plane, (l2.shifted(gamma), r2), joint.blocked_loss)


def prepare(pre: PathState, gamma: float, sigma: float = DEFAULT_SIGMA) -> JointState:
    return couple(JointState.product(pre, GaussianPointer(sigma)), gamma)


_BLOCK_STAGES = ("block_L3", "block_4")


def propagate_joint(
    net: NetworkConfig,
    joint: JointState,
    to: Plane,
    mode: FidelityMode | None = None,
):
    """Carry a joint state through the network to plane ``to``.

    Ideal mode returns a ``JointState``; collapsed and visibility modes return
    an ``IntensityField`` whose branches are labelled by the interferometer
    arms each history took.
    """
    mode = mode or FidelityMode.ideal()
    if joint.plane > to:
        raise ValueError(f"cannot propagate forward from {joint.plane.name} to {to.name}")
    sigma = joint.sigma
    if mode.kind == "ideal":
        mixtures = list(joint.mixtures)
        loss = joint.blocked_loss
        for name, m in net.stages(joint.plane, to):
            before = sum(x.norm2() for x in mixtures)
            mixtures = [combine(mixtures, row, sigma) for row in m]
            if name in _BLOCK_STAGES:
                loss += before - sum(x.norm2() for x in mixtures)
        return JointState(to, mixtures, loss)

    # histories are (first-interferometer arm, second-interferometer arm)
    plane = joint.plane
    branches = []
    for i, mix in enumerate(joint.mixtures):
        arm1 = i if plane == Plane.PLANE2 else None
        arm2 = i if plane == Plane.PLANE4 else None
        branches.append([((arm1, arm2), mix)] if len(mix) else [])
    loss = joint.blocked_loss
    for name, m in net.stages(plane, to):
        new = []
        for r, row in enumerate(m):
            entries = []
            for c, coeff in enumerate(row):
                if coeff == 0:
                    continue
                for (a1, a2), mix in branches[c]:
                    h = (
                        (r if name == "bs1" else a1),
                        (r if name == "u1" else a2),
                    )
                    entries.append((h, mix.scaled(coeff)))
            new.append(_merge_histories(entries))
        if name in _BLOCK_STAGES:
            before = sum(_report_from_branches(b, mode).probability for b in branches)
            after = sum(_report_from_branches(b, mode).probability for b in new)
            loss += before - after
        branches = new
    return IntensityField(to, tuple(tuple(b) for b in branches), mode, loss)


def _merge_histories(entries):
    merged: dict = {}
    for h, mix in entries:
        merged[h] = merged[h] + mix if h in merged else mix
    return [(h, m) for h, m in sorted(merged.items(), key=lambda kv: repr(kv[0])) if len(m)]


@dataclass(frozen=True)
class PointerReport:
    """Post-selected pointer: sub-normalized, possibly partially coherent."""

    branches: tuple
    coherence: np.ndarray
    probability: float
    centroid: float
    sigma: float = DEFAULT_SIGMA
    _pairs: tuple = field(default=(), repr=False, compare=False)

    @property
    def mixture(self) -> GaussianMixture:
        """The coherent pointer mixture (ideal mode only)."""
        if not np.all(self.coherence == 1.0):
            raise ValueError("partially coherent report has no single pointer mixture")
        out = GaussianMixture.empty(self.sigma)
        for m in self.branches:
            out = out + m
        return out

    def density(self, q) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        coef, mid, ovl = self._pairs
        z = (q[..., None] - mid) / self.sigma
        pdf = np.exp(-0.5 * z**2) / (self.sigma * math.sqrt(2 * math.pi))
        return np.clip(np.sum(coef * ovl * pdf, axis=-1), 0.0, None)

    def mass_between(self, lo, hi) -> np.ndarray:
        """Exact integral of the intensity over [lo, hi] (vectorized)."""
        coef, mid, ovl = self._pairs
        lo = np.asarray(lo, dtype=float)[..., None]
        hi = np.asarray(hi, dtype=float)[..., None]
        cdf = ndtr((hi - mid) / self.sigma) - ndtr((lo - mid) / self.sigma)
        return np.clip(np.sum(coef * ovl * cdf, axis=-1), 0.0, None)

    def write_csv(self, path, q=None):
        if q is None:
            lo = self.centroid - 6 * self.sigma if math.isfinite(self.centroid) else -6 * self.sigma
            q = np.linspace(lo, lo + 12 * self.sigma, 1201)
        q = np.asarray(q, dtype=float)
        with open(path, "w", newline="") as fh:
            fh.write("q_um,intensity\n")
            for x, y in zip(q, self.density(q)):
                fh.write(f"{x!r},{float(y)!r}\n")


def _report_from_branches(entries, fidelity: FidelityMode, sigma: float | None = None) -> PointerReport:
    mixtures = [m for _, m in entries]
    hist = [h for h, _ in entries]
    n = len(mixtures)
    coh = np.array([[fidelity.coherence(a, b) for b in hist] for a in hist]).reshape(n, n)
    if sigma is None:
        sigma = mixtures[0].sigma if mixtures else DEFAULT_SIGMA
    return _make_report(mixtures, coh, sigma)


def _make_report(mixtures, coherence, sigma) -> PointerReport:
    if mixtures:
        pairs = _pair_terms(mixtures, coherence)
        prob, cen = _coherent_stats(mixtures, coherence)
    else:
        z = np.zeros(0)
        pairs, prob, cen = (z, z, z), 0.0, math.nan
    return PointerReport(tuple(mixtures), np.asarray(coherence, dtype=float), prob, cen, sigma, pairs)


def postselect(state, mode: str = "R6") -> PointerReport:
    """Project the joint state (or field) onto one output path mode."""
    if state.plane != Plane.PLANE6:
        raise ValueError("post-selection happens at plane 6")
    if isinstance(state, JointState):
        mix = state.mode(mode)
        report = _make_report([mix] if len(mix) else [], np.ones((1, 1)), state.sigma)
    else:
        report = state.mode_report(mode)
    if report.probability < EMPTY_PORT_TOL:
        raise EmptyPortError(f"port {mode} has probability {report.probability:.3g}")
    return report


def postselect_at(joint: JointState, post: PathState) -> PointerReport:
    """<post|Phi> taken at the joint state's own plane: sum_j conj(post_j) mixture_j."""
    if post.plane != joint.plane:
        raise ValueError("post-selected state must live on the joint state's plane")
    mix = combine(joint.mixtures, post.amplitudes.conj(), joint.sigma)
    report = _make_report([mix] if len(mix) else [], np.ones((1, 1)), joint.sigma)
    if report.probability < EMPTY_PORT_TOL:
        raise EmptyPortError(f"post-selection probability {report.probability:.3g}")
    return report


def unselected_report(state) -> PointerReport:
    """Pointer distribution summed over every mode of the plane (no post-selection)."""
    if isinstance(state, JointState):
        mixtures = [m for m in state.mixtures if len(m)]
        coh = np.eye(len(mixtures))
        return _make_report(mixtures, coh, state.sigma)
    entries, owner = [], []
    for k, branch in enumerate(state.branches):
        for h, m in branch:
            entries.append((h, m))
            owner.append(k)
    hist = [h for h, _ in entries]
    coh = np.array(
        [
            [state.fidelity.coherence(a, b) if owner[i] == owner[j] else 0.0 for j, b in enumerate(hist)]
            for i, a in enumerate(hist)
        ]
    ).reshape(len(hist), len(hist))
    return _make_report([m for _, m in entries], coh, entries[0][1].sigma)


def class_report(
    class_id: int,
    gamma: float,
    sigma: float = DEFAULT_SIGMA,
    fidelity: FidelityMode | None = None,
    base: NetworkConfig | None = None,
    port: str = "R6",
) -> PointerReport:
    net, pre, _ = class_selection(class_id, base)
    return network_report(net, pre, gamma, sigma, fidelity, port)


def network_report(net, pre, gamma, sigma=DEFAULT_SIGMA, fidelity=None, port="R6") -> PointerReport:
    joint = prepare(pre, gamma, sigma)
    out = propagate_joint(net, joint, Plane.PLANE6, fidelity)
    return postselect(out, port)


def weak_prediction(gamma: float, weak_value: complex) -> float:
    return gamma * complex(weak_value).real


def strong_prediction(pre: PathState, obs: ProjectorObservable, gamma: float) -> float:
    return gamma * expectation(pre, obs)


def weak_limit_slope(class_id: int, gamma: float, sigma: float = DEFAULT_SIGMA, base=None) -> float:
    """Symmetric finite difference of the post-selected centroid at gamma = 0."""
    plus = class_report(class_id, gamma, sigma, base=base).centroid
    minus = class_report(class_id, -gamma, sigma, base=base).centroid
    return (plus - minus) / (2 * gamma)


@dataclass(frozen=True)
class ValidityReport:
    is_weak: bool
    gamma: float
    sigma: float
    margin: float
    bound_first: float
    bound_moments: float
    raw_bound: float
    window: float


def validity_check(gamma: float, sigma: float, weak_values, margin: float = DEFAULT_MARGIN) -> ValidityReport:
    """Weak-regime inequalities for a minimum-uncertainty Gaussian pointer.

    With dp = hbar / (2 sigma) the two conditions become
    |gamma| << 2 sigma / |A_w| and
    |gamma| << 2 sigma * min_m |A_w / (A^m)_w|^(1/(m-1)).
    ``weak_values`` holds either plain weak values (projectors: every moment
    equals A_w) or ``(A_w, {m: (A^m)_w})`` pairs. ``is_weak`` applies the
    margin: |gamma| <= raw_bound / margin.
    """
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    b1 = b2 = math.inf
    for entry in weak_values:
        if isinstance(entry, tuple):
            aw, moments = entry
            moments = dict(moments)
        else:
            aw, moments = entry, None
        aw = complex(aw)
        if moments is None:
            moments = {m: aw for m in (2, 3, 4)}
        if abs(aw) > 0:
            b1 = min(b1, 2 * sigma / abs(aw))
        for m, am in moments.items():
            if m < 2:
                continue
            am = complex(am)
            if abs(am) == 0 and abs(aw) == 0:
                ratio = 1.0
            elif abs(am) == 0:
                continue
            else:
                ratio = abs(aw / am) ** (1.0 / (m - 1))
            b2 = min(b2, 2 * sigma * ratio)
    raw = min(b1, b2)
    window = raw / margin
    return ValidityReport(abs(gamma) <= window, gamma, sigma, margin, b1, b2, raw, window)
