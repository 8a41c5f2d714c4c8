"""Two-slit wavepackets and modular momentum in one dimension.

Units are hbar = m = 1, so the modular period of the momentum is 2 pi / ell.
Packets use the same convention as the pointer: amplitude
exp(-x^2 / 4 sigma^2), i.e. |psi|^2 has standard deviation ``sigma``.
The left-slit packet sits at x = ell and the right-slit packet at x = 0.
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass

import numpy as np

DEFAULT_ELL = 20.0
DEFAULT_SIGMA = 2.0
DEFAULT_N = 8192
DEFAULT_BINS = 64
DEFAULT_EPS = 1e-4
FOLD_PADDING = 64


class DomainError(ValueError):
    pass


class EmptyProjectionError(ValueError):
    pass


class OverlapWarning(UserWarning):
    pass


@dataclass(frozen=True)
class Wavepacket1D:
    """Samples of psi on the periodic grid x_j = -L/2 + j L/N."""

    length: float
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=complex)
        n = len(v)
        if n < 2 or n & (n - 1):
            raise ValueError("sample count must be a power of two")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return len(self.values)

    @property
    def dx(self) -> float:
        return self.length / self.n

    @property
    def x(self) -> np.ndarray:
        return -0.5 * self.length + self.dx * np.arange(self.n)

    @property
    def p(self) -> np.ndarray:
        return 2 * np.pi * np.fft.fftfreq(self.n, self.dx)

    def norm2(self) -> float:
        return float(np.sum(np.abs(self.values) ** 2) * self.dx)

    def momentum_norm2(self) -> float:
        f = np.fft.fft(self.values)
        return float(np.sum(np.abs(f) ** 2) * self.dx / self.n)

    def density(self) -> np.ndarray:
        return np.abs(self.values) ** 2

    def normalized(self) -> "Wavepacket1D":
        n2 = self.norm2()
        if n2 <= 0:
            raise EmptyProjectionError("state has zero norm")
        return Wavepacket1D(self.length, self.values / math.sqrt(n2))

    def translated(self, d: float) -> "Wavepacket1D":
        """Rigid translation psi(x) -> psi(x - d) on the periodic grid."""
        f = np.fft.fft(self.values) * np.exp(-1j * self.p * d)
        return Wavepacket1D(self.length, np.fft.ifft(f))


@dataclass(frozen=True)
class TwoSlitState:
    ell: float
    sigma: float
    alpha: float
    packet: Wavepacket1D
    weights: tuple = (1.0, 1.0)


def gaussian_packet(x, center: float, sigma: float) -> np.ndarray:
    return (2 * np.pi * sigma**2) ** -0.25 * np.exp(-((x - center) ** 2) / (4 * sigma**2))


def _grid(length: float, n: int) -> np.ndarray:
    return -0.5 * length + (length / n) * np.arange(n)


def _check_domain(ell, sigma, length):
    lo, hi = -0.5 * length, 0.5 * length
    if min(0.0, ell) - 6 * sigma < lo or max(0.0, ell) + 6 * sigma >= hi:
        raise DomainError(f"domain [{lo:g}, {hi:g}) cannot hold both packets to 6 sigma")


def make_two_slit_state(
    ell: float = DEFAULT_ELL,
    sigma: float = DEFAULT_SIGMA,
    alpha: float = 0.0,
    n: int = DEFAULT_N,
    length: float | None = None,
    allow_overlap: bool = False,
) -> TwoSlitState:
    """(1/sqrt2)(phi(x - ell) + e^{i alpha} phi(x)), normalized on the grid."""
    return _slit_state(ell, sigma, alpha, n, length, allow_overlap, (1.0, 1.0))


def make_single_packet(
    ell: float = DEFAULT_ELL,
    sigma: float = DEFAULT_SIGMA,
    slit: str = "right",
    n: int = DEFAULT_N,
    length: float | None = None,
) -> TwoSlitState:
    """Only one slit open: the packet at x = 0 (right) or x = ell (left)."""
    weights = {"right": (0.0, 1.0), "left": (1.0, 0.0)}[slit]
    return _slit_state(ell, sigma, 0.0, n, length, False, weights)


def _slit_state(ell, sigma, alpha, n, length, allow_overlap, weights):
    if not (ell > 0 and sigma > 0):
        raise ValueError("ell and sigma must be positive")
    if ell < 10 * sigma:
        if not allow_overlap:
            raise ValueError(f"packets overlap: ell = {ell:g} < 10 sigma = {10 * sigma:g}")
        warnings.warn(f"ell = {ell:g} < 10 sigma; packets are not separated", OverlapWarning, stacklevel=3)
    length = 16 * ell if length is None else float(length)
    _check_domain(ell, sigma, length)
    x = _grid(length, n)
    left, right = weights
    psi = left * gaussian_packet(x, ell, sigma) + right * np.exp(1j * alpha) * gaussian_packet(x, 0.0, sigma)
    packet = Wavepacket1D(length, psi).normalized()
    return TwoSlitState(float(ell), float(sigma), float(alpha), packet, (left, right))


def _packet(state) -> Wavepacket1D:
    return state.packet if isinstance(state, TwoSlitState) else state


def translate_expectation(state, distance: float, n: int = 1) -> complex:
    """<psi| exp(-i n p distance) |psi> = integral psi*(x) psi(x - n distance) dx.

    The shift is applied spectrally on a grid zero-padded to twice the
    domain, so nothing wraps back onto the original support.
    """
    psi = _packet(state)
    if n < 1:
        raise ValueError("n must be a positive integer")
    shift = n * distance
    if abs(shift) >= psi.length:
        raise DomainError(f"shift {shift:g} exceeds the domain length {psi.length:g}")
    if shift == 0:
        # the identity; normalized states (the usual case) give exactly 1
        norm = psi.norm2()
        return 1.0 + 0j if abs(norm - 1.0) <= 1e-10 else complex(norm)
    padded = np.concatenate([psi.values, np.zeros(psi.n, dtype=complex)])
    p = 2 * np.pi * np.fft.fftfreq(2 * psi.n, psi.dx)
    moved = np.fft.ifft(np.fft.fft(padded) * np.exp(-1j * p * shift))
    return complex(np.vdot(psi.values, moved[: psi.n]) * psi.dx)


@dataclass(frozen=True)
class ModularDistribution:
    ell: float
    masses: np.ndarray

    @property
    def period(self) -> float:
        return 2 * np.pi / self.ell

    @property
    def bin_edges(self) -> np.ndarray:
        return np.linspace(0.0, self.period, len(self.masses) + 1)

    def uniformity_deviation(self) -> float:
        """max_j |m_j * bins - 1|: relative deviation from the uniform distribution."""
        return float(np.max(np.abs(self.masses * len(self.masses) - 1.0)))

    def max_min_ratio(self) -> float:
        lo = float(self.masses.min())
        return math.inf if lo <= 0 else float(self.masses.max()) / lo


def modular_distribution(state, ell: float, bins: int = DEFAULT_BINS, padding: int = FOLD_PADDING) -> ModularDistribution:
    """Fold |psi~(p)|^2 modulo 2 pi / ell into ``bins`` equal bins.

    The position samples are zero-padded ``padding``-fold so the momentum
    grid resolves each bin with many samples.
    """
    psi = _packet(state)
    m = psi.n * padding
    f = np.fft.fft(psi.values, n=m)
    dens = np.abs(f) ** 2
    # p_k = k * dp with integer k; samples per period = m dx / ell
    k = np.fft.fftfreq(m) * m
    per_period = m * psi.dx / ell
    frac = np.mod(k / per_period, 1.0)
    # nudge so samples landing on a bin edge go to the bin on their right
    idx = np.floor(frac * bins + 1e-9).astype(int) % bins
    masses = np.bincount(idx, weights=dens, minlength=bins)
    return ModularDistribution(float(ell), masses / masses.sum())


@dataclass(frozen=True)
class UncertaintyReport:
    is_completely_uncertain: bool
    max_overlap: float
    max_uniformity_deviation: float
    overlaps: tuple


def complete_uncertainty_check(
    state, ell: float, n_max: int = 8, eps: float = DEFAULT_EPS, bins: int = DEFAULT_BINS
) -> UncertaintyReport:
    """Both sides of the equivalence: vanishing translation moments and a flat fold."""
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    overlaps = tuple(abs(translate_expectation(state, ell, k)) for k in range(1, n_max + 1))
    dev = modular_distribution(state, ell, bins).uniformity_deviation()
    return UncertaintyReport(all(o < eps for o in overlaps), max(overlaps), dev, overlaps)


def free_evolve(state, t: float, edge_fraction: float = 0.05, edge_mass: float = 1e-6) -> Wavepacket1D:
    """Free propagation exp(-i p^2 t / 2), applied exactly in momentum space."""
    if t < 0:
        raise ValueError("t must be non-negative")
    psi = _packet(state)
    f = np.fft.fft(psi.values) * np.exp(-0.5j * psi.p**2 * t)
    out = Wavepacket1D(psi.length, np.fft.ifft(f))
    x = out.x
    outer = np.abs(x) >= 0.5 * psi.length * (1 - 2 * edge_fraction)
    spill = float(np.sum(out.density()[outer]) * out.dx)
    if spill >= edge_mass:
        raise DomainError(f"packet spread to the domain edge (mass {spill:.3g} in the outer {edge_fraction:.0%})")
    return out


def close_slit(state, which: str, ell: float | None = None) -> Wavepacket1D:
    """Which-slit projection onto one half of the domain, renormalized.

    Closing the left slit keeps x < ell / 2 (the right-slit packet); closing
    the right slit keeps x >= ell / 2.
    """
    if isinstance(state, TwoSlitState):
        ell = state.ell if ell is None else ell
    if ell is None:
        raise ValueError("ell is required for a bare wavepacket")
    psi = _packet(state)
    if which == "left":
        keep = psi.x < 0.5 * ell
    elif which == "right":
        keep = psi.x >= 0.5 * ell
    else:
        raise ValueError("which must be 'left' or 'right'")
    projected = Wavepacket1D(psi.length, np.where(keep, psi.values, 0.0))
    if projected.norm2() < 1e-300:
        raise EmptyProjectionError(f"closing the {which} slit leaves no amplitude")
    return projected.normalized()


def screen_pattern(state, t: float) -> tuple[np.ndarray, np.ndarray]:
    """Return (x, |psi(x, t)|^2) after free flight to the screen."""
    out = free_evolve(state, t)
    return out.x, out.density()


def evolved_gaussian(x, center: float, sigma: float, t: float) -> np.ndarray:
    """Closed-form free evolution of one Gaussian packet (hbar = m = 1)."""
    s = 1 + 1j * t / (2 * sigma**2)
    return (2 * np.pi * sigma**2) ** -0.25 / np.sqrt(s) * np.exp(-((x - center) ** 2) / (4 * sigma**2 * s))


def packet_doubling_time(sigma: float) -> float:
    return 2 * math.sqrt(3) * sigma**2


def write_density_csv(path, x, density, params: dict):
    with open(path, "w", newline="") as fh:
        fh.write("# " + json.dumps(params, sort_keys=True) + "\n")
        fh.write("x,density\n")
        for a, b in zip(x, density):
            fh.write(f"{float(a)!r},{float(b)!r}\n")


def write_distribution_csv(path, dist: ModularDistribution, params: dict):
    edges = dist.bin_edges
    with open(path, "w", newline="") as fh:
        fh.write("# " + json.dumps(params, sort_keys=True) + "\n")
        fh.write("bin,p_lo,p_hi,mass\n")
        for j, m in enumerate(dist.masses):
            fh.write(f"{j},{float(edges[j])!r},{float(edges[j + 1])!r},{float(m)!r}\n")
