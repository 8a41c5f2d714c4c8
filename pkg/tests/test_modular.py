import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from twinmz.modular import (
    DomainError,
    OverlapWarning,
    close_slit,
    complete_uncertainty_check,
    evolved_gaussian,
    free_evolve,
    make_single_packet,
    make_two_slit_state,
    modular_distribution,
    packet_doubling_time,
    translate_expectation,
    write_distribution_csv,
)

ELL, SIGMA = 20.0, 2.0


@pytest.fixture(scope="module")
def single():
    return make_single_packet(ELL, SIGMA)


@pytest.fixture(scope="module")
def two_slit():
    return make_two_slit_state(ELL, SIGMA, 0.0)


def test_normalized(two_slit):
    assert two_slit.packet.norm2() == pytest.approx(1.0, abs=1e-10)


def test_reflection_symmetry(two_slit):
    psi = two_slit.packet
    x = psi.x
    # x -> ell - x maps the grid onto itself for this grid and ell
    j = np.round((ELL - x - x[0]) / psi.dx).astype(int)
    ok = (j >= 0) & (j < psi.n)
    assert np.allclose(psi.values[ok], np.conj(psi.values[j[ok]]), atol=1e-12)


def test_packet_overlap_small():
    x = np.linspace(-40, 60, 200001)
    g = lambda c: np.exp(-((x - c) ** 2) / (4 * SIGMA**2)) / (2 * np.pi * SIGMA**2) ** 0.25
    assert np.trapezoid(g(0) * g(ELL), x) <= 4e-6
    assert math.exp(-(ELL**2) / (8 * SIGMA**2)) == pytest.approx(math.exp(-12.5))


def test_overlap_guard():
    with pytest.raises(ValueError):
        make_two_slit_state(10.0, 2.0)
    with pytest.warns(OverlapWarning):
        make_two_slit_state(10.0, 2.0, allow_overlap=True)


def test_domain_guard():
    with pytest.raises(DomainError):
        make_two_slit_state(ELL, SIGMA, length=30.0)


def direct_quadrature(state, shift):
    # oracle: evaluate the closed-form packets at x - shift on the same grid
    x = state.packet.x
    a, b = state.weights
    def psi(y):
        return a * np.exp(-((y - ELL) ** 2) / (4 * SIGMA**2)) + b * np.exp(1j * state.alpha) * np.exp(-(y**2) / (4 * SIGMA**2))
    norm = np.sum(np.abs(psi(x)) ** 2)
    return np.sum(np.conj(psi(x)) * psi(x - shift)) / norm


@pytest.mark.parametrize("alpha", [0.0, 1.0, -2.5, math.pi / 3])
def test_two_slit_translation(alpha):
    st_ = make_two_slit_state(ELL, SIGMA, alpha)
    t = translate_expectation(st_, ELL)
    assert abs(t - np.exp(1j * alpha) / 2) < 1e-4
    assert abs(np.angle(t) - alpha) < 1e-3
    assert t == pytest.approx(direct_quadrature(st_, ELL), abs=1e-9)


def test_single_packet_moments(single):
    for n in range(1, 9):
        assert abs(translate_expectation(single, ELL, n)) <= 1e-5


def test_zero_distance(two_slit):
    assert translate_expectation(two_slit, 0.0) == 1.0


def test_shift_outside_domain(two_slit):
    with pytest.raises(DomainError):
        translate_expectation(two_slit, ELL, 20)


def test_single_packet_uniform(single):
    dist = modular_distribution(single, ELL)
    assert dist.masses.sum() == pytest.approx(1.0, abs=1e-10)
    assert np.all(dist.masses >= 0)
    assert dist.uniformity_deviation() <= 1e-4


def test_fold_agrees_with_dense_oracle(two_slit):
    # analytic momentum density of the two-slit state, folded on a fine grid
    p = np.linspace(-6, 6, 1_200_001)
    amp = np.exp(-(SIGMA**2) * p**2) * (np.exp(-1j * p * ELL) + 1)
    dens = np.abs(amp) ** 2
    period = 2 * np.pi / ELL
    idx = np.floor(np.mod(p / period, 1.0) * 64).astype(int) % 64
    oracle = np.bincount(idx, weights=dens, minlength=64)
    oracle /= oracle.sum()
    assert np.allclose(modular_distribution(two_slit, ELL).masses, oracle, atol=1e-4)


def test_two_slit_not_uniform(two_slit):
    assert modular_distribution(two_slit, ELL).max_min_ratio() > 1.5


@settings(max_examples=15)
@given(st.integers(-200, 200))
def test_translation_leaves_fold_unchanged(k):
    state = make_two_slit_state(ELL, SIGMA, 0.7)
    moved = state.packet.translated(k * state.packet.dx)
    a = modular_distribution(state, ELL).masses
    b = modular_distribution(moved, ELL).masses
    assert np.allclose(a, b, atol=1e-12)


def test_complete_uncertainty(single, two_slit):
    assert complete_uncertainty_check(single, ELL).is_completely_uncertain
    rep = complete_uncertainty_check(two_slit, ELL)
    assert not rep.is_completely_uncertain
    assert rep.overlaps[0] == pytest.approx(0.5, abs=1e-4)
    assert complete_uncertainty_check(two_slit, ELL, eps=1.0 + 1e-9).is_completely_uncertain


@pytest.mark.parametrize("alpha", [0.0, 1.0])
def test_conservation_under_free_evolution(alpha):
    st_ = make_two_slit_state(ELL, SIGMA, alpha)
    t0 = translate_expectation(st_, ELL)
    tau = packet_doubling_time(SIGMA)
    for t in np.linspace(0, tau, 5):
        out = free_evolve(st_, t)
        assert out.norm2() == pytest.approx(1.0, abs=1e-10)
        assert abs(translate_expectation(out, ELL) - t0) <= 1e-8


def test_free_evolution_matches_analytic(single):
    t = 10.0
    out = free_evolve(single, t)
    ref = evolved_gaussian(out.x, 0.0, SIGMA, t)
    assert np.max(np.abs(out.values - ref)) < 1e-8


def test_overflow_detected(single):
    with pytest.raises(DomainError):
        free_evolve(single, 5000.0)
    with pytest.raises(ValueError):
        free_evolve(single, -1.0)


def test_close_slit(two_slit):
    one = close_slit(two_slit, "left")
    assert one.norm2() == pytest.approx(1.0)
    assert complete_uncertainty_check(one, ELL).max_overlap < 1e-5
    again = close_slit(one, "left", ELL)
    assert np.allclose(again.values, one.values)


def test_close_slit_fringes_vanish(two_slit):
    t = 40.0
    closed = free_evolve(close_slit(two_slit, "left"), t)
    ref = np.abs(evolved_gaussian(closed.x, 0.0, SIGMA, t)) ** 2
    assert np.max(np.abs(closed.density() - ref)) / ref.max() < 1e-3


def test_distribution_csv(tmp_path, single):
    path = tmp_path / "d.csv"
    write_distribution_csv(path, modular_distribution(single, ELL), {"ell": ELL})
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# ") and lines[1] == "bin,p_lo,p_hi,mass" and len(lines) == 66
