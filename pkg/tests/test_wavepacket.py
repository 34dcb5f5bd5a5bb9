import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ocscatter.corpus import standard_cases
from ocscatter.potential import make_spec
from ocscatter.transfer import spectrum
from ocscatter.wavepacket import (
    GridResolutionError,
    LeakageError,
    PacketSynthesizer,
    epoch_of,
    expectations,
    gaussian_amplitude,
    gaussian_leakage,
    packet_grid,
    split_step_evolve,
    subprocess_overlap,
    synthesize_full,
    synthesize_subprocess,
)

FREE = make_spec()


@pytest.fixture(scope="module")
def sym():
    case = standard_cases()["symmetric"]
    A = gaussian_amplitude(case.k0, case.l, case.L)
    return case, PacketSynthesizer(case.spec, A, t_max=case.t_grid[-1])


def test_leakage_rejected():
    assert gaussian_leakage(1.0, 0.5) > 0.1
    with pytest.raises(LeakageError):
        gaussian_amplitude(1.0, 0.5, 10.0)


def test_bad_k_grids_rejected():
    with pytest.raises(ValueError):
        gaussian_amplitude(2.0, 10.0, 60.0, k_grid=np.linspace(-0.1, 3, 50))
    with pytest.raises(ValueError):
        gaussian_amplitude(2.0, 10.0, 60.0, k_grid=np.linspace(3, 0.1, 50))


def test_geometry_warning():
    with pytest.warns(UserWarning, match="well separated"):
        gaussian_amplitude(2.0, 10.0, 20.0, barrier_width=2.0)


def test_default_grid_clipped_above_zero():
    with pytest.warns(UserWarning, match="clipped"):
        A = gaussian_amplitude(1.0, 8.0, 60.0)
    assert A.k_grid[0] > 0
    assert A.mean_k() == pytest.approx(1.0, abs=1e-10)


def test_amplitude_moments():
    A = gaussian_amplitude(2.0, 10.0, 60.0)
    assert A.norm2() == pytest.approx(1.0, abs=1e-14)
    assert A.mean_k() == pytest.approx(2.0, abs=1e-12)


def test_free_packet_moments():
    A = gaussian_amplitude(2.0, 10.0, 60.0)
    synth = PacketSynthesizer(FREE, A, t_max=30.0)
    for t in (0.0, 10.0, 30.0):
        p = synth.packet("full", t, derivative=True)
        assert p.norm == pytest.approx(1.0, abs=1e-8)
        e = expectations(p)
        assert e.mean_x == pytest.approx(-60.0 + 4.0 * t, abs=1e-6)
        # sigma_x^2 = (l/2)^2 + (hbar t / (m l))^2
        assert e.var_x == pytest.approx(25.0 + (0.2 * t) ** 2, rel=1e-6)
        assert e.mean_p == pytest.approx(2.0, abs=1e-8)
        assert e.var_p == pytest.approx(0.01, rel=1e-5)


def test_fft_momentum_on_uniform_grid():
    A = gaussian_amplitude(2.0, 10.0, 20.0)
    x = np.linspace(-80, 40, 4097)
    p = synthesize_full(FREE, A, 0.0, x)
    e = expectations(p)
    assert e.mean_p == pytest.approx(2.0, abs=1e-8)
    assert e.mean_x == pytest.approx(-20.0, abs=1e-6)


def test_superposition_is_linear():
    spec = make_spec([(-1, 1, 2)])
    k = np.linspace(1.0, 3.0, 256)
    a = gaussian_amplitude(2.0, 10.0, 60.0, k_grid=k)
    b = gaussian_amplitude(2.0, 10.0, 40.0, k_grid=k)
    c = a.combine(b, 0.3, 0.7j)
    grid = packet_grid(-150, 150, (-1, 0, 1), 0.05)
    f = lambda amp: PacketSynthesizer(spec, amp, grid).values("full", 12.0)[0]  # noqa: E731
    np.testing.assert_allclose(f(c), 0.3 * f(a) + 0.7j * f(b), atol=1e-10)


def test_coarse_grid_rejected():
    A = gaussian_amplitude(2.0, 10.0, 60.0)
    with pytest.raises(GridResolutionError):
        PacketSynthesizer(make_spec([(-1, 1, 4)]), A, t_max=10.0, step=1.0)


def test_simpson_grid_weights():
    g = packet_grid(-3.0, 5.0, (-1.0, 0.3, 1.0), 0.1)
    for b in (-1.0, 0.3, 1.0):
        assert np.any(g.x == b)
    f = g.x ** 3 - 2 * g.x
    assert g.integrate(f).real == pytest.approx((5**4 - 3**4) / 4 - (25 - 9), rel=1e-13)
    assert np.sum(g.weights_between(hi=0.3)) == pytest.approx(3.3, rel=1e-14)
    with pytest.raises(ValueError):
        g.weights_between(hi=0.5)


def test_spectral_norms_converge_in_k():
    spec = standard_cases()["asymmetric"].spec

    def t_bar(n):
        A = gaussian_amplitude(1.3, 14.0, 70.0, n=n)
        return A.integrate(spectrum(spec, A.k_grid).T).real

    assert abs(t_bar(512) - t_bar(1024)) <= 1e-7


def test_symmetric_history(sym):
    case, synth = sym
    hist = synth.history(case.t_grid)
    norms = synth.spectral_norms()
    assert norms.t_bar + norms.r_bar == pytest.approx(1.0, abs=1e-12)
    assert np.max(np.abs(hist.norm_full - 1)) < 1e-6
    assert hist.epoch[0] == "pre" and hist.epoch[-1] == "post"
    late = hist.asymptotic() & (hist.t > 0)
    assert np.max(np.abs(hist.norm_tr[late] - norms.t_bar)) < 1e-6
    assert np.max(np.abs(hist.subprocess_deviation())) > 1e-3
    assert hist.mean_x_tr[-1] > case.spec.x2
    assert hist.mean_x_ref[-1] < case.spec.x1


def test_overlap_matches_in_both_representations(sym):
    _, synth = sym
    ov = synth.overlap_spectral()
    assert abs(ov.real) < 1e-12
    assert abs(synth.overlap_x(0.0) - ov) < 1e-6


def test_subprocess_packets_sum_to_full(sym):
    _, synth = sym
    tr, ref = synth.values("tr", 15.0)[0], synth.values("ref", 15.0)[0]
    np.testing.assert_allclose(tr + ref, synth.values("full", 15.0)[0], atol=1e-14)
    assert np.all(ref[synth.grid.x >= 0.0] == 0)


def test_convenience_wrappers_label_packets():
    spec = make_spec([(-1, 1, 2)])
    A = gaussian_amplitude(2.0, 10.0, 30.0, n=256)
    x = np.linspace(-80, 80, 3201)
    tr = synthesize_subprocess(spec, A, 10.0, "transmitted", x)
    assert tr.label.value == "transmitted"
    with pytest.raises(ValueError):
        synthesize_subprocess(spec, A, 10.0, "sideways", x)


@settings(max_examples=25, deadline=None)
@given(st.floats(-2, 5), st.floats(-2, 5), st.floats(1.0, 2.5))
def test_overlap_bounded_by_half(v1, v2, k0):
    spec = make_spec([(-1, 0, v1), (0, 1, v2)])
    A = gaussian_amplitude(k0, 12.0, 60.0, n=256, span=8.0)
    ov = subprocess_overlap(spec, A)
    assert abs(ov) <= 0.5 + 1e-12
    assert abs(ov.real) <= 1e-12


def test_epochs():
    A = gaussian_amplitude(2.0, 10.0, 60.0)
    spec = make_spec([(-1, 1, 4)])
    assert epoch_of(spec, A, 0.0) == "pre"
    assert epoch_of(spec, A, 15.0) == "interaction"
    assert epoch_of(spec, A, 40.0) == "post"


def test_mu_flip_in_band_warns():
    spec = standard_cases()["asymmetric"].spec
    A = gaussian_amplitude(2.0, 10.0, 60.0)
    with pytest.warns(UserWarning, match="mu changes sign"):
        PacketSynthesizer(spec, A, t_max=5.0)


def test_resonant_flip_does_not_warn(sym):
    case, _ = sym
    A = gaussian_amplitude(case.k0, case.l, case.L)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        PacketSynthesizer(case.spec, A, t_max=1.0)


def test_split_step_agrees_loosely(sym):
    case, synth = sym
    n = 2**13
    x = np.linspace(-160, 160, n, endpoint=False)
    psi0 = synth.in_asymptote(0.0, x)
    psi = split_step_evolve(case.spec, psi0, x, 30.0, 0.01)
    dx = x[1] - x[0]
    t_bar = float(np.sum(np.abs(psi[x > 1]) ** 2) * dx)
    assert t_bar == pytest.approx(synth.spectral_norms().t_bar, abs=5e-3)
    with pytest.raises(ValueError):
        split_step_evolve(make_spec(deltas=[(0, 1)]), psi0, x, 1.0, 0.1)
    assert math.isclose(float(np.sum(np.abs(psi) ** 2) * dx), 1.0, abs_tol=1e-8)
