import math

import numpy as np
import pytest
import scipy.linalg

from ptmech.errors import Diverged, InsufficientPeaks, StepTooLarge, ValidationError
from ptmech.model import canonical_params, solve_steady_state
from ptmech.semiclassical import (
    ClassicalState,
    ReducedState,
    TimeSeries,
    fit_envelope_rate,
    integrate_full,
    integrate_linearized,
    integrate_reduced,
    linearized_generator,
    peak_envelope,
)


def synthetic_series(rate, omega=10.0, t_max=100.0, dt=2 * math.pi / 1000.0):
    t = np.arange(0.0, t_max, dt)
    v = np.exp(rate * t) * np.cos(omega * t)
    rows = np.column_stack([v, v, v, v])
    return TimeSeries(t, rows, {"tier": "reduced",
                                "columns": ["q1", "p1", "q2", "p2"]})


class TestEnvelopeFit:
    @pytest.mark.parametrize("rate", [0.01, -0.01])
    def test_synthetic_exponential(self, rate):
        series = synthetic_series(rate)
        fitted = fit_envelope_rate(series, "q1", (0.0, 100.0))
        assert fitted == pytest.approx(rate, rel=0.01)

    def test_constant_sinusoid(self):
        series = synthetic_series(0.0)
        assert abs(fit_envelope_rate(series, "q1", (0.0, 100.0))) < 1e-6

    def test_insufficient_peaks(self):
        series = synthetic_series(0.0)
        with pytest.raises(InsufficientPeaks):
            fit_envelope_rate(series, "q1", (0.0, 1.2))

    def test_window_outside_series(self):
        series = synthetic_series(0.0)
        with pytest.raises(ValidationError):
            fit_envelope_rate(series, "q1", (0.0, 500.0))

    def test_peak_envelope_offset_signal(self):
        t = np.arange(0.0, 50.0, 0.005)
        v = 3.0 + 2.0 * np.cos(10.0 * t)
        times, heights = peak_envelope(t, v)
        # the window mean removes the offset up to the fractional-period bias
        assert np.allclose(heights, 2.0, rtol=3e-3)


class TestFullTier:
    def test_zero_drive_stays_zero(self):
        params = canonical_params(drive=0.0, j_coupling=0.0)
        series = integrate_full(params, ClassicalState(), 5.0)
        assert np.all(series.rows == 0.0)

    def test_transient_amplitude_about_50(self, canonical):
        series = integrate_full(canonical, ClassicalState(), 12.0, stride=1)
        mask = (series.t > 3.0) & (series.t < 12.0)
        q1 = series.channel("q1")[mask]
        amp = np.max(np.abs(q1 - q1.mean()))
        assert 35.0 < amp < 65.0

    def test_envelope_rates_quarter_gamma(self):
        # the p-gain coefficient (rate - gamma)/2 shows up as displacement
        # envelope rate (rate - gamma)/4
        params = canonical_params(j_coupling=0.0)
        wp = solve_steady_state(params)
        series = integrate_full(params, ClassicalState(), 800.0)
        grow = fit_envelope_rate(series, "q1", (60.0, 780.0))
        decay = fit_envelope_rate(series, "q2", (60.0, 780.0))
        assert grow == pytest.approx(0.25 * (wp.rate[0] - params.gamma[0]), rel=0.03)
        assert decay == pytest.approx(-0.25 * (wp.rate[1] + params.gamma[1]), rel=0.03)

    def test_intensity_columns(self, canonical):
        series = integrate_full(canonical, ClassicalState(), 2.0)
        i1 = series.channel("re_a1") ** 2 + series.channel("im_a1") ** 2
        assert np.allclose(series.channel("I1"), i1, rtol=1e-14)

    def test_step_too_large(self, canonical):
        with pytest.raises(StepTooLarge):
            integrate_full(canonical, ClassicalState(), 10.0, dt=0.1)


class TestLinearizedTier:
    def test_decoupled_cavity_decay(self):
        params = canonical_params(drive=0.0, j_coupling=0.0)
        wp = solve_steady_state(params)  # zero working point, G = 0
        init = ClassicalState(a=(1.0 + 0.0j, 0.0j))
        series = integrate_linearized(wp, params, init, 6.0)
        amp = np.hypot(series.channel("re_a1"), series.channel("im_a1"))
        assert np.allclose(amp, np.exp(-0.5 * series.t), rtol=1e-4)

    def test_grows_without_bound_unlike_full(self):
        params = canonical_params(j_coupling=0.0)
        wp = solve_steady_state(params)
        init = ClassicalState(q=(50.0, 0.0))
        with pytest.raises(Diverged):
            integrate_linearized(wp, params, init, 12500.0, stride=100)

    def test_frequency_shift_oracle(self):
        # adiabatic-elimination cross-check: the linearized mechanical line
        # sits at sqrt(w (w + shift)), not at the bare w
        params = canonical_params(j_coupling=0.0)
        wp = solve_steady_state(params)
        init = ClassicalState(q=(0.0, 1.0))
        series = integrate_linearized(wp, params, init, 1500.0)
        mask = series.t >= 10.0
        times, _ = peak_envelope(series.t[mask], series.channel("q2")[mask])
        # phase advances pi between consecutive |q| peaks
        freq = math.pi / np.polyfit(np.arange(times.size), times, 1)[0]
        expected = math.sqrt(params.omega[1] * (params.omega[1] - wp.spring_shift[1]))
        assert abs(freq - expected) < 0.15 * wp.spring_shift[1]
        assert abs(freq - params.omega[1]) > 0.3 * wp.spring_shift[1]


class TestReducedTier:
    def test_uncoupled_energy_conservation(self):
        init = ReducedState(q=(1.0, 0.0), p=(0.0, 0.5))
        period = 2 * math.pi / 10.0
        series = integrate_reduced(0.0, 10.0, 0.0, init, 1000 * period,
                                   dt=period / 800)
        energy = 0.5 * (series.channel("q1") ** 2 + series.channel("p1") ** 2)
        assert np.max(np.abs(energy - energy[0])) < 1e-8

    def test_beat_frequency_from_spectrum_peaks(self):
        init = ReducedState(q=(50.0, 50.0), p=(0.0, 0.0))
        series = integrate_reduced(0.01, 10.0, 0.01, init, 4000.0)
        q1 = series.channel("q1")
        n = 1 << 21
        spec = np.abs(np.fft.rfft(q1 * np.hanning(q1.size), n))
        freqs = 2 * math.pi * np.fft.rfftfreq(n, series.t[1] - series.t[0])
        band = np.nonzero((freqs > 9.9) & (freqs < 10.1))[0]
        s = spec[band]
        local_max = band[1:-1][(s[1:-1] > s[:-2]) & (s[1:-1] >= s[2:])]
        top2 = sorted(local_max, key=lambda i: spec[i])[-2:]
        line_freqs = []
        for i in top2:
            y0, y1, y2 = spec[i - 1], spec[i], spec[i + 1]
            shift = 0.5 * (y0 - y2) / (y0 - 2 * y1 + y2)
            line_freqs.append(freqs[i] + shift * (freqs[1] - freqs[0]))
        beat = abs(line_freqs[1] - line_freqs[0])
        # frozen eigensplit of the balanced 4x4 at gamma_eff = J
        assert beat == pytest.approx(0.008660255, rel=0.02)

    def test_pt_transformation_invariance(self):
        # forward, swap+flip, forward again returns the swapped start
        init = ReducedState(q=(1.0, 0.5), p=(0.3, -0.2))
        t_span, dt = 50.0, 5e-4
        fwd = integrate_reduced(0.01, 10.0, 0.01, init, t_span, dt=dt, stride=100000)
        q1, p1, q2, p2 = fwd.rows[-1]
        transformed = ReducedState(q=(q2, q1), p=(-p2, -p1))
        back = integrate_reduced(0.01, 10.0, 0.01, transformed, t_span, dt=dt,
                                 stride=100000)
        expected = np.array([init.q[1], -init.p[1], init.q[0], -init.p[0]])
        assert np.max(np.abs(back.rows[-1] - expected)) < 1e-8

    def test_broken_phase_diverges(self):
        init = ReducedState(q=(200.0, 200.0))
        with pytest.raises(Diverged):
            integrate_reduced(0.04, 10.0, 0.01, init, 4000.0, stride=100)

    def test_shift_asymmetry_destroys_symmetry(self):
        # with equal shifts the two mirrors drift apart over long runs
        init = ReducedState(q=(90.0, 90.0))
        shifted = integrate_reduced(0.018, 10.0, 0.01, init, 6000.0,
                                    shift=(2.25e-5, 2.25e-5))
        ideal = integrate_reduced(0.018, 10.0, 0.01, init, 6000.0)
        d = np.abs(shifted.channel("q1") - ideal.channel("q1"))
        scale = np.max(np.abs(ideal.channel("q1")))
        late = np.max(d[shifted.t > 5000.0]) / scale
        early = np.max(d[shifted.t < 1000.0]) / scale
        assert late > 3.0 * early > 0.0


class TestConvergence:
    def test_rk4_order_against_matrix_exponential(self, canonical, canonical_wp):
        gen = linearized_generator(canonical_wp, canonical)
        y0 = ClassicalState(q=(1.0, -0.5), p=(0.2, 0.1))
        t_end = 2.0
        exact = scipy.linalg.expm(gen * t_end) @ y0.vector()
        errs = []
        for dt in (2e-3, 1e-3):
            series = integrate_linearized(canonical_wp, canonical, y0, t_end,
                                          dt=dt, stride=int(round(t_end / dt)))
            errs.append(np.max(np.abs(series.rows[-1, :8] - exact)))
        assert 12.0 < errs[0] / errs[1] < 20.0


class TestTimeSeries:
    def test_strictly_increasing_required(self):
        with pytest.raises(ValidationError):
            TimeSeries(np.array([0.0, 0.0, 1.0]), np.zeros((3, 2)),
                       {"columns": ["a", "b"]})

    def test_unknown_channel(self):
        series = synthetic_series(0.0)
        with pytest.raises(ValidationError):
            series.channel("nope")

    def test_window(self):
        series = synthetic_series(0.0)
        sub = series.window(10.0, 20.0)
        assert sub.t[0] >= 10.0 and sub.t[-1] <= 20.0


class TestAdaptiveMethod:
    def test_reduced_dopri_matches_rk4(self):
        init = ReducedState(q=(1.0, 0.5), p=(0.0, 0.0))
        fixed = integrate_reduced(0.01, 10.0, 0.01, init, 20.0, dt=2e-4,
                                  stride=100000)
        adaptive = integrate_reduced(0.01, 10.0, 0.01, init, 20.0,
                                     method="dopri54", rtol=1e-11)
        assert adaptive.t[-1] == pytest.approx(20.0, abs=1e-12)
        assert np.max(np.abs(adaptive.rows[-1] - fixed.rows[-1])) < 1e-7

    def test_full_dopri_matches_rk4(self, canonical):
        fixed = integrate_full(canonical, ClassicalState(), 2.0, dt=1e-3,
                               stride=2000)
        adaptive = integrate_full(canonical, ClassicalState(), 2.0,
                                  method="dopri54", rtol=1e-10)
        assert np.max(np.abs(adaptive.rows[-1] - fixed.rows[-1])) \
            < 1e-5 * np.max(np.abs(fixed.rows[-1]))
