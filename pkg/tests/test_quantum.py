import numpy as np
import pytest

from conftest import multiset_close
from ptmech.errors import Inconsistent, ValidationError
from ptmech.quantum import (
    InitialMoments,
    NoiseModel,
    Region,
    build_drift,
    conjugation_defect,
    diffusion_matrix,
    drift_from_rates,
    initial_covariance,
    moments_lyapunov,
    phonon_spontaneous,
    phonon_stimulated,
    phonon_total,
    phonons_from_moments,
    propagator,
    propagator_grid,
    stability_spectrum,
)
from ptmech.semiclassical import linearized_generator

FIG8_KW = dict(delta_eff=(-10.0, 10.0), omega=(10.0, 10.0),
               kappa=(1.0, 1.0), gamma=(1e-5, 1e-5), j=0.01)


def fig8_drift(g):
    return drift_from_rates(g_eff=(g, g), **FIG8_KW)


@pytest.fixture(scope="module")
def dm05():
    return fig8_drift(0.05)


@pytest.fixture(scope="module")
def vacuum_noise():
    return NoiseModel(cavity_strength=(1.0, 1.0), brownian_strength=(5e-6, 5e-6))


ONE_PHONON = InitialMoments(n_cavity=(0.0, 0.0), q_sq=(1.5, 1.5), p_sq=(1.5, 1.5))


class TestDriftMatrix:
    def test_verbatim_pattern(self, canonical, canonical_wp):
        dm = build_drift(canonical_wp, canonical)
        g1, g2 = canonical_wp.g_eff
        d1, d2 = canonical_wp.delta_eff
        k1, k2 = canonical.kappa
        w1, w2 = canonical.omega
        gm1, gm2 = canonical.gamma
        j = canonical.j_coupling
        expected = np.array([
            [-(k1 / 2 + 1j * d1), 0, 0, 0, 1j * g1, 0, 0, 0],
            [0, -(k2 / 2 + 1j * d2), 0, 0, 0, 1j * g2, 0, 0],
            [0, 0, -(k1 / 2 - 1j * d1), 0, -1j * np.conj(g1), 0, 0, 0],
            [0, 0, 0, -(k2 / 2 - 1j * d2), 0, -1j * np.conj(g2), 0, 0],
            [0, 0, 0, 0, 0, 0, w1, 0],
            [0, 0, 0, 0, 0, 0, 0, w2],
            [np.conj(g1), 0, g1, 0, -w1, j, -gm1 / 2, 0],
            [0, np.conj(g2), 0, g2, j, -w2, 0, -gm2 / 2],
        ], dtype=complex)
        assert np.array_equal(dm.m, expected)

    def test_conjugation_symmetry_exact(self, canonical, canonical_wp):
        dm = build_drift(canonical_wp, canonical)
        assert conjugation_defect(dm.m) == 0.0

    def test_spectrum_conjugation_closure(self, dm05):
        lam = np.linalg.eigvals(dm05.m)
        assert multiset_close(lam, np.conj(lam), 1e-12 * np.max(np.abs(lam)))

    def test_decoupled_eigenvalues(self):
        dm = drift_from_rates(g_eff=(0.0, 0.0), delta_eff=(-10.0, 10.0),
                              omega=(10.0, 10.0), kappa=(1.0, 1.0),
                              gamma=(1e-5, 1e-5), j=0.0)
        lam = np.linalg.eigvals(dm.m)
        g = 1e-5
        mech = np.sqrt(100.0 - g * g / 16.0)
        expected = [-0.5 + 10j, -0.5 - 10j, -0.5 + 10j, -0.5 - 10j,
                    -g / 4 + 1j * mech, -g / 4 - 1j * mech,
                    -g / 4 + 1j * mech, -g / 4 - 1j * mech]
        assert multiset_close(lam, expected, 1e-10)

    def test_matches_linearized_generator_spectrum(self, canonical, canonical_wp):
        # independent real-form assembly of the same dynamics
        dm = build_drift(canonical_wp, canonical)
        real_gen = linearized_generator(canonical_wp, canonical)
        lam_complex = np.linalg.eigvals(dm.m)
        lam_real = np.linalg.eigvals(real_gen)
        assert multiset_close(lam_complex, lam_real, 1e-10)


class TestStability:
    @pytest.mark.parametrize("g,region", [
        (0.02, Region.STABLE),
        (0.05, Region.QUASI_STABLE),
        (0.08, Region.UNSTABLE),
    ])
    def test_fig8_regions(self, g, region):
        _, found = stability_spectrum(fig8_drift(g))
        assert found is region

    def test_unstable_crossover_at_exceptional_point(self):
        # the quasi->unstable boundary sits where the balanced-model rate
        # reaches twice the mechanical coupling
        lo, hi = 0.05, 0.09
        for _ in range(50):
            mid = 0.5 * (lo + hi)
            _, region = stability_spectrum(fig8_drift(mid))
            if region is Region.UNSTABLE:
                hi = mid
            else:
                lo = mid
        g_star = 0.5 * (lo + hi)
        gamma_eff = 4.0 * g_star ** 2 * 1600.0 / 1601.0
        assert gamma_eff == pytest.approx(0.02, rel=0.02)


class TestPropagator:
    def test_identity_at_zero(self, dm05):
        assert np.array_equal(propagator(dm05, 0.0), np.eye(8, dtype=complex))

    def test_short_time_series(self, dm05):
        t = 1e-6
        k = propagator(dm05, t)
        m = dm05.m
        assert np.max(np.abs(k - (np.eye(8) + m * t + m @ m * t * t / 2))) < 1e-10
        assert np.max(np.abs(k - (np.eye(8) + m * t))) < 1e-9

    def test_semigroup(self, dm05):
        k1 = propagator(dm05, 1.0)
        k2 = propagator(dm05, 2.0)
        assert np.max(np.abs(k1 @ k1 - k2)) < 1e-9 * np.max(np.abs(k2))

    def test_grid_matches_pade(self, dm05):
        ts = np.array([0.0, 0.7, 3.1])
        grid = propagator_grid(dm05, ts)
        for k, t in enumerate(ts):
            assert np.max(np.abs(grid[k] - propagator(dm05, t))) < 1e-9

    def test_negative_time_rejected(self, dm05):
        with pytest.raises(ValidationError):
            propagator(dm05, -1.0)


class TestStimulated:
    def test_one_phonon_start(self, dm05):
        assert phonon_stimulated(dm05, ONE_PHONON, 0.0) == pytest.approx([1.0, 1.0])

    def test_vacuum_start(self, dm05):
        vac = InitialMoments()
        assert phonon_stimulated(dm05, vac, 0.0) == pytest.approx([0.0, 0.0])

    def test_oscillates_non_monotonically(self, dm05):
        ts = np.linspace(0.0, 400.0, 160)
        n_st = phonon_stimulated(dm05, ONE_PHONON, ts)
        d = np.diff(n_st[:, 0])
        assert np.any(d > 0) and np.any(d < 0)

    def test_moment_validation(self):
        with pytest.raises(ValidationError):
            InitialMoments(q_sq=(0.3, 1.5))

    def test_broken_symmetry_flagged(self, dm05):
        m = dm05.m.copy()
        m[0, 4] = 1j * 0.05
        m[2, 4] = 1j * 0.02  # not the conjugate anymore
        bad = drift_from_rates((0.05, 0.05), **FIG8_KW)
        object.__setattr__(bad, "m", m)
        with pytest.raises(Inconsistent):
            phonon_stimulated(bad, ONE_PHONON, 5.0)


class TestSpontaneous:
    def test_zero_at_t0(self, dm05, vacuum_noise):
        n_sp, n_cm, n_mr = phonon_spontaneous(dm05, vacuum_noise, 0.0)
        assert np.all(n_sp == 0.0) and np.all(n_cm == 0.0) and np.all(n_mr == 0.0)

    def test_monotone_nondecreasing(self, dm05, vacuum_noise):
        ts = np.linspace(0.0, 120.0, 49)
        n_sp, _, _ = phonon_spontaneous(dm05, vacuum_noise, ts)
        assert np.all(np.diff(n_sp, axis=0) >= -1e-15)

    def test_cavity_noise_dominates_cold_bath(self, dm05, vacuum_noise):
        ts = np.linspace(5.0, 120.0, 24)
        _, n_cm, n_mr = phonon_spontaneous(dm05, vacuum_noise, ts)
        assert np.all(n_cm / n_mr > 10.0)

    def test_hot_bath_comparable(self, dm05):
        hot = NoiseModel(cavity_strength=(1.0, 1.0),
                         brownian_strength=(1e-5 * 1000.5,) * 2)
        ts = np.linspace(5.0, 120.0, 24)
        _, n_cm, n_mr = phonon_spontaneous(dm05, hot, ts)
        ratio = n_mr / n_cm
        assert np.all(ratio > 0.05) and np.all(ratio < 20.0)


class TestTotals:
    def test_additivity_exact(self, dm05, vacuum_noise):
        ts = np.linspace(0.0, 60.0, 7)
        bd = phonon_total(dm05, ONE_PHONON, vacuum_noise, ts)
        assert np.array_equal(bd.n_tt, bd.n_st + bd.n_sp)
        assert np.array_equal(bd.n_sp, bd.n_cm + bd.n_mr)

    def test_spontaneous_dominates_late(self, dm05, vacuum_noise):
        # derived crossover: noise phonons overtake both resonators near
        # t ~ 650 at this drive and stay dominant
        ts = np.linspace(50.0, 1200.0, 24)
        bd = phonon_total(dm05, ONE_PHONON, vacuum_noise, ts)
        ratio = bd.n_sp / bd.n_tt
        both = np.all(ratio > 0.5, axis=1)
        assert both[-1]
        crossover = ts[np.argmax(both)]
        assert 300.0 < crossover < 1200.0

    def test_unstable_growth_rate_tracks_spectrum(self, vacuum_noise):
        dm = fig8_drift(0.08)
        lam_max, region = stability_spectrum(dm)
        assert region is Region.UNSTABLE
        ts = np.linspace(500.0, 1000.0, 26)
        bd = phonon_total(dm, ONE_PHONON, vacuum_noise, ts)
        for values in (bd.n_st[:, 0], bd.n_sp[:, 0]):
            slope = np.polyfit(ts, np.log(values), 1)[0]
            assert slope == pytest.approx(2.0 * lam_max, rel=0.05)

    def test_large_initial_phonons_dwarf_noise(self, dm05):
        hot = NoiseModel(cavity_strength=(1.0, 1.0),
                         brownian_strength=(1e-5 * 1000.5,) * 2)
        big = InitialMoments(q_sq=(100.5, 100.5), p_sq=(100.5, 100.5))
        ts = np.linspace(10.0, 200.0, 10)
        bd = phonon_total(dm05, big, hot, ts)
        assert np.all(bd.n_sp / bd.n_tt < 0.1)

    def test_stable_region_saturates(self):
        # use a strongly damped bath so the decay time 1/(2|lam_max|) fits
        # inside the run; the weakly damped canonical point converges too,
        # but only on a ~1e5 timescale
        dm = drift_from_rates(g_eff=(0.02, 0.02), delta_eff=(-10.0, 10.0),
                              omega=(10.0, 10.0), kappa=(1.0, 1.0),
                              gamma=(0.01, 0.01), j=0.01)
        lam_max, region = stability_spectrum(dm)
        assert region is Region.STABLE and lam_max < -1e-3
        noise = NoiseModel(cavity_strength=(1.0, 1.0),
                           brownian_strength=(0.005, 0.005))
        ts = np.array([800.0, 1000.0, 1200.0])
        bd = phonon_total(dm, ONE_PHONON, noise, ts)
        growth = (bd.n_sp[-1, 0] - bd.n_sp[0, 0]) / bd.n_sp[-1, 0]
        assert 0.0 <= growth < 0.05
        assert np.max(np.abs(np.diff(bd.n_st[:, 0]))) < 0.03


class TestLyapunovOracle:
    def test_initial_covariance_structure(self):
        s0 = initial_covariance(ONE_PHONON)
        assert s0[0, 0] == 1.0 and s0[2, 2] == 0.0
        assert s0[4, 4] == 1.5 and s0[6, 6] == 1.5
        assert s0[4, 6] == 0.5j and s0[6, 4] == -0.5j
        assert np.max(np.abs(s0 - s0.conj().T)) == 0.0

    def test_homogeneous_case_equals_stimulated(self, dm05):
        no_noise = NoiseModel(cavity_strength=(0.0, 0.0),
                              brownian_strength=(0.0, 0.0))
        ts = np.array([10.0, 40.0])
        s = moments_lyapunov(dm05, no_noise, initial_covariance(ONE_PHONON), ts)
        n_direct = phonon_stimulated(dm05, ONE_PHONON, ts)
        n_lyap = phonons_from_moments(s)
        assert np.max(np.abs(n_direct - n_lyap)) < 1e-9
        # the homogeneous solution is K S0 K+
        k = propagator(dm05, 40.0)
        assert np.max(np.abs(s[-1] - k @ initial_covariance(ONE_PHONON)
                             @ k.conj().T)) < 1e-8

    def test_full_equivalence_short_horizon(self, dm05, vacuum_noise):
        ts = np.array([20.0, 60.0, 100.0])
        bd = phonon_total(dm05, ONE_PHONON, vacuum_noise, ts, quad_tol=1e-9)
        s = moments_lyapunov(dm05, vacuum_noise, initial_covariance(ONE_PHONON), ts)
        n_lyap = phonons_from_moments(s)
        assert np.max(np.abs(bd.n_tt - n_lyap) / np.abs(n_lyap)) < 1e-6

    def test_moments_stay_physical(self, dm05, vacuum_noise):
        ts = np.linspace(0.0, 50.0, 6)
        s = moments_lyapunov(dm05, vacuum_noise, initial_covariance(ONE_PHONON), ts)
        for k in range(ts.size):
            assert np.max(np.abs(s[k] - s[k].conj().T)) < 1e-9
            assert s[k, 4, 4].real >= 0.5 - 1e-9
            assert s[k, 6, 6].real >= 0.5 - 1e-9

    def test_diffusion_layout(self, vacuum_noise):
        d = diffusion_matrix(vacuum_noise)
        assert d[0, 0] == 1.0 and d[1, 1] == 1.0
        assert d[6, 6] == 5e-6 and d[7, 7] == 5e-6
        assert np.count_nonzero(d) == 4
