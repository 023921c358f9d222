import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import adaptive_simpson, sample_aligned_amplitude
from risnoma.analytic import (
    MgfParams,
    NumericalWarning,
    SubstitutionMode,
    _clamp,
    mgf_ris_snr,
    pe_fu_conventional,
    pe_fu_ris,
    pe_mpsk,
    pe_nu_conventional,
    pe_nu_ris,
    pe_nu_sic_exact,
    pe_upper_bound,
)
from risnoma.phy import PowerSplit, UserBits, detect_nu_sic, superpose
from risnoma.special import gauss_legendre_half_pi

CONS = SubstitutionMode.CONSISTENT
LIT = SubstitutionMode.LITERAL
UNIT = math.sqrt(0.5)


def q_ref(x):
    return 0.5 * math.erfc(x / math.sqrt(2.0))


def noncentral_mgf(n, gbar, s):
    # X ~ N(mu, v) with unit-power Rayleigh taps; E[exp(s X^2 gbar)]
    mu = n * math.pi / 4.0
    v = n * (1.0 - math.pi ** 2 / 16.0)
    d = 1.0 - 2.0 * s * v * gbar
    return math.exp(s * mu * mu * gbar / d) / math.sqrt(d)


def gaussian_average_q(n, gbar):
    """E[Q(|X| sqrt(2 gbar))] for the Gaussian amplitude model, by direct integration."""
    mu = n * math.pi / 4.0
    sd = math.sqrt(n * (1.0 - math.pi ** 2 / 16.0))

    def f(x):
        pdf = math.exp(-0.5 * ((x - mu) / sd) ** 2) / (sd * math.sqrt(2 * math.pi))
        return pdf * q_ref(abs(x) * math.sqrt(2.0 * gbar))

    lo, hi = mu - 14 * sd, mu + 14 * sd
    if lo < 0 < hi:
        return adaptive_simpson(f, lo, 0.0, 1e-14) + adaptive_simpson(f, 0.0, hi, 1e-14)
    return adaptive_simpson(f, lo, hi, 1e-14)


class TestMgf:
    @pytest.mark.parametrize("n,gbar", [(1, 0.3), (16, 1.0), (64, 100.0)])
    def test_zero_argument(self, n, gbar):
        assert mgf_ris_snr(MgfParams(n, gbar, 0.0)) == 1.0

    def test_vanishing_snr(self):
        assert mgf_ris_snr(MgfParams(1, 1e-14, -1.0)) == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("n,gbar,s", [(1, 0.5, -2.0), (16, 0.01, -0.1), (32, 3.0, -0.7),
                                          (8, 0.2, 0.05)])
    def test_matches_noncentral_chi_square(self, n, gbar, s):
        assert mgf_ris_snr(MgfParams(n, gbar, s)) == pytest.approx(noncentral_mgf(n, gbar, s),
                                                                  rel=1e-13)

    def test_pole(self):
        p = MgfParams(4, 1.0, 1.0)
        assert p.denominator < 0
        with pytest.raises(ValueError):
            mgf_ris_snr(p)

    def test_large_negative_argument(self):
        # exponent saturates at -mu^2 / (2 v) while the prefactor decays
        n, gbar, s = 256, 1e6, -1e3
        v = n * (1 - math.pi ** 2 / 16)
        d = 1 - 2 * s * v * gbar
        expected = math.exp(-(n * math.pi / 4) ** 2 / (2 * v)) / math.sqrt(d)
        assert mgf_ris_snr(MgfParams(n, gbar, s)) == pytest.approx(expected, rel=1e-9)

    def test_param_validation(self):
        with pytest.raises(ValueError):
            MgfParams(0, 1.0, -1.0)
        with pytest.raises(ValueError):
            MgfParams(4, -1.0, -1.0)

    @pytest.mark.parametrize("n", [16, 32, 64])
    def test_empirical_mgf(self, n, rng):
        gbar = 0.01
        a = sample_aligned_amplitude(n, 10 ** 6, rng)
        for s in (-0.05, -0.1, -0.2):
            emp = np.mean(np.exp(s * a * a * gbar))
            assert abs(mgf_ris_snr(MgfParams(n, gbar, s)) / emp - 1) <= 0.02

    @pytest.mark.xfail(strict=True, reason="Gaussian amplitude model misses the lower tail "
                                           "that dominates exp(s*gamma) once |s|*E[gamma] >> 1")
    def test_empirical_mgf_unit_snr(self, rng):
        a = sample_aligned_amplitude(16, 10 ** 6, rng)
        emp = np.mean(np.exp(-0.1 * a * a))
        assert abs(mgf_ris_snr(MgfParams(16, 1.0, -0.1)) / emp - 1) <= 0.02


class TestPeMpsk:
    def test_zero_snr_limit(self):
        assert pe_mpsk(16, 1e-14) == pytest.approx(0.5, abs=1e-5)
        assert pe_mpsk(16, 0.0) == pytest.approx(0.5, abs=1e-15)

    @pytest.mark.parametrize("n,db", [(1, 0), (4, -10), (8, -20), (16, -15), (32, -25), (64, -20)])
    def test_craig_integral_oracle(self, n, db):
        g = 10 ** (db / 10)
        a = n * (16 - math.pi ** 2) * g / 8
        b = n * n * math.pi ** 2 * g / 16

        def f(xi):
            s2 = math.sin(xi) ** 2
            return 0.0 if s2 == 0 else math.exp(-b / (s2 + a)) * math.sqrt(s2 / (s2 + a))

        ref = adaptive_simpson(f, 0.0, math.pi / 2, 1e-15) / math.pi
        assert pe_mpsk(n, g) == pytest.approx(ref, rel=1e-9)

    @pytest.mark.parametrize("n,db", [(1, 3), (8, -12), (16, -18), (64, -26)])
    def test_equals_gaussian_amplitude_average(self, n, db):
        g = 10 ** (db / 10)
        assert pe_mpsk(n, g) == pytest.approx(gaussian_average_q(n, g), rel=1e-8)

    def test_against_rayleigh_monte_carlo(self, rng):
        a = sample_aligned_amplitude(16, 400_000, rng)
        erfc = np.vectorize(math.erfc)
        for db in range(-24, -13):
            g = 10 ** (db / 10)
            mc = 0.5 * np.mean(erfc(a * math.sqrt(g)))
            assert mc >= 1e-5
            assert 1 / 1.5 <= pe_mpsk(16, g) / mc <= 1.5, db

    @pytest.mark.xfail(strict=True, reason="CLT tail overestimates the error rate by ~4x here")
    def test_against_rayleigh_monte_carlo_minus_10db(self, rng):
        a = sample_aligned_amplitude(16, 400_000, rng)
        mc = 0.5 * np.mean(np.vectorize(math.erfc)(a * math.sqrt(0.1)))
        assert mc >= 1e-5
        assert pe_mpsk(16, 0.1) / mc <= 1.5

    def test_input_checks(self):
        with pytest.raises(ValueError):
            pe_mpsk(0, 1.0)
        with pytest.raises(ValueError):
            pe_mpsk(4, -1.0)
        with pytest.raises(ValueError):
            pe_mpsk(2.5, 1.0)


class TestUpperBound:
    def test_zero_snr(self):
        assert pe_upper_bound(32, 1e-15) == pytest.approx(0.5, abs=1e-6)

    def test_closed_form(self):
        n, g = 8, 0.05
        a = n * (16 - math.pi ** 2) * g / 8
        b = n * n * math.pi ** 2 * g / 16
        assert pe_upper_bound(n, g) == pytest.approx(0.5 * math.exp(-b / (1 + a)) / math.sqrt(1 + a),
                                                     rel=1e-14)

    def test_dominates_integral(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            n = int(rng.integers(1, 257))
            g = 10 ** rng.uniform(-5, 2)
            assert pe_upper_bound(n, g) >= pe_mpsk(n, g)

    @pytest.mark.parametrize("db", [-40, -25, -10, 0])
    def test_decreasing_when_n_doubles(self, db):
        g = 10 ** (db / 10)
        vals = [pe_upper_bound(n, g) for n in (1, 2, 4, 8, 16, 32)]
        vals = [v for v in vals if v > 0]
        assert all(x > y for x, y in zip(vals, vals[1:]))


class TestConventional:
    def test_fu_interference_free(self):
        for n0 in (0.1, 1.0, 4.0):
            assert pe_fu_conventional(0.0, 0.8, n0) == pytest.approx(q_ref(math.sqrt(1.6 / n0)),
                                                                     rel=1e-13)

    def test_fu_degenerate_split(self):
        eps2, n0 = 0.3, 0.2
        expected = 0.25 + 0.5 * q_ref(2 * math.sqrt(eps2) / math.sqrt(n0 / 2))
        assert pe_fu_conventional(2 * eps2, eps2, n0) == pytest.approx(expected, rel=1e-13)

    def test_nu_without_fu(self):
        eps1, n0 = 0.7, 0.5
        q = q_ref(math.sqrt(eps1 / n0))
        assert pe_nu_conventional(eps1, 0.0, n0) == pytest.approx(0.25 * (q * (4 - 2 * q) - q),
                                                                  rel=1e-13)

    def test_noise_limits(self):
        assert pe_fu_conventional(0.4, 0.6, 1e30) == pytest.approx(0.5, abs=1e-12)
        assert pe_nu_conventional(0.4, 0.6, 1e30) == pytest.approx(0.25, abs=1e-12)
        assert pe_nu_sic_exact(0.4, 0.6, 1e30) == pytest.approx(0.5, abs=1e-12)

    def test_sic_exact_against_simulation(self):
        # hard-decision SIC in AWGN at 5 dB, 2e6 symbols
        rng = np.random.default_rng(11)
        split, n0, m = PowerSplit(0.4), 10 ** -0.5, 2_000_000
        nu = rng.integers(0, 2, (m, 2))
        fu = rng.integers(0, 2, m)
        r = superpose(UserBits(nu, fu), split)
        r = r + math.sqrt(n0 / 2) * (rng.standard_normal(m) + 1j * rng.standard_normal(m))
        nu_hat, _ = detect_nu_sic(r, 1.0, split)
        ber = np.mean(nu_hat != nu)
        p = pe_nu_sic_exact(split.eps1, split.eps2, n0)
        assert abs(ber - p) <= 4 * math.sqrt(p * (1 - p) / (2 * m))

    def test_customary_nu_form_underestimates(self):
        # the closed form leaves out error propagation from a wrong FU decision
        split = PowerSplit(0.4)
        for db, lo, hi in [(0, 1.05, 1.6), (10, 1.5, 2.2)]:
            n0 = 10 ** (-db / 10)
            ratio = pe_nu_sic_exact(split.eps1, split.eps2, n0) / pe_nu_conventional(
                split.eps1, split.eps2, n0)
            assert lo < ratio < hi, (db, ratio)

    def test_checks(self):
        with pytest.raises(ValueError):
            pe_fu_conventional(-0.1, 1.0, 1.0)
        with pytest.raises(ValueError):
            pe_nu_conventional(0.4, 0.6, 0.0)


class TestRisExpressions:
    def test_fu_interference_free_reduction(self):
        for n, n0 in [(1, 0.5), (8, 20.0), (32, 300.0)]:
            assert pe_fu_ris(n, 0.0, 0.9, n0) == pytest.approx(pe_mpsk(n, 0.9 / n0), rel=1e-14)

    def test_fu_consistent_substitution(self):
        # each AWGN Q-term becomes its fading average at Es/N0 = x**2/2
        n, split, n0 = 8, PowerSplit(0.4), 10.0
        sig = math.sqrt(n0 / 2)
        terms = [(math.sqrt(split.eps2) + s * math.sqrt(split.eps1 / 2)) / sig for s in (1, -1)]
        expected = 0.5 * sum(pe_mpsk(n, x * x / 2) for x in terms)
        assert pe_fu_ris(n, split.eps1, split.eps2, n0) == pytest.approx(expected, rel=1e-14)

    def test_nu_consistent_substitution(self):
        n, split, n0 = 8, PowerSplit(0.3), 30.0
        e1, e2 = split.eps1, split.eps2
        own = pe_mpsk(n, e1 / (2 * n0))
        plus = pe_mpsk(n, (math.sqrt(2 * e2) + math.sqrt(e1)) ** 2 / (2 * n0))
        minus = pe_mpsk(n, (math.sqrt(2 * e2) - math.sqrt(e1)) ** 2 / (2 * n0))
        expected = 0.25 * (own * (4 - plus - minus) - plus)
        assert pe_nu_ris(n, e1, e2, n0) == pytest.approx(expected, rel=1e-14)

    def test_literal_surrogates(self):
        n, split, n0 = 8, PowerSplit(0.4), 2.0
        e1, e2, r = split.eps1, split.eps2, math.sqrt(n0)
        fu = 0.5 * sum(pe_mpsk(n, (math.sqrt(e2) + s * math.sqrt(e1 / 2)) / r) for s in (1, -1))
        assert pe_fu_ris(n, e1, e2, n0, LIT) == pytest.approx(fu, rel=1e-14)
        own = pe_mpsk(n, e1 / r)
        plus = pe_mpsk(n, (math.sqrt(2 * e2) + math.sqrt(e1)) / r)
        minus = pe_mpsk(n, (math.sqrt(2 * e2) - math.sqrt(e1)) / r)
        assert pe_nu_ris(n, e1, e2, n0, "literal") == pytest.approx(
            0.25 * (own * (4 - plus - minus) - plus), rel=1e-14)

    def test_link_power_scales_snr(self):
        split = PowerSplit(0.4)
        a = pe_fu_ris(8, split.eps1, split.eps2, 1.0, link_power=0.5)
        b = pe_fu_ris(8, split.eps1, split.eps2, 2.0)
        assert a == pytest.approx(b, rel=1e-14)

    @pytest.mark.parametrize("fn,limit", [(pe_fu_ris, 0.5), (pe_nu_ris, 0.25)])
    @pytest.mark.parametrize("mode", [CONS, LIT])
    def test_noise_limits(self, fn, limit, mode):
        assert fn(16, 0.4, 0.6, 1e30, mode) == pytest.approx(limit, abs=1e-9)

    @settings(max_examples=60, deadline=None)
    @given(n=st.integers(1, 64), e1=st.floats(0.0, 1.0), e2=st.floats(0.0, 4.0),
           db=st.floats(-30, 20), mode=st.sampled_from([CONS, LIT]))
    def test_ranges(self, n, e1, e2, db, mode):
        n0 = 10 ** (-db / 10)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", NumericalWarning)
            fu = pe_fu_ris(n, e1, e2, n0, mode)
            nu = pe_nu_ris(n, e1, e2, n0, mode)
        assert 0.0 <= fu <= 0.5
        assert 0.0 <= nu <= 0.5 + 1e-9

    @settings(max_examples=40, deadline=None)
    @given(n=st.integers(1, 64), e1=st.floats(0.0, 1.0), e2=st.floats(0.0, 3.0),
           step=st.floats(1e-3, 2.0), db=st.floats(-30, 10))
    def test_fu_non_increasing_in_eps2(self, n, e1, e2, step, db):
        # keep the split inside the NOMA ordering where both distances are nonnegative
        e2 = max(e2, e1 / 2)
        n0 = 10 ** (-db / 10)
        assert pe_fu_ris(n, e1, e2 + step, n0) <= pe_fu_ris(n, e1, e2, n0) + 1e-15

    def test_literal_and_consistent_differ(self):
        # the amplitude surrogate sits in an SNR slot, so the two readings part ways
        split = PowerSplit(0.4)
        ratios = []
        for db in range(-30, 1, 5):
            n0 = 10 ** (-db / 10)
            lit = pe_fu_ris(8, split.eps1, split.eps2, n0, LIT)
            cons = pe_fu_ris(8, split.eps1, split.eps2, n0, CONS)
            ratios.append(lit / cons)
        assert max(abs(math.log10(r)) for r in ratios) > 0.3

    def test_negative_distance_warns(self):
        with pytest.warns(NumericalWarning):
            pe_fu_ris(8, 1.0, 0.2, 1.0)
        with pytest.warns(NumericalWarning):
            pe_nu_ris(8, 1.0, 0.2, 1.0, LIT)

    def test_clamp_reporting(self):
        with pytest.warns(NumericalWarning):
            assert _clamp(1.5, "x") == 1.0
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            assert _clamp(-1e-12, "x") == 0.0


def _ris_outputs(n, db, quad=None):
    split = PowerSplit(0.4)
    n0 = 10 ** (-db / 10)
    g = 10 ** (db / 10)
    return [pe_mpsk(n, g, quad),
            pe_fu_ris(n, split.eps1, split.eps2, n0, quad=quad),
            pe_nu_ris(n, split.eps1, split.eps2, n0, quad=quad),
            pe_fu_ris(n, split.eps1, split.eps2, n0, LIT, quad=quad),
            pe_nu_ris(n, split.eps1, split.eps2, n0, LIT, quad=quad)]


class TestQuadratureConvergence:
    def test_order_doubling(self):
        q64, q128 = gauss_legendre_half_pi(64), gauss_legendre_half_pi(128)
        for n in (1, 2, 4, 8, 16, 32, 64):
            for db in np.arange(-15.0, 20.1, 2.5):
                for a, b in zip(_ris_outputs(n, db, q64), _ris_outputs(n, db, q128)):
                    if b > 0:
                        assert abs(a - b) / b < 1e-10, (n, db)

    @pytest.mark.xfail(strict=True, reason="boundary layer of width sqrt(N*snr) near xi=0 is "
                                           "unresolved by 64 nodes when N*snr < ~1e-3")
    def test_order_doubling_very_low_snr(self):
        q64, q128 = gauss_legendre_half_pi(64), gauss_legendre_half_pi(128)
        a, b = pe_mpsk(4, 1e-4, q64), pe_mpsk(4, 1e-4, q128)
        assert abs(a - b) / b < 1e-10


def _strictly_decreasing(vals):
    vals = [v for v in vals if v > 1e-300]
    return all(x > y for x, y in zip(vals, vals[1:]))


class TestMonotoneInN:
    ns = range(1, 129)

    @pytest.mark.parametrize("db", np.arange(-40.0, 20.1, 5.0))
    def test_single_link(self, db):
        g = 10 ** (db / 10)
        assert _strictly_decreasing([pe_mpsk(n, g) for n in self.ns])
        assert _strictly_decreasing([pe_upper_bound(n, g) for n in self.ns])

    @pytest.mark.parametrize("alpha", [0.1, 0.2, 0.3, 0.4])
    def test_fu(self, alpha):
        s = PowerSplit(alpha)
        for db in np.arange(-40.0, 20.1, 5.0):
            n0 = 10 ** (-db / 10)
            assert _strictly_decreasing([pe_fu_ris(n, s.eps1, s.eps2, n0) for n in self.ns]), db

    @pytest.mark.parametrize("alpha", [0.1, 0.2, 0.3, 0.4])
    def test_nu_above_0db(self, alpha):
        s = PowerSplit(alpha)
        for db in np.arange(0.0, 20.1, 2.5):
            n0 = 10 ** (-db / 10)
            assert _strictly_decreasing([pe_nu_ris(n, s.eps1, s.eps2, n0) for n in self.ns]), db

    @pytest.mark.xfail(strict=True, reason="the SIC composition exceeds 1/4 at low SNR and "
                                           "rises with N there")
    def test_nu_low_snr(self):
        s = PowerSplit(0.4)
        n0 = 10 ** 2.0
        assert _strictly_decreasing([pe_nu_ris(n, s.eps1, s.eps2, n0) for n in self.ns])
