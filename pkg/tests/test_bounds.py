import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from iterreg.bounds import (
    BoundReport,
    bias_variance_bound,
    concentration_tail,
    evaluate,
    landweber_rate_bound,
    multistep_bias_constant,
    multistep_rate_bound,
    optimal_rate_exponent,
    oracle_rhs,
    remainder_terms,
    tail_threshold,
    variance_constant,
)
from iterreg.errors import ConfigError, DomainError


class TestBiasVariance:
    def test_zero(self):
        assert bias_variance_bound(0.0, 1.0, 1.0, 0.0).value == 0.0

    def test_arithmetic(self):
        rep = bias_variance_bound(0.1, 1.0, 1.0, 0.02)
        assert rep.value == pytest.approx(0.06, abs=1e-15)
        assert rep.value == rep.breakdown["bias"] + rep.breakdown["variance"]

    def test_negative_input(self):
        with pytest.raises(DomainError):
            bias_variance_bound(-0.1, 1.0, 1.0, 0.0)


class TestRateBounds:
    def test_variance_constant(self):
        assert variance_constant(1.0) == pytest.approx(3 ** 0.75 / 3, rel=1e-15)
        assert variance_constant(1.0) == pytest.approx(0.7599, abs=1e-4)

    def test_landweber_dual_path(self):
        mu, p, tau, rho, s2, n, k = 0.5, 1.0, 0.5, 1.0, 1.0, 10**4, 10
        rep = landweber_rate_bound(k, mu, p, tau, rho, s2, n)
        c1 = rho**2 * (mu / (tau * math.e)) ** (2 * mu)
        c2 = (1 / 3) * 3 ** 0.75
        bias = 2 * c1 * k ** (-2 * mu)
        var = 2 * c2 * s2 / n * (tau * k) ** 1.5
        assert rep.breakdown["bias"] == pytest.approx(bias, rel=1e-14)
        assert rep.breakdown["variance"] == pytest.approx(var, rel=1e-14)
        assert rep.value == pytest.approx(bias + var, rel=1e-14)

    def test_statement_variant(self):
        a = landweber_rate_bound(10, 0.5, 1.0, 0.5, 1.0, 1.0, 100, variant="statement")
        assert a.breakdown["c1"] == pytest.approx((0.5 / (0.5 * math.e)) ** 0.5)
        with pytest.raises(ConfigError):
            landweber_rate_bound(10, 0.5, 1.0, 0.5, 1.0, 1.0, 100, variant="other")

    def test_bad_p(self):
        with pytest.raises(DomainError):
            landweber_rate_bound(1, 0.5, 0.5, 1.0, 1.0, 1.0, 10)

    def test_u_shape(self):
        vals = [landweber_rate_bound(k, 0.5, 1.0, 0.5, 1.0, 1.0, 1000).value for k in range(1, 2001)]
        i = int(np.argmin(vals))
        assert 0 < i < 1999
        assert np.all(np.diff(vals[: i + 1]) <= 0) and np.all(np.diff(vals[i:]) >= 0)

    def test_minimizer_scaling(self):
        mu, p = 0.5, 1.0
        ns = np.array([1e2, 1e3, 1e4])
        kstar = []
        for n in ns:
            ks = np.arange(1, 20001)
            vals = [landweber_rate_bound(int(k), mu, p, 0.5, 1.0, 1.0, n).value for k in ks[::1]]
            kstar.append(ks[int(np.argmin(vals))])
        slope = np.polyfit(np.log(ns), np.log(kstar), 1)[0]
        assert slope == pytest.approx(2 * p / (4 * mu * p + 2 * p + 1), abs=0.05)
        pred = kstar[0] * (ns / ns[0]) ** (2 * p / (4 * mu * p + 2 * p + 1))
        assert np.all(np.abs(np.log(kstar / pred)) <= math.log(2))

    def test_multistep_reduces_to_landweber_shape(self):
        tau, k = 0.5, 20
        ms = multistep_rate_bound(tau * k, 0.5, 1.0, 1.0, 1.0, 100)
        lw = landweber_rate_bound(k, 0.5, 1.0, tau, 1.0, 1.0, 100)
        assert ms.breakdown["variance"] == pytest.approx(lw.breakdown["variance"], rel=1e-14)
        assert ms.breakdown["bias"] == pytest.approx(2 * ms.breakdown["c1"] * (tau * k) ** -1.0, rel=1e-14)

    def test_multistep_constant(self):
        assert multistep_bias_constant(1.0, 3.0) == pytest.approx(9.0 / 4)

    def test_multistep_doubling(self):
        a = multistep_rate_bound(5.0, 0.5, 1.5, 1.0, 1.0, 100)
        b = multistep_rate_bound(10.0, 0.5, 1.5, 1.0, 1.0, 100)
        assert b.breakdown["variance"] / a.breakdown["variance"] == pytest.approx(2 ** (4 / 3), rel=1e-13)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 1000), st.floats(0.05, 1.0), st.floats(0.6, 3.0), st.floats(0.0, 10.0))
    def test_nonnegative_monotone_in_sigma2(self, k, mu, p, s2):
        lo = landweber_rate_bound(k, mu, p, 0.5, 1.0, s2, 100).value
        hi = landweber_rate_bound(k, mu, p, 0.5, 1.0, s2 + 1.0, 100).value
        assert 0 <= lo <= hi


class TestOracle:
    def test_vanishing(self):
        rep = oracle_rhs([0.0], [0.0], 0.5, 1.0, 1.0, 2.5, [1e6], [1.0], [1.0], 10)
        assert rep.value < 1e-100

    def test_series_converges(self):
        k = np.arange(1, 10**4 + 1)
        terms = remainder_terms(np.ones_like(k, dtype=float), k.astype(float), 2.5, 1 + np.log1p(k), 1.0, 1.0)
        partial = np.cumsum(terms)
        assert np.all(np.isfinite(partial))
        assert partial[-1] - partial[len(k) // 2] <= 1e-6 * partial[-1]

    def test_breakdown_reproducible(self):
        bias = np.array([5.0, 2.0, 1.0, 0.5])
        pen = np.array([0.1, 0.5, 0.9, 3.0])
        rep = oracle_rhs(bias, pen, 0.5, 1.0, 1.0, 2.5, [1, 2, 3, 4], [1.0] * 4, [1.0] * 4, 100)
        inner = 1.0 * 1.5 * bias + 2 * pen
        assert rep.breakdown["inf_index"] == int(np.argmin(inner))
        assert rep.breakdown["main"] == pytest.approx(inner.min() / 0.5)
        assert rep.value == pytest.approx(rep.breakdown["main"] + rep.breakdown["C1"] / 100)

    def test_bad_nu(self):
        with pytest.raises(ConfigError):
            oracle_rhs([0.0], [0.0], 1.0, 1.0, 1.0, 2.5, [1.0], [1.0], [1.0], 10)


class TestTail:
    def test_vacuous(self):
        assert concentration_tail(1.0, 1.0, 2.5, 0.0, 0.0, 1.0).value == 1.0

    def test_monotone_in_u(self):
        vals = [concentration_tail(2.0, 0.5, 2.5, 1.0, u, 0.1).value for u in np.linspace(0, 10, 50)]
        assert np.all(np.diff(vals) < 0)

    def test_threshold(self):
        assert tail_threshold(2.0, 1.0, 2.5, 1.0, 0.5, 2.0) == pytest.approx(2.0 * (3.0 * 1.25 * 2 + 0.5))

    def test_radius(self):
        with pytest.raises(DomainError):
            concentration_tail(1.0, 0.0, 2.5, 1.0, 1.0, 1.0)


class TestExponent:
    def test_values(self):
        assert optimal_rate_exponent(1.0, 0.5) == pytest.approx(0.4, abs=1e-15)
        assert optimal_rate_exponent(1.5, 0.25) == pytest.approx(1.5 / 5.5, abs=1e-15)
        assert optimal_rate_exponent(1.0, 1e-12) < 1e-11

    @settings(max_examples=30)
    @given(st.floats(0.6, 5.0), st.floats(0.01, 2.0))
    def test_hilbert_scale_form(self, p, mu):
        s = 2 * mu * p
        assert optimal_rate_exponent(p, mu) == pytest.approx(2 * s / (2 * s + 2 * p + 1), rel=1e-14)


class TestSerialization:
    def test_round_trip(self):
        rep = oracle_rhs([1.0, 0.5], [0.2, 0.4], 0.5, 1.0, 1.0, 2.5, [1, 2], [1.0, 1.5], [0.5, 0.5], 100)
        doc = json.loads(rep.to_json())
        again = BoundReport.from_dict(doc)
        assert again.value == rep.value and again.kind == "oracle"

    def test_evaluate_dispatch(self):
        rep = evaluate({"kind": "bias_variance", "omega_mu_k": 0.1, "source_rho": 1.0, "sigma2": 1.0,
                        "trace_term": 0.02})
        assert rep.value == pytest.approx(0.06)
        with pytest.raises(ConfigError):
            evaluate({"kind": "nope"})
        with pytest.raises(ConfigError):
            evaluate({"kind": "tail", "bogus": 1})
