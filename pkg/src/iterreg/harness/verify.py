"""Fast built-in invariant and oracle checks behind ``iterreg verify``."""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from ..bounds import optimal_rate_exponent, variance_constant
from ..filters import FilterSpec, Schedule, filter_tables, qualification_bound
from ..model import make_diagonal_problem
from ..selector import PenaltyConfig, SelectionPlan, estimate_spectral, full_grid, landweber_iterate
from ..spectral_core import svd
from .config import ExperimentConfig
from .montecarlo import fit_slope, run_replicate


def _iterate_matches_spectral():
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(5):
        a = rng.standard_normal((30, 6))
        y = rng.standard_normal(30)
        sysm = svd(a)
        tau = 1.0 / sysm.lambdas[0]
        spec = FilterSpec.landweber(tau, 100)
        for k in (1, 7, 64, 65, 100):
            it = landweber_iterate(a, y, tau, k).vector
            sp = estimate_spectral(sysm, y, spec, k).vector
            worst = max(worst, np.linalg.norm(it - sp) / np.linalg.norm(y))
    return worst <= 1e-10, f"max relative gap {worst:.2e}"


def _filter_identity():
    lam = np.linspace(0.0, 1.0, 100)
    worst = 0.0
    for spec in (FilterSpec.landweber(1.0, 200),
                 FilterSpec.multistep(Schedule("geometric", 1.0, 0.5), 200)):
        q, r = filter_tables(spec, full_grid(200), lam)
        worst = max(worst, float(np.max(np.abs(lam * q + r - 1))))
    return worst <= 1e-12, f"max |lam Q + r - 1| = {worst:.2e}"


def _qualification_example():
    v = qualification_bound(FilterSpec.multistep(Schedule("constant", 1.0), 4), 1.0, 4)
    return abs(v - 0.125) < 1e-12, f"omega_1(4) = {v}"


def _constants():
    ok = abs(optimal_rate_exponent(1, 0.5) - 0.4) < 1e-15 and abs(variance_constant(1) - 3 ** 0.75 / 3) < 1e-15
    return ok, f"rate exponent {optimal_rate_exponent(1, 0.5)}, c2(1) = {variance_constant(1):.6f}"


def _selection_argmin():
    prob = make_diagonal_problem(1.0, 20, 200, source_rho=5.0)
    spec = FilterSpec.landweber(0.5, 200)
    plan = SelectionPlan(prob.system, spec, PenaltyConfig(2.5, 1.0, full_grid(200)))
    c = prob.system.data_coefficients(prob.clean_signal() + np.random.default_rng(1).standard_normal(200))
    t = plan.select(c)
    ok = t.objective[t.index] == t.objective.min() and np.allclose(t.residual_sq + t.penalty, t.objective)
    return bool(ok), f"k_hat = {t.k_hat}"


def _replicate_determinism():
    cfg = ExperimentConfig().with_overrides(n_list=(250, 1000, 16000))
    a = run_replicate(cfg, 250, 7)
    b = run_replicate(cfg, 250, 7)
    ok = a == b and a.loss_at_oracle <= a.loss_at_khat
    return ok, f"k_hat = {a.k_hat}, oracle k = {a.k_oracle}"


def _slope_recovery():
    n = np.array([250.0, 1000.0, 4000.0, 16000.0])
    fit = fit_slope(n, 3.0 * n**-0.4)
    return abs(fit.slope + 0.4) < 1e-12, f"slope {fit.slope!r}"


CHECKS: dict[str, Callable] = {
    "iterate_matches_spectral": _iterate_matches_spectral,
    "filter_identity": _filter_identity,
    "qualification_example": _qualification_example,
    "closed_form_constants": _constants,
    "selection_argmin": _selection_argmin,
    "replicate_determinism": _replicate_determinism,
    "slope_recovery": _slope_recovery,
}


def run_checks(echo=print) -> bool:
    all_ok = True
    for name, fn in CHECKS.items():
        ok, detail = fn()
        all_ok &= bool(ok)
        echo(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    return all_ok
