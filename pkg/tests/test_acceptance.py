"""Acceptance criteria 1-10, each at its stated tolerance and replicate count."""

import time

import numpy as np
import pytest

from iterreg import cli
from iterreg.bounds import (
    bias_variance_bound,
    concentration_tail,
    landweber_rate_bound,
    multistep_rate_bound,
    oracle_rhs,
    tail_threshold,
)
from iterreg.filters import FilterSpec, Schedule, filter_tables, qualification_bound
from iterreg.harness import ExperimentConfig, monte_carlo, rate_study
from iterreg.harness.config import DEFAULT_GRID, grid_configs
from iterreg.model import NoiseModel, make_diagonal_problem, sample_noise
from iterreg.selector import PenaltyConfig, SelectionPlan, estimate_spectral, full_grid, landweber_iterate
from iterreg.spectral_core import svd

SEED = 20240611


def mc_losses(prob, spec, ks, reps, seed):
    """Per-replicate losses ``||f_m - f_k||^2`` for every k in ``ks``; shape ``(reps, len(ks))``."""
    q, _ = filter_tables(spec, ks, prob.system.lambdas)
    gain = q * prob.system.sigmas
    clean = prob.system.data_coefficients(prob.clean_signal())
    eps = sample_noise(prob.noise, prob.n * reps, seed).reshape(reps, prob.n)
    c = clean + eps @ prob.system.left_vectors / prob.n
    return np.stack([np.sum((g * c - prob.truth_coeffs) ** 2, axis=1) for g in gain], axis=1)


def test_1_iterative_spectral_equivalence(acceptance):
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED)
    worst = 0.0
    for _ in range(50):
        d = int(rng.integers(1, 13))
        n = int(rng.integers(d, 65))
        a = rng.standard_normal((n, d))
        y = rng.standard_normal(n)
        system = svd(a)
        tau = float(rng.uniform(0.1, 1.0)) / system.lambdas[0]
        spec = FilterSpec.landweber(tau, 200)
        f = np.zeros(d)
        for k in range(1, 201):
            f = landweber_iterate(a, y, tau, 1, f0=f).vector
            gap = np.linalg.norm(f - estimate_spectral(system, y, spec, k).vector) / np.linalg.norm(y)
            worst = max(worst, gap)
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-10 and elapsed < 10
    acceptance(1, ok, f"max gap/||y|| = {worst:.2e} (tol 1e-10), {elapsed:.1f}s")
    assert ok


def test_2_filter_identities(acceptance):
    t0 = time.perf_counter()
    lam = np.linspace(0.0, 1.0, 100)
    ks = full_grid(200)
    worst = 0.0
    specs = [
        (FilterSpec.landweber(1.0, 200), lam),
        (FilterSpec.multistep(Schedule("constant", 1.0), 200), lam),
        # geometric steps span [0.5, 1]; the analysed range is [0, t_1k]
        (FilterSpec.multistep(Schedule("geometric", 1.0, 0.5), 200), 0.5 * lam),
    ]
    for spec, grid in specs:
        q, r = filter_tables(spec, ks, grid)
        worst = max(worst, float(np.max(np.abs(grid * q + r - 1))))
    q, _ = filter_tables(FilterSpec.landweber(1.0, 200), ks, lam)
    bounded = bool(np.all(lam * q >= 0) and np.all(lam * q <= 1))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-12 and bounded and elapsed < 5
    acceptance(2, ok, f"max |lam Q + r - 1| = {worst:.2e}, 0 <= lam Q <= 1: {bounded}, {elapsed:.2f}s")
    assert ok


def test_3_noiseless_convergence(acceptance):
    t0 = time.perf_counter()
    prob = make_diagonal_problem(1.0, 5, 50, source_rho=1.0, noise=NoiseModel(sigma=0.0))
    k_max = 10**5
    spec = FilterSpec.landweber(0.5, k_max)
    ks = full_grid(k_max)
    q, r = filter_tables(spec, ks, prob.system.lambdas)
    clean = prob.system.data_coefficients(prob.clean_signal())
    direct = np.sqrt(np.sum((q * prob.system.sigmas * clean - prob.truth_coeffs) ** 2, axis=1))
    # same quantity without cancellation: R_k A f - f_m = -sum_j r_k(lam_j) f_j phi_j
    err = np.sqrt(np.sum((r * prob.truth_coeffs) ** 2, axis=1))
    agree = float(np.max(np.abs(direct - err)))
    monotone = bool(np.all(np.diff(err) <= 0))
    below = np.nonzero(err < 1e-6)[0]
    elapsed = time.perf_counter() - t0
    ok = monotone and below.size > 0 and agree <= 1e-12 and elapsed < 10
    first = int(ks[below[0]]) if below.size else None
    acceptance(3, ok, f"monotone: {monotone}, first k with error < 1e-6: {first}, "
                      f"data-path agreement {agree:.1e}, {elapsed:.1f}s")
    assert ok


def test_4_bias_variance_bound(acceptance):
    t0 = time.perf_counter()
    mu, rho = 0.5, 1.0
    prob = make_diagonal_problem(1.0, 10, 100, mu=mu, source_rho=rho)
    spec = FilterSpec.landweber(0.5, 100)
    ks = full_grid(100)
    losses = mc_losses(prob, spec, ks, 500, SEED)
    mean = losses.mean(axis=0)
    se = losses.std(axis=0, ddof=1) / np.sqrt(500)
    q, _ = filter_tables(spec, ks, prob.system.lambdas)
    traces = np.sum(q**2 * prob.system.lambdas, axis=1) / prob.n
    bounds = np.array([bias_variance_bound(qualification_bound(spec, mu, int(k)), rho, 1.0, tr).value
                       for k, tr in zip(ks, traces)])
    slack = bounds + 3 * se - mean
    elapsed = time.perf_counter() - t0
    ok = bool(np.all(slack >= 0)) and elapsed < 60
    acceptance(4, ok, f"min(bound + 3SE - mean) = {slack.min():.3g} over k <= 100, {elapsed:.1f}s")
    assert ok


def test_5_variance_identity(acceptance):
    t0 = time.perf_counter()
    prob = make_diagonal_problem(1.0, 10, 100)
    spec = FilterSpec.landweber(0.5, 100)
    reps = 10**4
    eps = sample_noise(NoiseModel(sigma=1.0), prob.n * reps, SEED).reshape(reps, prob.n)
    c = eps @ prob.system.left_vectors / prob.n
    zs = []
    for k in (1, 10, 100):
        q, _ = filter_tables(spec, [k], prob.system.lambdas)
        norms = np.sum((q[0] * prob.system.sigmas * c) ** 2, axis=1)
        expected = np.sum(q[0] ** 2 * prob.system.lambdas) / prob.n
        zs.append(abs(norms.mean() - expected) / (norms.std(ddof=1) / np.sqrt(reps)))
    elapsed = time.perf_counter() - t0
    ok = max(zs) <= 3 and elapsed < 60
    acceptance(5, ok, f"|MC - sigma^2 Tr| / SE at k=1,10,100: {', '.join(f'{z:.2f}' for z in zs)}, {elapsed:.1f}s")
    assert ok


def test_6_oracle_inequality(acceptance):
    t0 = time.perf_counter()
    # part (a): bound validity on a seeded 10-dim problem
    nu, C, d, r = 0.5, 1.0, 1.0, 2.5
    prob = make_diagonal_problem(1.0, 10, 200, mu=0.5, source_rho=5.0)
    spec = FilterSpec.landweber(0.5, 200)
    pc = PenaltyConfig(r, 1.0, full_grid(200))
    plan = SelectionPlan(prob.system, spec, pc)
    clean = prob.system.data_coefficients(prob.clean_signal())
    eps = sample_noise(prob.noise, prob.n * 500, SEED).reshape(500, prob.n)
    losses = []
    for e in eps:
        c = clean + prob.system.data_coefficients(e)
        t = plan.select(c)
        losses.append(np.sum((plan.estimates(c)[t.index] - prob.truth_coeffs) ** 2))
    mc = float(np.mean(losses))
    bias_sq = np.sum((plan.estimates(clean) - prob.truth_coeffs) ** 2, axis=1)
    L = pc.complexity(pc.k_grid)
    rhs = oracle_rhs(bias_sq, plan.penalties(), nu, C, d, r, L, plan.trace / plan.radius,
                     prob.n * plan.radius, prob.n, 1.0)
    part_a = mc <= rhs.value
    # part (b): adaptive/oracle mean-loss ratio on the default grid
    ratios = {}
    for cfg in grid_configs(ExperimentConfig(), DEFAULT_GRID):
        for n in cfg.problem.n_list:
            ratios[(cfg.problem.p, cfg.problem.mu, n)] = monte_carlo(cfg, n).aggregates["ratio_adaptive_to_oracle"]
    worst_cell = max(ratios, key=ratios.get)
    over = sum(v > 4 for v in ratios.values())
    part_b = over == 0
    elapsed = time.perf_counter() - t0
    ok = part_a and part_b and elapsed < 120
    acceptance(6, ok, f"(a) MC {mc:.4g} <= rhs {rhs.value:.4g}: {part_a}; (b) ratio <= 4 in "
                      f"{len(ratios) - over}/{len(ratios)} cells, max {ratios[worst_cell]:.2f} at "
                      f"(p, mu, n) = {worst_cell}; {elapsed:.1f}s")
    assert ok


def test_7_concentration_tail(acceptance):
    t0 = time.perf_counter()
    prob = make_diagonal_problem(1.0, 5, 50)
    spec = FilterSpec.landweber(0.5, 100)
    reps = 10**5
    eps = sample_noise(NoiseModel(sigma=1.0), prob.n * reps, SEED).reshape(reps, prob.n)
    c = eps @ prob.system.left_vectors / prob.n
    worst = -np.inf
    checks = 0
    for k in (1, 10, 100):
        q, _ = filter_tables(spec, [k], prob.system.lambdas)
        gain = q[0] * prob.system.sigmas
        eta2 = np.sum((gain * c) ** 2, axis=1)
        tr = float(np.sum(gain**2)) / prob.n
        rad = float(np.max(gain**2)) / prob.n
        for L in (0.0, 1 + np.log1p(k)):
            for m in (1, 5, 10):
                u = m * rad
                freq = float(np.mean(eta2 >= tail_threshold(tr, rad, 2.5, L, u)))
                bound = concentration_tail(tr, rad, 2.5, L, u, 0.1).value
                worst = max(worst, freq - bound)
                checks += 1
    elapsed = time.perf_counter() - t0
    ok = worst <= 0 and elapsed < 60
    acceptance(7, ok, f"max(freq - bound) = {worst:.3f} over {checks} (k, L, u) cases, {elapsed:.1f}s")
    assert ok


@pytest.mark.parametrize("p,mu", [(1.0, 0.5), (1.5, 0.25)])
def test_8_rate_reproduction(acceptance, p, mu):
    t0 = time.perf_counter()
    cfg = ExperimentConfig().with_overrides(p=p, mu=mu)
    study = rate_study(cfg)
    o, a = study.oracle_fit.slope, study.adaptive_fit.slope
    ok_o = abs(o - study.target_slope) <= 0.10
    ok_a = abs(a - o) <= 0.10
    elapsed = time.perf_counter() - t0
    ok = ok_o and ok_a and elapsed < 300
    acceptance(f"8 p={p:g} mu={mu:g}", ok,
               f"target {study.target_slope:.4f}, oracle {o:.4f} (R^2 {study.oracle_fit.r2:.3f}), "
               f"adaptive {a:.4f} (SE {study.adaptive_fit.stderr:.3f}), {elapsed:.1f}s")
    assert ok


def test_9_rate_bounds(acceptance):
    t0 = time.perf_counter()
    cfg = ExperimentConfig()
    pb = cfg.problem
    n = 1000
    from iterreg.harness.montecarlo import build_setup

    prob = build_setup(cfg, n).problem
    ks = full_grid(100)
    reps = 500
    worst = np.inf
    for kind in ("landweber", "multistep"):
        if kind == "landweber":
            tau = 0.5 / prob.system.lambdas[0]
            spec = FilterSpec.landweber(tau, 100)
            bounds = [landweber_rate_bound(int(k), pb.mu, pb.p, tau, pb.source_rho, 1.0, n).value for k in ks]
        else:
            top = float(prob.system.lambdas[0])
            spec = FilterSpec.multistep(Schedule("constant", top), 100)
            bounds = [multistep_rate_bound(float(np.sum(1 / spec.taus(int(k)))), pb.mu, pb.p, pb.source_rho, 1.0,
                                           n).value for k in ks]
        losses = mc_losses(prob, spec, ks, reps, SEED)
        slack = np.array(bounds) + 3 * losses.std(axis=0, ddof=1) / np.sqrt(reps) - losses.mean(axis=0)
        worst = min(worst, float(slack.min()))
    elapsed = time.perf_counter() - t0
    ok = worst >= 0 and elapsed < 60
    acceptance(9, ok, f"min(bound + 3SE - mean) = {worst:.3g} over k <= 100, both filters, {elapsed:.1f}s")
    assert ok


def test_10_determinism(acceptance, tmp_path):
    outs = []
    for run in ("a", "b"):
        out = tmp_path / run
        assert cli.main(["simulate", "--seed", "12345", "--out", str(out), "--no-figures"]) == 0
        outs.append(out)
    names = ["replicates.csv", "risk_curve.csv", "objective_curve.csv"]
    same = all((outs[0] / f).read_bytes() == (outs[1] / f).read_bytes() for f in names)
    acceptance(10, same, f"byte-identical {', '.join(names)}: {same}")
    assert same
