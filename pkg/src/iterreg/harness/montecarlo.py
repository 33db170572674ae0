"""Seeded Monte Carlo replication, oracle comparison and rate regression."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy import stats

from ..bounds import optimal_rate_exponent
from ..errors import ConfigError, IterRegError
from ..filters import FilterSpec, Schedule, default_k_max, default_tau
from ..model import NoiseModel, Problem, SourceCondition, default_omega, make_diagonal_problem, sample_noise
from ..selector import PenaltyConfig, SelectionPlan, SelectionTrace, estimate_noise_variance, full_grid
from .config import ExperimentConfig

CHUNK = 25
MIN_RATE_POINTS = 3
MIN_RATE_SPAN = 64.0
ROW_COLUMNS = ("seed", "n", "k_hat", "loss_at_khat", "k_oracle", "loss_at_oracle",
               "loss_full_at_khat", "sigma2_used", "objective_at_khat")


@dataclass(frozen=True)
class Setup:
    """Everything about one ``(config, n)`` pair that does not depend on noise."""

    problem: Problem
    spec: FilterSpec
    plan: SelectionPlan
    clean_coeffs: np.ndarray


@lru_cache(maxsize=16)
def build_setup(cfg: ExperimentConfig, n: int) -> Setup:
    pb, fb, qb = cfg.problem, cfg.filter, cfg.penalty
    d = pb.dimension(n)
    omega = default_omega(pb.source_rho, d + pb.tail_dim, pb.omega_decay)
    prob = make_diagonal_problem(
        pb.p, d, n,
        source=SourceCondition(pb.mu, pb.source_rho, omega),
        noise=NoiseModel(pb.noise_kind, pb.noise_sigma),
        tail_dim=pb.tail_dim,
    )
    lam1 = float(prob.system.lambdas[0])
    k_max = default_k_max(n) if fb.k_max == "default" else int(fb.k_max)
    if fb.kind == "landweber":
        tau = default_tau(lam1) if fb.tau == "default" else float(fb.tau)
        spec = FilterSpec.landweber(tau, k_max)
    else:
        top = lam1 if fb.schedule_top == "lambda1" else float(fb.schedule_top)
        spec = FilterSpec.multistep(Schedule(fb.schedule, top, fb.schedule_ratio), k_max)
    spec.check_admissible(lam1)
    sigma2 = pb.noise_sigma**2 if qb.sigma2 in ("known", "plugin") else float(qb.sigma2)
    pc = PenaltyConfig(qb.r, sigma2, full_grid(k_max), qb.l_rule, qb.l_value)
    plan = SelectionPlan(prob.system, spec, pc)
    clean = prob.system.data_coefficients(prob.clean_signal())
    return Setup(prob, spec, plan, clean)


@dataclass(frozen=True)
class ReplicateResult:
    seed: int
    n: int
    k_hat: int
    loss_at_khat: float
    k_oracle: int
    loss_at_oracle: float
    loss_full_at_khat: float
    sigma2_used: float
    objective_at_khat: float
    trace: Optional[SelectionTrace] = field(default=None, compare=False, repr=False)

    def row(self) -> tuple:
        return tuple(getattr(self, c) for c in ROW_COLUMNS)

    @property
    def trace_ref(self) -> str:
        return f"traces/n{self.n}_seed{self.seed}.csv"


def _replicate(cfg: ExperimentConfig, n: int, seed: int, keep_trace: bool):
    setup = build_setup(cfg, n)
    prob, plan = setup.problem, setup.plan
    eps = sample_noise(prob.noise, n, seed)
    c = setup.clean_coeffs + prob.system.data_coefficients(eps)
    if cfg.penalty.sigma2 == "plugin":
        sigma2 = estimate_noise_variance(prob.system, prob.clean_signal() + eps)
    else:
        sigma2 = plan.pc.sigma2
    trace = plan.select(c, sigma2)
    losses = np.sum((plan.estimates(c) - prob.truth_coeffs) ** 2, axis=1)
    i_hat = trace.index
    i_or = int(np.argmin(losses))
    result = ReplicateResult(
        seed=int(seed),
        n=int(n),
        k_hat=trace.k_hat,
        loss_at_khat=float(losses[i_hat]),
        k_oracle=int(plan.pc.k_grid[i_or]),
        loss_at_oracle=float(losses[i_or]),
        loss_full_at_khat=float(losses[i_hat]) + prob.tail_norm_sq,
        sigma2_used=float(sigma2),
        objective_at_khat=float(trace.objective[i_hat]),
        trace=trace if keep_trace else None,
    )
    return result, losses


def run_replicate(cfg: ExperimentConfig, n: int, seed: int, keep_trace: bool = True) -> ReplicateResult:
    """One seeded replicate; deterministic given ``(cfg, n, seed)``."""
    try:
        return _replicate(cfg, n, seed, keep_trace)[0]
    except IterRegError as exc:
        raise type(exc)(f"replicate n={n} seed={seed}: {exc}") from exc


def _run_chunk(args):
    cfg, n, seeds, keep = args
    rows = []
    total = None
    total_sq = None
    for s in seeds:
        try:
            res, losses = _replicate(cfg, n, s, keep or s == cfg.run.base_seed)
        except IterRegError as exc:
            raise type(exc)(f"replicate n={n} seed={s}: {exc}") from exc
        rows.append(res)
        total = losses.copy() if total is None else total + losses
        total_sq = losses**2 if total_sq is None else total_sq + losses**2
    return rows, total, total_sq


def _mean_se(x):
    x = np.asarray(x, dtype=float)
    if x.size < 2:
        return float(np.mean(x)) if x.size else math.nan, math.nan
    return float(np.mean(x)), float(np.std(x, ddof=1) / math.sqrt(x.size))


def aggregate(rows) -> dict:
    """Summary statistics recomputable from the replicate rows alone."""
    if not rows:
        return {"replicates": 0}
    ad = [r.loss_at_khat for r in rows]
    orc = [r.loss_at_oracle for r in rows]
    full = [r.loss_full_at_khat for r in rows]
    m_ad, se_ad = _mean_se(ad)
    m_or, se_or = _mean_se(orc)
    m_full, se_full = _mean_se(full)
    hist = {}
    for r in rows:
        hist[str(r.k_hat)] = hist.get(str(r.k_hat), 0) + 1
    return {
        "replicates": len(rows),
        "mean_loss_adaptive": m_ad,
        "se_loss_adaptive": se_ad,
        "median_loss_adaptive": float(np.median(ad)),
        "mean_loss_oracle": m_or,
        "se_loss_oracle": se_or,
        "median_loss_oracle": float(np.median(orc)),
        "mean_loss_full": m_full,
        "se_loss_full": se_full,
        "ratio_adaptive_to_oracle": m_ad / m_or if m_or > 0 else math.inf,
        "mean_k_hat": float(np.mean([r.k_hat for r in rows])),
        "mean_k_oracle": float(np.mean([r.k_oracle for r in rows])),
        "k_hat_histogram": dict(sorted(hist.items(), key=lambda kv: int(kv[0]))),
    }


@dataclass
class MonteCarloReport:
    config_hash: str
    n: int
    rows: list
    aggregates: dict
    config: dict = field(default_factory=dict)
    risk_mean: Optional[np.ndarray] = field(default=None, compare=False, repr=False)
    risk_se: Optional[np.ndarray] = field(default=None, compare=False, repr=False)
    k_grid: Optional[np.ndarray] = field(default=None, compare=False, repr=False)
    example_trace: Optional[SelectionTrace] = field(default=None, compare=False, repr=False)

    def best_fixed_k(self) -> tuple:
        """Index with the smallest mean loss across replicates and that loss."""
        i = int(np.argmin(self.risk_mean))
        return int(self.k_grid[i]), float(self.risk_mean[i])

    def to_dict(self) -> dict:
        return {
            "config_hash": self.config_hash,
            "n": self.n,
            "config": self.config,
            "aggregates": self.aggregates,
            "columns": list(ROW_COLUMNS),
            "rows": [list(r.row()) for r in self.rows],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "MonteCarloReport":
        rows = [ReplicateResult(*row) for row in doc["rows"]]
        return cls(doc["config_hash"], doc["n"], rows, doc["aggregates"], doc.get("config", {}))


def monte_carlo(cfg: ExperimentConfig, n: int, workers: Optional[int] = None) -> MonteCarloReport:
    """``R`` replicates with seeds ``base_seed + i``, reduced in replicate order.

    Work is split into fixed chunks independent of ``workers`` so serial and
    parallel runs perform identical floating-point reductions.
    """
    R = cfg.run.replicates
    if R < 2:
        raise ConfigError(f"monte_carlo needs at least 2 replicates, got {R}")
    workers = cfg.run.workers if workers is None else workers
    seeds = [cfg.run.base_seed + i for i in range(R)]
    tasks = [(cfg, n, seeds[i:i + CHUNK], cfg.run.save_traces) for i in range(0, R, CHUNK)]
    build_setup(cfg, n)
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_chunk, tasks))
    else:
        parts = [_run_chunk(t) for t in tasks]
    rows = [r for part in parts for r in part[0]]
    total = parts[0][1].copy()
    total_sq = parts[0][2].copy()
    for part in parts[1:]:
        total += part[1]
        total_sq += part[2]
    mean = total / R
    var = np.maximum(total_sq / R - mean**2, 0.0) * R / (R - 1)
    plan = build_setup(cfg, n).plan
    return MonteCarloReport(
        config_hash=cfg.digest(),
        n=int(n),
        rows=rows,
        aggregates=aggregate(rows),
        config=cfg.to_dict(),
        risk_mean=mean,
        risk_se=np.sqrt(var / R),
        k_grid=plan.pc.k_grid.copy(),
        example_trace=rows[0].trace,
    )


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    r2: float
    stderr: float

    def to_dict(self) -> dict:
        return asdict(self)


def fit_slope(x, y) -> SlopeFit:
    """Least-squares fit of ``log y`` on ``log x``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < MIN_RATE_POINTS:
        raise ConfigError(f"slope fit needs at least {MIN_RATE_POINTS} points, got {x.size}")
    if np.any(x <= 0) or np.any(y <= 0):
        raise ConfigError("slope fit needs positive data")
    res = stats.linregress(np.log(x), np.log(y))
    return SlopeFit(float(res.slope), float(res.intercept), float(res.rvalue**2), float(res.stderr))


@dataclass
class RateStudy:
    config_hash: str
    p: float
    mu: float
    target_slope: float
    reports: list
    oracle_fit: SlopeFit
    adaptive_fit: SlopeFit

    def table(self) -> list:
        out = []
        for rep in self.reports:
            a = rep.aggregates
            out.append({"n": rep.n, "mean_loss_oracle": a["mean_loss_oracle"], "se_loss_oracle": a["se_loss_oracle"],
                        "mean_loss_adaptive": a["mean_loss_adaptive"], "se_loss_adaptive": a["se_loss_adaptive"],
                        "ratio_adaptive_to_oracle": a["ratio_adaptive_to_oracle"]})
        return out

    def to_dict(self) -> dict:
        return {
            "config_hash": self.config_hash,
            "p": self.p,
            "mu": self.mu,
            "target_slope": self.target_slope,
            "oracle_fit": self.oracle_fit.to_dict(),
            "adaptive_fit": self.adaptive_fit.to_dict(),
            "table": self.table(),
        }


def check_rate_grid(n_list):
    ns = sorted(int(n) for n in n_list)
    if len(set(ns)) < MIN_RATE_POINTS:
        raise ConfigError(f"rate study needs at least {MIN_RATE_POINTS} distinct n values, got {ns}")
    if ns[-1] / ns[0] < MIN_RATE_SPAN:
        raise ConfigError(f"rate study n grid must span a factor of at least {MIN_RATE_SPAN:g}, got {ns}")
    return ns


def rate_study(cfg: ExperimentConfig, n_list=None, workers: Optional[int] = None) -> RateStudy:
    """Log-log slopes of mean oracle and adaptive loss against ``n``."""
    ns = check_rate_grid(cfg.problem.n_list if n_list is None else n_list)
    reports = [monte_carlo(cfg, n, workers) for n in ns]
    mo = [r.aggregates["mean_loss_oracle"] for r in reports]
    ma = [r.aggregates["mean_loss_adaptive"] for r in reports]
    return RateStudy(
        config_hash=cfg.digest(),
        p=cfg.problem.p,
        mu=cfg.problem.mu,
        target_slope=-optimal_rate_exponent(cfg.problem.p, cfg.problem.mu),
        reports=reports,
        oracle_fit=fit_slope(ns, mo),
        adaptive_fit=fit_slope(ns, ma),
    )
