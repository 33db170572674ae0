"""Experiment configuration: a single JSON document with four blocks.

Every field has a default; :meth:`ExperimentConfig.to_dict` materializes all
of them so emitted summaries describe the run completely.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Optional, Union

from ..errors import ConfigError
from ..filters import SCHEDULE_RULES
from ..model import NOISE_KINDS, min_dimension
from ..selector import L_RULES

DEFAULT_N_LIST = (250, 1000, 4000, 16000)
DEFAULT_GRID = ((1.0, 0.25), (1.0, 0.5), (1.5, 0.25), (1.5, 0.5))


@dataclass(frozen=True)
class ProblemBlock:
    p: float = 1.0
    mu: float = 0.5
    source_rho: float = 50.0
    d_m: Union[str, int] = 128
    n_list: tuple = DEFAULT_N_LIST
    noise_kind: str = "gaussian"
    noise_sigma: float = 1.0
    omega_decay: float = 0.51
    tail_dim: int = 0

    def dimension(self, n: int) -> int:
        if self.d_m == "auto":
            return min_dimension(n, self.p)
        return int(self.d_m)


@dataclass(frozen=True)
class FilterBlock:
    kind: str = "landweber"
    tau: Union[str, float] = "default"
    schedule: str = "constant"
    schedule_top: Union[str, float] = "lambda1"
    schedule_ratio: float = 0.5
    k_max: Union[str, int] = "default"


@dataclass(frozen=True)
class PenaltyBlock:
    r: float = 2.5
    l_rule: str = "log"
    l_value: float = 0.0
    sigma2: Union[str, float] = "known"


@dataclass(frozen=True)
class RunBlock:
    replicates: int = 200
    base_seed: int = 20240611
    workers: int = 1
    out_dir: str = "out"
    save_traces: bool = False
    nu: float = 0.5
    C: float = 1.0
    d: float = 1.0


@dataclass(frozen=True)
class ExperimentConfig:
    problem: ProblemBlock = field(default_factory=ProblemBlock)
    filter: FilterBlock = field(default_factory=FilterBlock)
    penalty: PenaltyBlock = field(default_factory=PenaltyBlock)
    run: RunBlock = field(default_factory=RunBlock)

    def __post_init__(self):
        validate(self)

    def to_dict(self) -> dict:
        doc = asdict(self)
        doc["problem"]["n_list"] = list(self.problem.n_list)
        return doc

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(doc) - {"problem", "filter", "penalty", "run"}
        if unknown:
            raise ConfigError(f"unknown config blocks: {sorted(unknown)}")
        blocks = {}
        for name, kind in (("problem", ProblemBlock), ("filter", FilterBlock),
                           ("penalty", PenaltyBlock), ("run", RunBlock)):
            sub = doc.get(name, {}) or {}
            if not isinstance(sub, dict):
                raise ConfigError(f"block {name!r} must be an object")
            try:
                blocks[name] = kind(**sub)
            except TypeError as exc:
                raise ConfigError(f"block {name!r}: {exc}") from None
        if isinstance(blocks["problem"].n_list, list):
            blocks["problem"] = replace(blocks["problem"], n_list=tuple(blocks["problem"].n_list))
        return cls(**blocks)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
        return cls.from_dict(doc)

    def digest(self) -> str:
        """Hash of everything that influences results (not workers or paths)."""
        doc = self.to_dict()
        doc["run"].pop("workers")
        doc["run"].pop("out_dir")
        blob = json.dumps(doc, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def with_overrides(self, *, seed: Optional[int] = None, workers: Optional[int] = None,
                       out_dir: Optional[str] = None, **problem) -> "ExperimentConfig":
        run = self.run
        if seed is not None:
            run = replace(run, base_seed=seed)
        if workers is not None:
            run = replace(run, workers=workers)
        if out_dir is not None:
            run = replace(run, out_dir=out_dir)
        prob = replace(self.problem, **problem) if problem else self.problem
        return replace(self, problem=prob, run=run)


def validate(cfg: ExperimentConfig):
    pb, fb, qb, rb = cfg.problem, cfg.filter, cfg.penalty, cfg.run
    if not pb.p > 0.5:
        raise ConfigError(f"problem.p must exceed 1/2, got {pb.p}")
    if not pb.mu > 0:
        raise ConfigError(f"problem.mu must be positive, got {pb.mu}")
    if not pb.source_rho > 0:
        raise ConfigError("problem.source_rho must be positive")
    if not pb.noise_sigma >= 0:
        raise ConfigError("problem.noise_sigma must be nonnegative")
    if pb.noise_kind not in NOISE_KINDS:
        raise ConfigError(f"problem.noise_kind must be one of {NOISE_KINDS}")
    if not pb.omega_decay > 0.5:
        raise ConfigError("problem.omega_decay must exceed 1/2")
    if not pb.n_list or any(int(n) < 1 for n in pb.n_list):
        raise ConfigError("problem.n_list must list positive sample sizes")
    if pb.d_m != "auto" and (not isinstance(pb.d_m, int) or pb.d_m < 1):
        raise ConfigError(f"problem.d_m must be 'auto' or a positive integer, got {pb.d_m!r}")
    if pb.tail_dim < 0:
        raise ConfigError("problem.tail_dim must be nonnegative")
    for n in pb.n_list:
        d = pb.dimension(int(n))
        if d + pb.tail_dim > n:
            raise ConfigError(f"d_m + tail_dim = {d + pb.tail_dim} exceeds n = {n}")
        if d < min_dimension(int(n), pb.p):
            raise ConfigError(f"d_m = {d} is below the minimal dimension {min_dimension(int(n), pb.p)} at n = {n}")
    if fb.kind not in ("landweber", "multistep"):
        raise ConfigError(f"filter.kind must be landweber or multistep, got {fb.kind!r}")
    if fb.tau != "default" and not (isinstance(fb.tau, (int, float)) and fb.tau > 0):
        raise ConfigError("filter.tau must be 'default' or a positive number")
    if fb.schedule not in SCHEDULE_RULES or fb.schedule == "explicit":
        raise ConfigError("filter.schedule must be 'constant' or 'geometric'")
    if fb.schedule_top != "lambda1" and not (isinstance(fb.schedule_top, (int, float)) and fb.schedule_top > 0):
        raise ConfigError("filter.schedule_top must be 'lambda1' or a positive number")
    if not 0 < fb.schedule_ratio <= 1:
        raise ConfigError("filter.schedule_ratio must lie in (0, 1]")
    if fb.k_max != "default" and not (isinstance(fb.k_max, int) and fb.k_max >= 1):
        raise ConfigError("filter.k_max must be 'default' or a positive integer")
    if not qb.r > 2:
        raise ConfigError(f"penalty.r must exceed 2, got {qb.r}")
    if qb.l_rule not in L_RULES:
        raise ConfigError(f"penalty.l_rule must be one of {L_RULES}")
    if qb.l_value < 0:
        raise ConfigError("penalty.l_value must be nonnegative")
    if qb.sigma2 not in ("known", "plugin") and not (isinstance(qb.sigma2, (int, float)) and qb.sigma2 >= 0):
        raise ConfigError("penalty.sigma2 must be 'known', 'plugin' or a nonnegative number")
    if rb.replicates < 1:
        raise ConfigError("run.replicates must be >= 1")
    if rb.workers < 1:
        raise ConfigError("run.workers must be >= 1")
    if not 0 < rb.nu < 1 or not rb.C > 0 or not rb.d > 0:
        raise ConfigError("run.nu must lie in (0, 1); run.C and run.d must be positive")


def grid_configs(base: ExperimentConfig, grid=DEFAULT_GRID):
    """One config per ``(p, mu)`` pair of the grid."""
    return [base.with_overrides(p=p, mu=mu) for p, mu in grid]
