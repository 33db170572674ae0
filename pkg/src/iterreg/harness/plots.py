"""Matplotlib figures of the plot-data files (rendered off-screen)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_PNG_META = {"Software": None}


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, dpi=110, metadata=_PNG_META)
    plt.close(fig)
    return path


def objective_figure(reports, path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    for rep in reports:
        t = rep.example_trace
        if t is None:
            continue
        line, = ax.loglog(t.k, t.objective, label=f"n={rep.n}")
        ax.axvline(t.k_hat, color=line.get_color(), ls=":", lw=0.8)
    ax.set_xlabel("iteration k")
    ax.set_ylabel("selection objective")
    ax.set_title("Penalized objective (first replicate); dotted: selected k")
    ax.legend(fontsize=8)
    return _save(fig, path)


def risk_figure(reports, path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    for rep in reports:
        if rep.risk_mean is None:
            continue
        line, = ax.loglog(rep.k_grid, rep.risk_mean, label=f"n={rep.n}")
        ax.axhline(rep.aggregates["mean_loss_adaptive"], color=line.get_color(), ls="--", lw=0.8)
    ax.set_xlabel("iteration k")
    ax.set_ylabel("mean loss")
    ax.set_title("Mean loss per fixed k; dashed: adaptive")
    ax.legend(fontsize=8)
    return _save(fig, path)


def rate_figure(study, path: Path) -> Path:
    ns = np.array([r.n for r in study.reports], dtype=float)
    fig, ax = plt.subplots(figsize=(6, 4))
    for key, fit, marker in (("mean_loss_oracle", study.oracle_fit, "o"),
                             ("mean_loss_adaptive", study.adaptive_fit, "s")):
        vals = [r.aggregates[key] for r in study.reports]
        ax.loglog(ns, vals, marker, label=f"{key.split('_')[-1]} (slope {fit.slope:.3f})")
        ax.loglog(ns, np.exp(fit.intercept) * ns**fit.slope, "-", lw=0.8)
    ref = study.reports[0].aggregates["mean_loss_oracle"] * (ns / ns[0]) ** study.target_slope
    ax.loglog(ns, ref, "k:", label=f"target slope {study.target_slope:.3f}")
    ax.set_xlabel("n")
    ax.set_ylabel("mean loss")
    ax.set_title(f"Rate study p={study.p:g}, mu={study.mu:g}")
    ax.legend(fontsize=8)
    return _save(fig, path)


def render_all(reports, rates, out: Path) -> list:
    out = Path(out)
    written = []
    if any(r.example_trace is not None for r in reports):
        written.append(objective_figure(reports, out / "objective.png"))
    if any(r.risk_mean is not None for r in reports):
        written.append(risk_figure(reports, out / "risk.png"))
    for rs in rates:
        name = f"rates_p{rs.p:g}_mu{rs.mu:g}.png" if len(rates) > 1 else "rates.png"
        written.append(rate_figure(rs, out / name))
    return written
