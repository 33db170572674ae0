"""CSV/JSON report emission.

File layout under the output directory::

    replicates.csv      one row per replicate, columns ROW_COLUMNS
    summary.json        config echo, aggregates, slope fits, metadata
    objective_curve.csv n, k, residual_sq, penalty, objective (first replicate)
    risk_curve.csv      n, k, mean_loss, se_loss (mean loss of every fixed k)
    rate_table.csv      n, mean/se oracle and adaptive loss (rate studies)
    traces/             per-replicate selection traces when requested
    *.png               figures of the plot-data files

All CSV output is deterministic; the only timestamp lives in the
``metadata`` block of ``summary.json``.
"""

from __future__ import annotations

import csv
import datetime as _dt
import json
from pathlib import Path
from typing import Optional, Sequence

from .. import __version__
from ..errors import IterRegError
from .montecarlo import ROW_COLUMNS, MonteCarloReport, RateStudy

RATE_COLUMNS = ("n", "mean_loss_oracle", "se_loss_oracle", "mean_loss_adaptive", "se_loss_adaptive",
                "ratio_adaptive_to_oracle")
GRID_NOTE = "synthetic experiment design; grids and truths are artifact choices, not taken from the source method"


class ReportError(IterRegError, OSError):
    """Report files could not be written."""


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return v


def _write_csv(path: Path, header: Sequence[str], rows):
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([_fmt(v) for v in row])
    except OSError as exc:
        raise ReportError(f"cannot write {path}: {exc}") from None
    return path


def _write_text(path: Path, text: str):
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    except OSError as exc:
        raise ReportError(f"cannot write {path}: {exc}") from None
    return path


def replicate_rows(reports: Sequence[MonteCarloReport]):
    for rep in reports:
        for r in rep.rows:
            yield r.row()


def write_replicates(reports, out: Path, fmt: str = "csv") -> Path:
    if fmt == "json":
        doc = {"columns": list(ROW_COLUMNS), "rows": [list(r) for r in replicate_rows(reports)]}
        return _write_text(out / "replicates.json", json.dumps(doc, indent=1) + "\n")
    return _write_csv(out / "replicates.csv", ROW_COLUMNS, replicate_rows(reports))


def summary_doc(reports: Sequence[MonteCarloReport], rates: Sequence[RateStudy] = (),
                config: Optional[dict] = None, timestamp: bool = True) -> dict:
    doc = {
        "config_hash": reports[0].config_hash if reports else None,
        "config": config if config is not None else (reports[0].config if reports else {}),
        "note": GRID_NOTE,
        "experiments": [rep.to_dict() for rep in reports],
        "rate_studies": [rs.to_dict() for rs in rates],
    }
    if timestamp:
        doc["metadata"] = {
            "created": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
            "version": __version__,
        }
    return doc


def load_summary(path) -> list:
    """Reports stored in a ``summary.json``."""
    doc = json.loads(Path(path).read_text())
    return [MonteCarloReport.from_dict(e) for e in doc["experiments"]]


def emit_reports(reports: Sequence[MonteCarloReport], out_dir, *, rates: Sequence[RateStudy] = (),
                 fmt: str = "csv", figures: bool = True, config: Optional[dict] = None) -> list:
    """Write every report file; returns the list of written paths."""
    out = Path(out_dir)
    written = [write_replicates(reports, out, fmt)]
    written.append(_write_text(out / "summary.json",
                               json.dumps(summary_doc(reports, rates, config), indent=2, sort_keys=True) + "\n"))

    obj_rows = []
    for rep in reports:
        t = rep.example_trace
        if t is None:
            continue
        for k, res, _tr, _rad, pen, obj in t.rows():
            obj_rows.append((rep.n, k, res, pen, obj))
    written.append(_write_csv(out / "objective_curve.csv", ("n", "k", "residual_sq", "penalty", "objective"), obj_rows))

    risk_rows = []
    for rep in reports:
        if rep.risk_mean is None:
            continue
        for k, m, s in zip(rep.k_grid, rep.risk_mean, rep.risk_se):
            risk_rows.append((rep.n, int(k), float(m), float(s)))
    written.append(_write_csv(out / "risk_curve.csv", ("n", "k", "mean_loss", "se_loss"), risk_rows))

    for rs in rates:
        name = f"rate_table_p{rs.p:g}_mu{rs.mu:g}.csv" if len(rates) > 1 else "rate_table.csv"
        written.append(_write_csv(out / name, RATE_COLUMNS, ([row[c] for c in RATE_COLUMNS] for row in rs.table())))

    for rep in reports:
        for r in rep.rows:
            if r.trace is not None and rep.config.get("run", {}).get("save_traces"):
                written.append(_write_text(out / r.trace_ref, r.trace.to_csv()))

    if figures:
        from . import plots

        written.extend(plots.render_all(reports, rates, out))
    return written
