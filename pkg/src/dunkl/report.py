"""Ratio-sweep reports: the operational form of a two-sided sharp estimate.

A sweep evaluates exact/envelope at every grid point; the report records the
bracket [min, max], its spread, where the extremes happened, and (when the
grid is parameterized by a pairing product) the least-squares drift slope of
log10(ratio) against log10(pairing) over the saturated tail.  A bounded
spread with a flat tail is the numerical certificate of an "asymp" claim.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np


@dataclass
class RatioReport:
    grid: str
    min_ratio: float
    max_ratio: float
    argmin: dict
    argmax: dict
    count: int
    rows: list[dict] = field(repr=False, default_factory=list)
    log_min: float = 0.0
    log_max: float = 0.0
    slope_full: float | None = None
    slope_tail: float | None = None

    @property
    def spread(self) -> float:
        if self.log_max - self.log_min < 700:
            return math.exp(self.log_max - self.log_min)
        return math.inf

    def passes(self, spread_bound: float) -> bool:
        return (self.min_ratio > 0 and math.isfinite(self.log_min)
                and math.isfinite(self.log_max) and self.spread <= spread_bound)

    def summary_line(self, spread_bound: float | None = None) -> str:
        verdict = ""
        if spread_bound is not None:
            verdict = " PASS" if self.passes(spread_bound) else " FAIL"
        drift = ""
        if self.slope_tail is not None:
            drift = f" tail_slope={self.slope_tail:+.4f}"
        return (f"{self.grid}: n={self.count} ratio in [{self.min_ratio:.6g}, "
                f"{self.max_ratio:.6g}] spread={self.spread:.6g}{drift}{verdict}")


def _ls_slope(x: np.ndarray, y: np.ndarray) -> float | None:
    if len(x) < 3 or np.ptp(x) == 0:
        return None
    return float(np.polyfit(x, y, 1)[0])


def build_ratio_report(grid: str, rows: Sequence[dict], *,
                       drift_key: str | None = None,
                       tail_cut: float = 1e2) -> RatioReport:
    """Summarize sweep rows; each row needs 'log_ratio' plus its inputs.

    ``drift_key`` names the row field (a positive sweep parameter) against
    which the drift slope is fitted; the tail fit keeps rows with
    drift_key >= tail_cut.
    """
    if not rows:
        raise ValueError("empty sweep grid")
    logr = np.array([r["log_ratio"] for r in rows], dtype=float)
    if not np.all(np.isfinite(logr)):
        bad = rows[int(np.where(~np.isfinite(logr))[0][0])]
        raise ValueError(f"non-finite ratio at grid point {bad}")
    i_min = int(np.argmin(logr))
    i_max = int(np.argmax(logr))

    def inputs(r):
        return {k: (float(v) if isinstance(v, (int, float, np.floating)) else v)
                for k, v in r.items()
                if k not in ("log_ratio", "log_exact", "log_envelope", "err_indicator")}

    slope_full = slope_tail = None
    if drift_key is not None:
        x = np.array([r[drift_key] for r in rows], dtype=float)
        lx = np.log10(x)
        ly = logr / math.log(10.0)
        slope_full = _ls_slope(lx, ly)
        mask = x >= tail_cut
        slope_tail = _ls_slope(lx[mask], ly[mask])
    return RatioReport(
        grid=grid,
        min_ratio=math.exp(logr[i_min]) if logr[i_min] > -700 else 0.0,
        max_ratio=math.exp(logr[i_max]) if logr[i_max] < 700 else math.inf,
        argmin=inputs(rows[i_min]),
        argmax=inputs(rows[i_max]),
        count=len(rows),
        rows=list(rows),
        log_min=float(logr[i_min]),
        log_max=float(logr[i_max]),
        slope_full=slope_full,
        slope_tail=slope_tail,
    )
