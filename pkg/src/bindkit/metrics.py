"""Evaluation metrics: MAE, affinity-binned MAE, threshold classification.

The binned report partitions samples by their TRUE log-affinity into
half-open bins [lo, lo+width); anything outside [start, stop) is pooled into
an out-of-range cell.  Since the cells partition the samples, the weighted
recombination of cell MAEs reproduces the overall MAE.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .gbdt import DimensionMismatchError

__all__ = [
    "MetricsError",
    "BinnedMae",
    "mae",
    "binned_mae",
    "classify_accuracy",
    "build_report",
    "write_report",
    "DEFAULT_BIN_START",
    "DEFAULT_BIN_STOP",
    "DEFAULT_BIN_WIDTH",
    "DEFAULT_THRESHOLD",
]

DEFAULT_BIN_START = -2.0
DEFAULT_BIN_STOP = 12.0
DEFAULT_BIN_WIDTH = 0.5
DEFAULT_THRESHOLD = 4.0


class MetricsError(ValueError):
    pass


def _pair(y_true, y_pred):
    t = np.asarray(y_true, dtype=np.float64).ravel()
    p = np.asarray(y_pred, dtype=np.float64).ravel()
    if len(t) != len(p):
        raise DimensionMismatchError(
            f"length mismatch: {len(t)} true vs {len(p)} predicted")
    if len(t) == 0:
        raise MetricsError("cannot score an empty sample")
    if not (np.isfinite(t).all() and np.isfinite(p).all()):
        raise MetricsError("scores require finite values")
    return t, p


def mae(y_true, y_pred) -> float:
    t, p = _pair(y_true, y_pred)
    return float(np.abs(t - p).mean())


@dataclass(frozen=True)
class BinnedMae:
    edges: tuple[float, ...]            # len(bins) + 1 ascending edges
    counts: tuple[int, ...]             # per bin
    maes: tuple[float | None, ...]      # None marks an empty bin
    out_of_range_count: int
    out_of_range_mae: float | None


def binned_mae(
    y_true, y_pred,
    start: float = DEFAULT_BIN_START,
    stop: float = DEFAULT_BIN_STOP,
    width: float = DEFAULT_BIN_WIDTH,
) -> BinnedMae:
    """MAE within half-open truth bins [edge, edge+width).

    Samples with truth outside [start, stop) land in the out-of-range cell.
    Empty bins report count 0 and a None MAE rather than being dropped, so
    the bin axis is stable across datasets.
    """
    t, p = _pair(y_true, y_pred)
    if width <= 0 or stop <= start:
        raise MetricsError("need stop > start and width > 0")
    n_bins = (stop - start) / width
    if abs(n_bins - round(n_bins)) > 1e-9:
        raise MetricsError("width must tile the [start, stop) range")
    n_bins = int(round(n_bins))
    err = np.abs(t - p)
    idx = np.floor((t - start) / width).astype(int)
    in_range = (t >= start) & (t < stop)
    idx_in = idx[in_range]
    # guard the float edge case where t just below stop floors onto n_bins
    idx_in = np.clip(idx_in, 0, n_bins - 1)
    counts = np.bincount(idx_in, minlength=n_bins)
    sums = np.bincount(idx_in, weights=err[in_range], minlength=n_bins)
    maes = tuple(float(s / c) if c else None for s, c in zip(sums, counts))
    oor = ~in_range
    oor_count = int(oor.sum())
    oor_mae = float(err[oor].mean()) if oor_count else None
    edges = tuple(start + i * width for i in range(n_bins + 1))
    return BinnedMae(edges=edges, counts=tuple(int(c) for c in counts),
                     maes=maes, out_of_range_count=oor_count,
                     out_of_range_mae=oor_mae)


def classify_accuracy(y_true, y_pred, threshold: float = DEFAULT_THRESHOLD) -> float:
    """Agreement of the binary strong-binder call (value < threshold).

    Values exactly at the threshold are 'not below' on both sides, so a
    prediction equal to the threshold agrees with a truth equal to it.
    """
    t, p = _pair(y_true, y_pred)
    return float(((t < threshold) == (p < threshold)).mean())


def build_report(
    y_true, y_pred,
    start: float = DEFAULT_BIN_START,
    stop: float = DEFAULT_BIN_STOP,
    width: float = DEFAULT_BIN_WIDTH,
    threshold: float = DEFAULT_THRESHOLD,
) -> dict:
    t, p = _pair(y_true, y_pred)
    binned = binned_mae(t, p, start=start, stop=stop, width=width)
    bins = []
    for i, (count, bmae) in enumerate(zip(binned.counts, binned.maes)):
        bins.append({
            "lo": binned.edges[i],
            "hi": binned.edges[i + 1],
            "count": count,
            "mae": bmae,
        })
    return {
        "n": int(len(t)),
        "mae": mae(t, p),
        "threshold": threshold,
        "accuracy_at_threshold": classify_accuracy(t, p, threshold),
        "bins": bins,
        "out_of_range": {
            "count": binned.out_of_range_count,
            "mae": binned.out_of_range_mae,
        },
    }


def write_report(report: dict, json_path, csv_path=None) -> None:
    """JSON report plus an optional per-bin CSV for plotting.  Empty-bin MAEs
    are null in JSON and empty cells in CSV."""
    with open(json_path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(report, fh, sort_keys=True, indent=2)
        fh.write("\n")
    if csv_path is not None:
        with open(csv_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("bin_lo,bin_hi,count,mae\n")
            for cell in report["bins"]:
                mae_cell = "" if cell["mae"] is None else repr(cell["mae"])
                fh.write(f"{cell['lo']!r},{cell['hi']!r},{cell['count']},{mae_cell}\n")
