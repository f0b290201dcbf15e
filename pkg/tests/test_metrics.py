"""Metric tests.

The central oracle: binned cells partition the samples, so recombining cell
MAEs weighted by counts must reproduce the overall MAE to float precision.
"""
import json

import numpy as np
import pytest

from bindkit.gbdt import DimensionMismatchError
from bindkit.metrics import (
    DEFAULT_BIN_START,
    DEFAULT_BIN_STOP,
    DEFAULT_BIN_WIDTH,
    DEFAULT_THRESHOLD,
    MetricsError,
    binned_mae,
    build_report,
    classify_accuracy,
    mae,
    write_report,
)


def test_mae_hand_values():
    assert mae([1.0, 2.0, 3.0], [1.0, 2.0, 3.0]) == 0.0
    assert mae([0.0, 0.0], [1.0, -1.0]) == 1.0
    assert mae([4.0], [2.5]) == 1.5
    assert mae([1.0, 5.0], [2.0, 3.0]) == 1.5


def test_defaults():
    assert (DEFAULT_BIN_START, DEFAULT_BIN_STOP) == (-2.0, 12.0)
    assert DEFAULT_BIN_WIDTH == 0.5
    assert DEFAULT_THRESHOLD == 4.0
    report = binned_mae([0.0], [0.0])
    assert len(report.counts) == 28
    assert report.edges[0] == -2.0 and report.edges[-1] == 12.0


def test_recombination_reproduces_overall_mae():
    rng = np.random.default_rng(17)
    t = rng.uniform(-4.0, 14.0, size=2000)      # some mass out of range
    p = t + rng.standard_normal(2000)
    report = binned_mae(t, p)
    total = sum(report.counts) + report.out_of_range_count
    assert total == 2000
    acc = 0.0
    for count, cell_mae in zip(report.counts, report.maes):
        if count:
            acc += count * cell_mae
    acc += report.out_of_range_count * report.out_of_range_mae
    assert abs(acc / total - mae(t, p)) <= 1e-12


def test_bin_edges_are_half_open():
    # truth exactly on an inner edge belongs to the right bin
    report = binned_mae([0.5, 0.5 - 1e-9], [0.0, 0.0],
                        start=0.0, stop=1.0, width=0.5)
    assert report.counts == (1, 1)
    # truth exactly at stop is out of range, start is in
    report = binned_mae([0.0, 1.0], [0.0, 0.0], start=0.0, stop=1.0, width=0.5)
    assert report.counts == (1, 0)
    assert report.out_of_range_count == 1


def test_empty_bins_are_none_not_dropped():
    report = binned_mae([0.1, 0.9], [0.0, 1.0], start=0.0, stop=2.0, width=0.5)
    assert report.counts == (1, 1, 0, 0)
    assert report.maes[2] is None and report.maes[3] is None
    assert report.out_of_range_count == 0
    assert report.out_of_range_mae is None


def test_out_of_range_pooling():
    report = binned_mae([-5.0, 20.0, 1.0], [-4.0, 22.0, 1.0],
                        start=0.0, stop=2.0, width=1.0)
    assert report.out_of_range_count == 2
    assert report.out_of_range_mae == pytest.approx(1.5)
    assert report.counts == (0, 1)


def test_binning_validation():
    with pytest.raises(MetricsError):
        binned_mae([1.0], [1.0], start=0.0, stop=1.0, width=0.3)
    with pytest.raises(MetricsError):
        binned_mae([1.0], [1.0], start=1.0, stop=0.0, width=0.5)
    with pytest.raises(MetricsError):
        binned_mae([1.0], [1.0], start=0.0, stop=1.0, width=0.0)
    # a width that tiles only within float tolerance is accepted
    binned_mae([1.0], [1.0], start=0.0, stop=0.3, width=0.1)


def test_classification_accuracy_hand_fixture():
    truth = [3.0, 5.0, 3.0, 5.0]
    pred = [3.5, 4.5, 4.5, 4.2]
    assert classify_accuracy(truth, pred) == 0.75


def test_threshold_equality_is_not_below():
    assert classify_accuracy([4.0], [4.0]) == 1.0
    assert classify_accuracy([4.0], [3.999999]) == 0.0
    assert classify_accuracy([3.999999], [4.0]) == 0.0
    assert classify_accuracy([5.0, 1.0], [9.0, 0.5], threshold=2.0) == 1.0


def test_input_validation():
    with pytest.raises(DimensionMismatchError):
        mae([1.0, 2.0], [1.0])
    with pytest.raises(MetricsError):
        mae([], [])
    with pytest.raises(MetricsError):
        mae([np.nan], [1.0])
    with pytest.raises(MetricsError):
        classify_accuracy([1.0], [np.inf])


def test_report_structure():
    rng = np.random.default_rng(3)
    t = rng.uniform(0.0, 10.0, 50)
    p = t + 0.25
    report = build_report(t, p)
    assert report["n"] == 50
    assert report["mae"] == pytest.approx(0.25)
    assert report["threshold"] == 4.0
    assert len(report["bins"]) == 28
    assert report["bins"][0]["lo"] == -2.0
    assert report["bins"][-1]["hi"] == 12.0
    assert sum(cell["count"] for cell in report["bins"]) == 50
    assert report["out_of_range"]["count"] == 0


def test_write_report_files(tmp_path):
    t = [1.0, 1.2, 3.0]
    p = [1.1, 1.0, 3.5]
    report = build_report(t, p, start=0.0, stop=4.0, width=1.0)
    json_path = tmp_path / "report.json"
    csv_path = tmp_path / "report.csv"
    write_report(report, json_path, csv_path)

    parsed = json.loads(json_path.read_text())
    assert parsed == report
    lines = csv_path.read_text().splitlines()
    assert lines[0] == "bin_lo,bin_hi,count,mae"
    assert len(lines) == 5
    cells = lines[2].split(",")            # bin [1, 2) holds the first two
    assert cells[2] == "2"
    assert float(cells[3]) == pytest.approx(0.15)
    empty = lines[1].split(",")            # bin [0, 1) is empty
    assert empty[2] == "0" and empty[3] == ""

    # byte stability
    again_json = tmp_path / "again.json"
    again_csv = tmp_path / "again.csv"
    write_report(report, again_json, again_csv)
    assert again_json.read_bytes() == json_path.read_bytes()
    assert again_csv.read_bytes() == csv_path.read_bytes()
