"""
Tests for result rows, the results CSV and the plot-data files.
"""

import csv
import io
import math

import numpy as np

from src.cim_core.errors import ResourceCapError
from src.cimbs.solvers.optimize import Trace
from src.cimbs.solvers.pipeline import Evaluation, RunReport, Solution
from src.cimbs.solvers.reporting import RESULT_COLUMNS, ResultRow, write_plot_data, write_results


def _solution(algorithm="proxgrad_ris"):
    trace = Trace(iterations=42, truncated=True)
    report = RunReport(algorithm=algorithm, trace=trace, rr_sets=1234, final_theta=1000,
                       timings={"sampling": 1.5, "optimize": 0.25, "evaluate": 0.25},
                       evaluation=Evaluation(mean=7.5, std=0.5, g_part=6.0, s_part=1.5))
    return Solution(x=np.zeros(2), value=7.5, g_part=6.0, s_part=1.5, report=report)


def _read(text):
    return list(csv.reader(io.StringIO(text)))


class TestResultRow:
    def test_from_solution(self):
        row = ResultRow.from_solution(_solution(), 2.0, 0.5)
        assert row == ResultRow("proxgrad_ris", 2.0, 0.5, 7.5, 0.5, 6.0, 1.5, 2.0, 1234, 42, 1)

    def test_timings_can_be_dropped(self):
        assert ResultRow.from_solution(_solution(), 2.0, 0.5, timings=False).runtime_seconds == 0.0

    def test_from_cap_error(self):
        row = ResultRow.from_cap_error("uppergrad_ris", 1.0, 0.0, ResourceCapError("too many", 5000, 100))
        assert math.isnan(row.mean_value) and math.isnan(row.s_part)
        assert (row.rr_sets, row.iterations, row.truncated_flag) == (5000, 0, 1)


def test_results_csv():
    sink = io.StringIO()
    write_results([ResultRow.from_solution(_solution(), 2.0, 0.5)], sink)
    rows = _read(sink.getvalue())
    assert rows[0] == RESULT_COLUMNS
    assert ",".join(rows[0]) == ("algorithm,k,lambda,mean_value,std_value,g_part,s_part,runtime_seconds,"
                                 "rr_sets,iterations,truncated_flag")
    assert rows[1] == ["proxgrad_ris", "2.0", "0.5", "7.5", "0.5", "6.0", "1.5", "2.0", "1234", "42", "1"]
    assert "\r" not in sink.getvalue()


def test_plot_data_filters_base_values(tmp_path):
    rows = [ResultRow.from_solution(_solution(name), k, lam)
            for name in ("proxgrad_ris", "greedy_ris") for k in (1.0, 2.0) for lam in (0.0, 1.0)]
    paths = write_plot_data(rows, str(tmp_path / "plots"), base_k=1.0, base_lambda=0.0)
    assert [p.rsplit("/", 1)[-1] for p in paths] == ["value_vs_k.csv", "value_vs_lambda.csv",
                                                      "decomposition_vs_lambda.csv"]

    with open(paths[0]) as f:
        by_k = _read(f.read())
    assert by_k[0] == ["algorithm", "k", "lambda", "mean_value", "std_value"]
    assert [(r[0], r[1], r[2]) for r in by_k[1:]] == [("greedy_ris", "1.0", "0.0"), ("greedy_ris", "2.0", "0.0"),
                                                      ("proxgrad_ris", "1.0", "0.0"), ("proxgrad_ris", "2.0", "0.0")]

    with open(paths[2]) as f:
        decomposition = _read(f.read())
    assert decomposition[0] == ["algorithm", "lambda", "k", "g_part", "s_part"]
    assert len(decomposition) == 5
    assert all(r[2] == "1.0" for r in decomposition[1:])
