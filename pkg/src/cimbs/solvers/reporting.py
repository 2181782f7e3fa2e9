"""
CSV output: one result row per (algorithm, sweep point) and the plot-data files.

Columns are fixed; new columns are only ever appended.
"""
import csv
import logging
import math
import os
from dataclasses import astuple, dataclass, fields
from typing import Iterable, List, Optional, TextIO

from src.cim_core.errors import ResourceCapError
from src.cimbs.solvers.pipeline import Solution

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ResultRow:
    algorithm: str
    k: float
    lam: float
    mean_value: float
    std_value: float
    g_part: float
    s_part: float
    runtime_seconds: float
    rr_sets: int
    iterations: int
    truncated_flag: int

    @classmethod
    def from_solution(cls, solution: Solution, k: float, lam: float, timings: bool = True) -> "ResultRow":
        report = solution.report
        return cls(algorithm=report.algorithm, k=k, lam=lam, mean_value=solution.value,
                   std_value=report.evaluation.std, g_part=solution.g_part, s_part=solution.s_part,
                   runtime_seconds=report.runtime_seconds if timings else 0.0, rr_sets=report.rr_sets,
                   iterations=report.iterations, truncated_flag=int(report.truncated))

    @classmethod
    def from_cap_error(cls, algorithm: str, k: float, lam: float, error: ResourceCapError) -> "ResultRow":
        """Row for a run stopped by the RR-set cap: values are NaN, rr_sets is the count required."""
        nan = math.nan
        return cls(algorithm=algorithm, k=k, lam=lam, mean_value=nan, std_value=nan, g_part=nan, s_part=nan,
                   runtime_seconds=0.0, rr_sets=int(error.required), iterations=0, truncated_flag=1)


RESULT_COLUMNS = [f.name if f.name != "lam" else "lambda" for f in fields(ResultRow)]


def _writer(sink: TextIO):
    return csv.writer(sink, lineterminator="\n")


def write_results(rows: Iterable[ResultRow], sink: TextIO) -> None:
    writer = _writer(sink)
    writer.writerow(RESULT_COLUMNS)
    for row in rows:
        writer.writerow(astuple(row))


def _write_file(path: str, header: List[str], records: Iterable[tuple]) -> None:
    with open(path, "w", newline="") as f:
        writer = _writer(f)
        writer.writerow(header)
        writer.writerows(records)


def write_plot_data(rows: List[ResultRow], directory: str, base_k: Optional[float] = None,
                    base_lambda: Optional[float] = None) -> List[str]:
    """
    Write value_vs_k.csv, value_vs_lambda.csv and decomposition_vs_lambda.csv.

    The k curve keeps rows at base_lambda and the lambda curves keep rows at
    base_k; None keeps every row.
    """
    os.makedirs(directory, exist_ok=True)
    at_lambda = [r for r in rows if base_lambda is None or r.lam == base_lambda]
    at_k = [r for r in rows if base_k is None or r.k == base_k]

    paths = [os.path.join(directory, name)
             for name in ("value_vs_k.csv", "value_vs_lambda.csv", "decomposition_vs_lambda.csv")]
    _write_file(paths[0], ["algorithm", "k", "lambda", "mean_value", "std_value"],
                sorted(((r.algorithm, r.k, r.lam, r.mean_value, r.std_value) for r in at_lambda),
                       key=lambda t: (t[0], t[1])))
    _write_file(paths[1], ["algorithm", "lambda", "k", "mean_value", "std_value"],
                sorted(((r.algorithm, r.lam, r.k, r.mean_value, r.std_value) for r in at_k),
                       key=lambda t: (t[0], t[1])))
    _write_file(paths[2], ["algorithm", "lambda", "k", "g_part", "s_part"],
                sorted(((r.algorithm, r.lam, r.k, r.g_part, r.s_part) for r in at_k),
                       key=lambda t: (t[0], t[1])))
    logger.info(f"Wrote plot data to {directory}")
    return paths
