"""
Compartment count tables built from trajectories, and their CSV forms.
"""

import csv
import io
import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .exceptions import ReportError
from .specs import COMPARTMENTS, Compartment

logger = logging.getLogger(__name__)

HEADER = ['time'] + [c.value for c in COMPARTMENTS]
MARGINALS_HEADER = ['compartment', 'individual', 'time', 'probability']


class Aggregation(str, Enum):
    SINGLE = 'single'
    MEAN = 'mean'
    STACKED = 'stacked'


@dataclass(frozen=True)
class TimeSeriesTable:
    """
    ``series`` holds (label, counts) pairs; counts is (horizon, 4) in
    COMPARTMENTS order. Labels are run indices, or ``'mean'``.
    """

    mode: Aggregation
    population: int
    series: tuple

    @property
    def horizon(self):
        return self.series[0][1].shape[0]

    @property
    def labels(self):
        return [label for label, _ in self.series]

    def column(self, compartment, label=None):
        """Counts of one compartment over time for ``label`` (first series by default)."""
        index = COMPARTMENTS.index(Compartment(compartment))
        for key, counts in self.series:
            if label is None or key == label:
                return counts[:, index]
        raise KeyError(label)

    def rows(self):
        """(label, timestep, s, i, r, res) in series then time order."""
        for label, counts in self.series:
            for t, row in enumerate(counts, start=1):
                yield (label, t, *row.tolist())


def aggregate(trajectories, mode=Aggregation.SINGLE):
    trajectories = list(trajectories)
    mode = Aggregation(mode)
    if not trajectories:
        raise ReportError('no trajectories to aggregate', code='EmptyInput')
    first = trajectories[0]
    for trajectory in trajectories[1:]:
        if trajectory.infected.shape != first.infected.shape or trajectory.individuals != first.individuals:
            raise ReportError(
                f"run {trajectory.run_index} has shape {trajectory.infected.shape}, expected {first.infected.shape}",
                code='DimensionMismatch')

    population = len(first.individuals)
    if mode is Aggregation.SINGLE:
        if len(trajectories) != 1:
            raise ReportError(f"single mode takes exactly one run, got {len(trajectories)}", code='DimensionMismatch')
        return TimeSeriesTable(mode, population, ((first.run_index, first.counts()),))
    if mode is Aggregation.MEAN:
        mean = np.mean([t.counts() for t in trajectories], axis=0)
        return TimeSeriesTable(mode, population, (('mean', mean),))
    return TimeSeriesTable(mode, population, tuple((t.run_index, t.counts()) for t in trajectories))


def find_peaks(series):
    """
    Local maxima of a series as 1-based timesteps.

    Equal neighbours are collapsed first; a plateau counts once, at its first
    timestep, when it is strictly above both neighbouring plateaus. Endpoints
    are never peaks.
    """
    values = list(series)
    runs = []
    for t, value in enumerate(values, start=1):
        if not runs or value != runs[-1][0]:
            runs.append((value, t))
    return [
        runs[i][1] for i in range(1, len(runs) - 1)
        if runs[i][0] > runs[i - 1][0] and runs[i][0] > runs[i + 1][0]
    ]


def table_peaks(table, compartment=Compartment.INFECTED):
    return {label: find_peaks(table.column(compartment, label)) for label in table.labels}


# ============================================================
# CSV
# ============================================================

def _cell(value, decimal):
    return f"{value:.6f}" if decimal else str(int(value))


def write_table(table, stream):
    """Header row then one row per timestep; stacked tables get a leading ``run`` column."""
    writer = csv.writer(stream, lineterminator='\n')
    stacked = table.mode is Aggregation.STACKED
    decimal = table.mode is Aggregation.MEAN
    writer.writerow((['run'] if stacked else []) + HEADER)
    for label, t, *counts in table.rows():
        writer.writerow(([label] if stacked else []) + [t] + [_cell(v, decimal) for v in counts])


def format_table(table):
    buffer = io.StringIO()
    write_table(table, buffer)
    return buffer.getvalue()


def write_marginals(marginals, stream):
    writer = csv.writer(stream, lineterminator='\n')
    writer.writerow(MARGINALS_HEADER)
    for (compartment, individual, t), p in marginals.items():
        writer.writerow([compartment.value, individual, t, f"{p:.6f}"])


def format_marginals(marginals):
    buffer = io.StringIO()
    write_marginals(marginals, buffer)
    return buffer.getvalue()
