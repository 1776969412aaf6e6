"""
SVG charts of compartment counts over time, rendered through the
``epidemic/plot.svg`` template.
"""

import logging
import math
from enum import Enum

from django.template.loader import render_to_string

from .exceptions import ReportError
from .specs import Compartment

logger = logging.getLogger(__name__)

WIDTH, HEIGHT = 800, 500
MARGIN_LEFT, MARGIN_RIGHT, MARGIN_TOP, MARGIN_BOTTOM = 60, 20, 30, 50
Y_TICKS = 5
MAX_X_TICKS = 12

COLORS = {
    Compartment.SUSCEPTIBLE: '#1f77b4',
    Compartment.INFECTED: '#d62728',
    Compartment.RECOVERED: '#2ca02c',
    Compartment.RESISTANT: '#9467bd',
}


class PlotStyle(str, Enum):
    LINE = 'line'
    SCATTER = 'scatter'


def _context(table, style, series, xlabel):
    left, right = MARGIN_LEFT, WIDTH - MARGIN_RIGHT
    top, bottom = MARGIN_TOP, HEIGHT - MARGIN_BOTTOM
    horizon = table.horizon
    ymax = max([1.0] + [float(table.column(c, label).max()) for c in series for label in table.labels])

    def x_of(t):
        if horizon == 1:
            return (left + right) / 2
        return left + (t - 1) * (right - left) / (horizon - 1)

    def y_of(value):
        return bottom - float(value) * (bottom - top) / ymax

    step = math.ceil(horizon / MAX_X_TICKS)
    xticks = [{'x': x_of(t), 'value': t} for t in range(1, horizon + 1, step)]
    yticks = []
    for i in range(Y_TICKS):
        value = ymax * i / (Y_TICKS - 1)
        yticks.append({'y': y_of(value), 'label_y': y_of(value) + 4, 'value': value})

    opacity = '1' if len(table.labels) == 1 else '0.6'
    lines = []
    for compartment in series:
        for label in table.labels:
            column = table.column(compartment, label)
            lines.append({
                'compartment': compartment.value,
                'label': label,
                'color': COLORS[compartment],
                'opacity': opacity,
                'points': [(x_of(t), y_of(v)) for t, v in enumerate(column, start=1)],
            })

    ylabel = f"{series[0].value} (individuals)" if len(series) == 1 else 'individuals'
    return {
        'width': WIDTH,
        'height': HEIGHT,
        'left': left,
        'right': right,
        'top': top,
        'bottom': bottom,
        'xticks': xticks,
        'yticks': yticks,
        'series': lines,
        'scatter': style is PlotStyle.SCATTER,
        'xlabel': xlabel,
        'xlabel_x': (left + right) / 2,
        'ylabel': ylabel,
        'ylabel_y': (top + bottom) / 2,
    }


def render_plot(table, style=PlotStyle.LINE, series=(Compartment.INFECTED,), out=None, xlabel='time (weeks)'):
    """
    One polyline (or point set) per compartment in ``series`` per run or
    aggregate in ``table``. Returns the SVG text; writes it to ``out`` (a path
    or text stream) when given.
    """
    style = PlotStyle(style)
    series = [Compartment(c) for c in series]
    if not series:
        raise ReportError('no compartments selected for plotting', code='EmptySeries')
    if not table.series:
        raise ReportError('table has no series to plot', code='EmptySeries')

    svg = render_to_string('epidemic/plot.svg', _context(table, style, series, xlabel))
    if out is None:
        return svg
    try:
        if hasattr(out, 'write'):
            out.write(svg)
        else:
            with open(out, 'w', encoding='utf-8', newline='\n') as f:
                f.write(svg)
    except OSError as e:
        raise ReportError(f"cannot write plot to {out}: {e}", code='IoFailure') from e
    logger.info(f"Plot written ({style.value}, {len(series)} compartment(s), {len(table.labels)} series)")
    return svg
