"""SVG figure rendering from logged columns."""

import numpy as np
import pytest

from quadmpc.output import CSV_COLUMNS
from quadmpc.svgplot import (
    FIGURE_NAMES,
    LEG_LABELS,
    UnknownFigureError,
    _nice_ticks,
    render_figure,
)


def fake_columns(n=400):
    rng = np.random.default_rng(3)
    t = np.arange(n) * 0.001
    cols = {name: rng.normal(size=n) for name in CSV_COLUMNS}
    cols["t"] = t
    cols["px"] = 0.4 * t
    cols["py"] = 0.05 * np.sin(8 * t)
    for leg in range(4):
        cols[f"c{leg}"] = (np.arange(n) // 50 % 2 == leg % 2).astype(float)
        cols[f"f{leg}z"] = 13.5 * cols[f"c{leg}"]
    return cols


def test_nice_ticks_cover_the_range():
    ticks = _nice_ticks(0.0, 1.0)
    assert ticks[0] >= 0.0 and ticks[-1] <= 1.0 + 1e-9
    assert len(ticks) >= 3
    steps = np.diff(ticks)
    assert np.allclose(steps, steps[0])
    assert _nice_ticks(2.0, 2.0)  # degenerate span still yields ticks
    assert _nice_ticks(float("nan"), 1.0) == [0.0]


@pytest.mark.parametrize("name", FIGURE_NAMES)
def test_every_figure_is_wellformed_svg(name):
    svg = render_figure(fake_columns(), name)
    assert svg.startswith("<svg")
    assert svg.rstrip().endswith("</svg>")
    assert svg.count("<") == svg.count(">")
    # no raw ampersands that would break an XML parser
    assert "&" not in svg.replace("&amp;", "").replace("&lt;", "").replace("&gt;", "")


def test_grf_figure_labels_all_four_legs():
    svg = render_figure(fake_columns(), "grf_z")
    for label in LEG_LABELS:
        assert f">{label}<" in svg
    for color in ("#1f77b4", "#d62728", "#2ca02c", "#9467bd"):
        assert color in svg


def test_states_figure_has_four_panels():
    svg = render_figure(fake_columns(), "states")
    for title in ("position", "velocity", "orientation", "angular rate"):
        assert title in svg
    assert svg.count('class="panel"') == 4


def test_top_view_marks_start_and_end():
    svg = render_figure(fake_columns(), "top_view")
    assert 'fill="green"' in svg
    assert 'fill="red"' in svg


def test_unknown_figure_lists_valid_names():
    with pytest.raises(UnknownFigureError) as exc_info:
        render_figure(fake_columns(), "histogram")
    msg = str(exc_info.value)
    for name in FIGURE_NAMES:
        assert name in msg
