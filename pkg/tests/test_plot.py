import xml.etree.ElementTree as ET

import pytest

from confbias.errors import ConfigurationError
from confbias.plot import emit_plot, render_svg

NS = {"svg": "http://www.w3.org/2000/svg"}


def test_svg_parses_and_has_one_line_per_series(tmp_path):
    series = [("vanilla", [0.79, 0.38, 0.02], [1.0, 0.5, 0.03]),
              ("IP <0.1>", [0.79, 0.38, 0.02], [0.9, 0.4, 0.02])]
    path = tmp_path / "p.svg"
    emit_plot(series, path, "bias & noise", "sigma", "mean |e|")
    root = ET.parse(path).getroot()
    assert len(root.findall("svg:polyline", NS)) == 2
    legend = [g.find("svg:text", NS).text for g in root.findall("svg:g", NS)]
    assert legend == ["vanilla", "IP <0.1>"]
    pts = root.find("svg:polyline", NS).get("points").split()
    assert len(pts) == 3


def test_constant_series_still_renders():
    ET.fromstring(render_svg([("flat", [1.0, 1.0], [2.0, 2.0])]))


@pytest.mark.parametrize("series", [[], [("a", [], [])], [("a", [1, 2], [1])]])
def test_bad_series(series):
    with pytest.raises(ConfigurationError):
        render_svg(series)
