import xml.etree.ElementTree as ET

import pytest

from hydrospec.svg import Figure, nice_ticks

NS = "{http://www.w3.org/2000/svg}"


def sample_figure():
    fig = Figure(title="demo & test", xlabel="x", ylabel="y")
    fig.line([0, 1, 2, 3], [0, 1, 4, 9], label="square")
    fig.scatter([0.5, 1.5], [2, 3], label="points")
    fig.rect(0, 0, 1, 1, label="box")
    fig.circle(2, 2, 0.5)
    fig.hspan(0, 3, 5)
    return fig


def test_parses_as_svg():
    root = ET.fromstring(sample_figure().to_svg().encode())
    assert root.tag == NS + "svg" and root.get("version") == "1.1"
    assert len(root.findall(f".//{NS}polyline")) >= 2
    texts = [t.text for t in root.iter(NS + "text")]
    assert "demo & test" in texts and "square" in texts and "points" in texts


def test_deterministic_bytes(tmp_path):
    a, b = tmp_path / "a.svg", tmp_path / "b.svg"
    sample_figure().save(a)
    sample_figure().save(b)
    assert a.read_bytes() == b.read_bytes()
    assert b"\r\n" not in a.read_bytes()


def test_log_axes_skip_nonpositive():
    fig = Figure(logx=True, logy=True)
    fig.line([0, 1, 10, 100], [1, 0.1, 0.01, -1])
    root = ET.fromstring(fig.to_svg().encode())
    (poly,) = root.findall(f".//{NS}polyline")
    assert len(poly.get("points").split()) == 2


def test_nan_breaks_polyline():
    fig = Figure()
    fig.line([0, 1, 2, 3, 4], [0, 1, float("nan"), 3, 4])
    root = ET.fromstring(fig.to_svg().encode())
    assert len(root.findall(f".//{NS}polyline")) == 2


def test_empty_figure():
    root = ET.fromstring(Figure().to_svg().encode())
    assert root.tag == NS + "svg"


@pytest.mark.parametrize("lo,hi", [(0, 1), (-3.2, 7.9), (1e-5, 3e-5), (100, 100)])
def test_nice_ticks_cover_range(lo, hi):
    t = nice_ticks(lo, hi)
    assert 2 <= len(t) <= 12
    assert all(lo - 1e-12 <= v for v in t)
    steps = [b - a for a, b in zip(t, t[1:])]
    assert max(steps) - min(steps) <= 1e-9 * max(1.0, abs(hi))
