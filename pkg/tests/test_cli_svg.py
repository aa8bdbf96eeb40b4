import math
import re
import xml.etree.ElementTree as ET

import pytest

from polybilliard.cli import main
from polybilliard.geometry import format_polygon, square_with_hole, unit_square

NS = "{http://www.w3.org/2000/svg}"


@pytest.fixture()
def files(tmp_path):
    sq = tmp_path / "square.txt"
    sq.write_text(format_polygon(unit_square()))
    hs = tmp_path / "holed.txt"
    hs.write_text(format_polygon(square_with_hole()))
    slit = tmp_path / "slit.txt"
    slit.write_text("outer: (0,0) (4,0) (4,4) (0,4)\nhole: (1,2) (2,2) (3,2)\n")
    dup = tmp_path / "dup.txt"
    dup.write_text("outer: (0,0) (1,0) (1,1) (0,1)\nlabels: B B T L\n")
    return dict(square=str(sq), holed=str(hs), slit=str(slit), dup=str(dup), dir=tmp_path)


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    return code, capsys.readouterr().out


def test_validate(files, capsys):
    code, out = run(capsys, "validate", "--polygon", files["square"])
    assert code == 0 and out.count("length=1.0") == 4 and "no holes" in out and out.strip().endswith("valid")
    code, out = run(capsys, "validate", "--polygon", files["slit"])
    assert code == 1 and "SlitHole" in out
    code, out = run(capsys, "validate", "--polygon", files["dup"])
    assert code == 1 and "DuplicateLabel" in out


def _edges(out):
    return [line.split()[1] for line in out.splitlines() if line[0].isdigit()]


def test_simulate(files, capsys):
    base = ["simulate", "--polygon", files["square"], "--edge", "B", "--offset", "0.5"]
    code, out = run(capsys, *base, "--theta", repr(math.pi / 2), "--bounces", 4)
    assert code == 0 and _edges(out) == ["T", "B", "T", "B"]
    code, out = run(capsys, *base, "--theta", repr(math.pi / 4), "--bounces", 3)
    assert _edges(out) == ["R", "T", "L"]
    code, out = run(capsys, *base, "--theta", "1.0", "--bounces", 0)
    assert code == 0 and out == "end horizon\n"
    code, out = run(capsys, *base, "--theta", repr(math.atan2(1, 0.5)), "--bounces", 3)
    assert code == 0 and "vertex-hit" in out


def test_simulate_svg(files, capsys):
    svg = files["dir"] / "o.svg"
    run(capsys, "simulate", "--polygon", files["holed"], "--edge", "B", "--offset", "0.7", "--theta", "1.1",
        "--bounces", 5, "--svg", svg)
    root = ET.parse(svg).getroot()
    assert len(root.findall(f".//{NS}polyline")) == 1
    assert len(root.findall(f".//{NS}polygon[@class='hole']")) == 1


def test_usage_errors(files, capsys):
    with pytest.raises(SystemExit) as info:
        main(["simulate", "--polygon", files["square"]])
    assert info.value.code == 2
    assert main(["verify", "--polygon", files["square"], "--suite", "bogus"]) == 2
    assert main(["simulate", "--polygon", files["square"], "--edge", "B", "--offset", "3", "--theta", "1",
                 "--bounces", "2"]) == 2
    assert main(["unfold", "--polygon", files["square"], "--edge", "B", "--offset", "0.5", "--theta", "1",
                 "--bounces", "2"]) == 2


def _unfold(files, capsys, n, theta, poly="square"):
    svg = files["dir"] / f"u{n}.svg"
    code, _ = run(capsys, "unfold", "--polygon", files[poly], "--edge", "B", "--offset", "0.5",
                  "--theta", repr(theta), "--bounces", n, "--svg", svg)
    assert code == 0
    return ET.parse(svg).getroot()


def _coords(text):
    return [tuple(map(float, pair.split(","))) for pair in text.split()]


def test_unfold_vertical(files, capsys):
    root = _unfold(files, capsys, 3, math.pi / 2)
    copies = root.findall(f".//{NS}polygon[@class='copy']")
    assert len(copies) == 4
    line = _coords(root.find(f".//{NS}polyline").get("points"))
    assert all(x == pytest.approx(0.5) for x, _ in line)
    assert len(root.findall(f".//{NS}circle")) == 16


def test_unfold_diagonal_slope(files, capsys):
    root = _unfold(files, capsys, 2, math.pi / 4)
    (x0, y0), *rest = _coords(root.find(f".//{NS}polyline").get("points"))
    for x, y in rest:
        assert (y - y0) / (x - x0) == pytest.approx(1.0, abs=1e-9)


def test_unfold_zero_and_holes(files, capsys):
    assert len(_unfold(files, capsys, 0, 1.0).findall(f".//{NS}polygon[@class='copy']")) == 1
    root = _unfold(files, capsys, 4, 1.2, "holed")
    assert len(root.findall(f".//{NS}polygon[@class='copy']")) == 5
    assert len(root.findall(f".//{NS}polygon[@class='hole']")) == 5


def test_svg_numbers_have_six_decimals(files, capsys):
    root = _unfold(files, capsys, 3, 1.3)
    pts = root.find(f".//{NS}polyline").get("points")
    assert all(re.fullmatch(r"-?\d+\.\d{6}", v) for pair in pts.split() for v in pair.split(","))


def test_code(files, capsys):
    code, out = run(capsys, "code", "--polygon", files["square"], "--edge", "B", "--offset", "0.5",
                    "--theta", repr(math.pi / 4), "--length", 4)
    assert out.split() == ["B", "R", "T", "L"]
    code, out = run(capsys, "code", "--polygon", files["square"], "--edge", "B", "--offset", "0.4",
                    "--theta", repr(math.pi / 2), "--length", 4, "--partner-offset", "0.5")
    assert code == 0 and out.splitlines()[0] == "B>T:0,0 T>B:0,0 B>T:0,0 T>B:0,0"


def test_atlas(files, capsys):
    code, out = run(capsys, "atlas", "--polygon", files["holed"], "--resolution", 20, "--pair", "B>T")
    assert code == 0 and "pair=B>T components=2 stable=true" in out


def test_verify_deterministic(files, capsys):
    argv = ["verify", "--polygon", files["square"], "--suite", "commutation", "--samples", 60, "--seed", 3]
    code1, out1 = run(capsys, *argv)
    code2, out2 = run(capsys, *argv)
    assert code1 == 0 and out1 == out2 and "result=pass" in out1


def test_verify_unfolding_random_seven_gon(files, capsys):
    from polybilliard.experiments import random_polygon
    import numpy as np

    poly = random_polygon(np.random.default_rng(7), n_outer=7, n_holes=1)
    path = files["dir"] / "seven.txt"
    path.write_text(format_polygon(poly))
    code, out = run(capsys, "verify", "--polygon", path, "--suite", "unfolding", "--samples", 3)
    assert code == 0 and "verdict.fold_back_matches_orbit=pass" in out


def test_verify_uniqueness_exit_reflects_verdict(files, capsys):
    code, out = run(capsys, "verify", "--polygon", files["square"], "--suite", "uniqueness", "--edge", "B",
                    "--horizon", 20, "--final-tolerance", "0.5")
    assert code == 0 and "verdict.diameters_nonincreasing=pass" in out
