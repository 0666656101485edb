import math
import statistics

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from imaginecolor.colorspace import gray_to_rgb, lightness_of, write_png
from imaginecolor.metrics import (
    colorfulness,
    diversity_report,
    evaluate_directory,
    format_table,
    pairwise_chroma_distance,
)


def colorfulness_oracle(pixels):
    """Plain-Python opponent-channel statistic over a list of (r, g, b)."""
    rg = [r - g for r, g, _ in pixels]
    yb = [(r + g) / 2 - b for r, g, b in pixels]
    spread = math.hypot(statistics.pstdev(rg), statistics.pstdev(yb))
    offset = math.hypot(statistics.fmean(rg), statistics.fmean(yb))
    return spread + 0.3 * offset


def test_two_pixel_fixture():
    img = np.array([[[1.0, 0.0, 0.0], [0.0, 0.0, 1.0]]])
    expected = math.sqrt(0.8125) + 0.3 * math.sqrt(0.3125)
    assert colorfulness(img) == pytest.approx(expected, abs=1e-6)
    assert colorfulness_oracle([(1, 0, 0), (0, 0, 1)]) == pytest.approx(expected, abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(*[st.floats(0, 1)] * 3), min_size=1, max_size=30))
def test_matches_oracle(pixels):
    img = np.array(pixels, dtype=np.float64)[None]
    assert colorfulness(img) == pytest.approx(colorfulness_oracle(pixels), abs=1e-9)


def test_achromatic_is_zero(natural_images):
    gray = gray_to_rgb(lightness_of(natural_images[0]) / 100.0)
    assert colorfulness(gray) < 1e-12
    assert colorfulness(np.full((4, 4, 3), 0.3)) == 0.0


def test_permutation_invariant(natural_images, rng):
    img = natural_images[1]
    flat = img.reshape(-1, 3)
    shuffled = flat[rng.permutation(len(flat))].reshape(img.shape)
    assert colorfulness(shuffled) == pytest.approx(colorfulness(img), rel=1e-12)


def test_saturation_ramp_is_monotone(natural_images):
    img = natural_images[2]
    gray = img.mean(axis=-1, keepdims=True)
    scores = [colorfulness(gray + s * (img - gray)) for s in np.linspace(0, 1, 6)]
    assert scores[0] < 1e-12
    assert all(b > a for a, b in zip(scores, scores[1:]))


def test_rejects_non_rgb():
    with pytest.raises(ValueError):
        colorfulness(np.zeros((4, 4)))


def test_diversity_identical_outputs(natural_images):
    rep = diversity_report([natural_images[0]] * 3)
    assert rep["mean_pairwise_chroma_distance"] == 0.0
    assert rep["diverse"] is False
    assert rep["count"] == 3


def _uniform(rgb):
    return np.broadcast_to(np.asarray(rgb, dtype=np.float64), (4, 4, 3)).copy()


def test_diversity_uniform_closed_form():
    from cie_oracle import rgb_to_lab as scalar_lab

    colors = [(0.8, 0.2, 0.2), (0.2, 0.7, 0.3), (0.3, 0.3, 0.9)]
    labs = [scalar_lab(*c) for c in colors]
    pairs = [(0, 1), (0, 2), (1, 2)]
    expected = statistics.fmean(
        (abs(labs[i][1] - labs[j][1]) + abs(labs[i][2] - labs[j][2])) / 2 for i, j in pairs)
    rep = diversity_report([_uniform(c) for c in colors])
    assert rep["mean_pairwise_chroma_distance"] == pytest.approx(expected, abs=1e-6)
    assert rep["diverse"] is True
    assert pairwise_chroma_distance(_uniform(colors[0]), _uniform(colors[1])) == pytest.approx(
        (abs(labs[0][1] - labs[1][1]) + abs(labs[0][2] - labs[1][2])) / 2, abs=1e-6)


def test_diversity_order_invariant(natural_images):
    a = diversity_report(natural_images[:4])
    b = diversity_report(natural_images[:4][::-1])
    assert a["mean_pairwise_chroma_distance"] == pytest.approx(b["mean_pairwise_chroma_distance"], rel=1e-12)
    assert a["mean_colorfulness"] == pytest.approx(b["mean_colorfulness"], rel=1e-12)


def test_diversity_needs_two():
    with pytest.raises(ValueError):
        diversity_report([_uniform((0.5, 0.5, 0.5))])


def test_diversity_threshold_is_configurable():
    outs = [_uniform((0.5, 0.5, 0.5)), _uniform((0.52, 0.5, 0.5))]
    d = diversity_report(outs)["mean_pairwise_chroma_distance"]
    assert diversity_report(outs, threshold=d / 2)["diverse"]
    assert not diversity_report(outs, threshold=d * 2)["diverse"]


def test_gray_directory_scores_zero(tmp_path, natural_images):
    d = tmp_path / "gray"
    d.mkdir()
    for k, img in enumerate(natural_images[:3]):
        write_png(d / f"{k}.png", gray_to_rgb(lightness_of(img) / 100.0))
    rep = evaluate_directory(str(d))
    assert rep["gray"]["count"] == 3
    assert rep["gray"]["mean"] == 0.0


def test_directory_mean_and_skips(tmp_path, natural_images):
    from imaginecolor.colorspace import read_image

    d = tmp_path / "ours"
    d.mkdir()
    for k, img in enumerate(natural_images[:4]):
        write_png(d / f"img{k}.png", img)
    (d / "broken.png").write_bytes(b"garbage")
    (d / "notes.txt").write_text("ignored")
    rep = evaluate_directory([str(d)])["ours"]
    hand = [colorfulness(read_image(d / f"img{k}.png")) for k in range(4)]
    assert rep["count"] == 4
    assert rep["skipped"] == ["broken.png"]
    assert rep["mean"] == pytest.approx(sum(hand) / 4, rel=1e-12)


def test_reports_are_byte_identical(tmp_path, natural_images):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        d.mkdir()
    for k, img in enumerate(natural_images[:3]):
        write_png(a / f"{k}.png", img)
        write_png(b / f"{k}.png", natural_images[5 - k])
    r1, r2 = tmp_path / "r1.json", tmp_path / "r2.json"
    evaluate_directory([str(a), str(b)], r1)
    rep = evaluate_directory([str(a), str(b)], r2)
    assert r1.read_bytes() == r2.read_bytes()
    table = format_table(rep)
    assert "Colorfulness" in table and f"{rep['a']['mean']:.3f}" in table


def test_duplicate_method_names_rejected(tmp_path):
    (tmp_path / "x" / "m").mkdir(parents=True)
    (tmp_path / "y" / "m").mkdir(parents=True)
    with pytest.raises(ValueError):
        evaluate_directory([str(tmp_path / "x" / "m"), str(tmp_path / "y" / "m")])
