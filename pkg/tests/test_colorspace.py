import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

import cie_oracle
from imaginecolor import colorspace as cs

unit_images = arrays(np.float64, st.tuples(st.integers(1, 6), st.integers(1, 6), st.just(3)),
                     elements=st.floats(0.0, 1.0))


def test_white_and_black():
    lab = cs.rgb_to_lab(np.ones((2, 3, 3)))
    np.testing.assert_allclose(lab[..., 0], 100.0, atol=1e-9)
    np.testing.assert_allclose(lab[..., 1:], 0.0, atol=1e-9)
    np.testing.assert_allclose(cs.rgb_to_lab(np.zeros((2, 2, 3))), 0.0, atol=1e-12)


def test_mid_gray_matches_oracle():
    lab = cs.rgb_to_lab(np.full((1, 1, 3), 0.5))[0, 0]
    L, a, b = cie_oracle.rgb_to_lab(0.5, 0.5, 0.5)
    assert lab[1] == pytest.approx(0.0, abs=1e-9) and lab[2] == pytest.approx(0.0, abs=1e-9)
    assert lab[0] == pytest.approx(L, abs=1e-5)
    assert lab[0] == pytest.approx(53.3889, abs=1e-3)


def test_lab_white_to_rgb():
    np.testing.assert_allclose(cs.lab_to_rgb(np.array([[[100.0, 0.0, 0.0]]])), 1.0, atol=1e-9)


def test_random_lab_triples_match_oracle(rng):
    rgb = rng.uniform(0, 1, size=(1, 300, 3))
    lab = cs.rgb_to_lab(rgb)
    out, clipped = cs.lab_to_rgb(lab, return_clipped=True)
    assert not clipped.any()
    for k in range(rgb.shape[1]):
        np.testing.assert_allclose(out[0, k], cie_oracle.lab_to_rgb(*lab[0, k]), atol=1e-6)
        np.testing.assert_allclose(lab[0, k], cie_oracle.rgb_to_lab(*rgb[0, k]), atol=1e-6)


@settings(max_examples=60, deadline=None)
@given(unit_images)
def test_round_trip(img):
    np.testing.assert_allclose(cs.lab_to_rgb(cs.rgb_to_lab(img)), img, atol=1e-3)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(0.0, 1.0), min_size=1, max_size=20))
def test_achromatic_has_zero_chroma(values):
    gray = np.repeat(np.array(values)[None, :, None], 3, axis=-1)
    assert np.abs(cs.rgb_to_lab(gray)[..., 1:]).max() <= 1e-9


def test_lightness_is_monotone_in_gray():
    ramp = np.linspace(0, 1, 257)
    L = cs.rgb_to_lab(np.repeat(ramp[None, :, None], 3, axis=-1))[0, :, 0]
    assert np.all(np.diff(L) > 0)


def test_luminance_of():
    assert np.all(cs.luminance_of(np.ones((3, 3, 3))) == pytest.approx(1.0, abs=1e-12))
    assert np.all(cs.luminance_of(np.zeros((3, 3, 3))) == 0.0)
    ramp = np.linspace(0, 1, 33)
    lum = cs.luminance_of(np.repeat(ramp[None, :, None], 3, axis=-1))
    assert lum.shape == (1, 33, 1)
    assert np.all(np.diff(lum[0, :, 0]) > 0)
    expected = [cie_oracle.rgb_to_lab(v, v, v)[0] / 100 for v in ramp]
    np.testing.assert_allclose(lum[0, :, 0], expected, atol=1e-6)


def test_out_of_range_rgb_is_a_domain_error():
    with pytest.raises(cs.DomainError):
        cs.rgb_to_lab(np.full((1, 1, 3), 1.2))
    with pytest.raises(cs.DomainError):
        cs.rgb_to_lab(np.full((1, 1, 3), -0.1))
    with pytest.raises(ValueError):
        cs.rgb_to_lab(np.zeros((4, 4)))


def test_out_of_gamut_lab_is_clipped_and_flagged():
    lab = np.array([[[50.0, 0.0, 0.0], [50.0, 120.0, -120.0]]])
    rgb, clipped = cs.lab_to_rgb(lab, return_clipped=True)
    assert clipped.tolist() == [[False, True]]
    assert rgb.min() >= 0 and rgb.max() <= 1


def test_merge_rejects_mismatched_shapes():
    with pytest.raises(ValueError):
        cs.merge_lab(np.zeros((4, 4, 1)), np.zeros((4, 5, 2)))


def test_png_round_trip(tmp_path, rng):
    img = cs.to_uint8(rng.uniform(0, 1, (5, 7, 3))) / 255.0
    path = tmp_path / "x.png"
    cs.write_png(path, img)
    np.testing.assert_array_equal(cs.read_image(path), img)


def test_label_png_is_16_bit():
    labels = np.array([[0, 1], [300, 65535]])
    np.testing.assert_array_equal(cs.decode_label_png(cs.encode_label_png(labels)), labels)
    with pytest.raises(ValueError):
        cs.encode_label_png(np.array([[70000]]))
