import numpy as np
import pytest

from hexllg.harness.initial import (
    gaussian_tilt,
    initial_field,
    meron_like,
    random_smooth,
    sample_texture,
)
from hexllg.lattice import build_lattice

LAT = build_lattice(8, 16, 0.25)
P = LAT.periods()


def test_uniform_is_normalised():
    m = initial_field({"kind": "uniform", "direction": [3.0, 0.0, 4.0]}, LAT)
    np.testing.assert_allclose(m, np.tile([0.6, 0.0, 0.8], (LAT.num_nodes, 1)))


def test_gaussian_tilt_angle_profile():
    c = np.array([1.5, 2.0])
    pts = np.array([c, c + [0.3, 0.0], c + [0.0, 0.6]])
    m = gaussian_tilt(pts, P, c, 0.5, amplitude=1.2, axis=(0.0, 1.0, 0.0))
    theta = np.arccos(m[:, 2])
    # width 0.5 is small against the periods, so images barely contribute
    r2 = np.array([0.0, 0.09, 0.36])
    np.testing.assert_allclose(theta, 1.2 * np.exp(-r2 / 0.5), atol=1e-12)
    np.testing.assert_allclose(m[:, 0], 0.0, atol=1e-15)
    assert np.all(m[1:, 1] > 0)


def test_gaussian_tilt_is_periodic():
    c = (1.0, 1.0)
    pts = np.random.default_rng(0).uniform(0, 3, size=(20, 2))
    a = gaussian_tilt(pts, P, c, 1.0)
    b = gaussian_tilt(pts + P[0] - 2 * P[1], P, c, 1.0)
    np.testing.assert_allclose(a, b, atol=1e-13)


def test_meron_core_far_field_and_winding():
    c = np.array([1.732, 3.0])
    core = meron_like(c[None], P, c, 1.0, polarity=-1)
    np.testing.assert_allclose(core, [[0.0, 0.0, -1.0]], atol=1e-15)
    ring = 1.3
    angles = np.linspace(0, 2 * np.pi, 200, endpoint=False)
    pts = c + ring * np.stack([np.cos(angles), np.sin(angles)], axis=1)
    for q in (1, 2, -1):
        m = meron_like(pts, P, c, 1.0, vorticity=q)
        np.testing.assert_allclose(m[:, 2], 0.0, atol=1e-15)
        phi = np.unwrap(np.arctan2(m[:, 1], m[:, 0]))
        winding = (phi[-1] - phi[0] + (phi[1] - phi[0])) / (2 * np.pi)
        assert winding == pytest.approx(q, abs=1e-9)
    half = meron_like((c + [0.5, 0.0])[None], P, c, 1.0)
    assert np.degrees(np.arccos(half[0, 2])) == pytest.approx(45.0)


def test_random_smooth_is_reproducible_and_smoother():
    a = random_smooth(LAT, 11)
    b = random_smooth(LAT, 11)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, random_smooth(LAT, 12))
    np.testing.assert_allclose(np.linalg.norm(a, axis=1), 1.0, atol=1e-15)
    rough = random_smooth(LAT, 11, smoothing_passes=0)
    jump = lambda m: np.mean(np.sum((m[LAT.neighbors[1]] - m[:, None]) ** 2, axis=-1))  # noqa: E731
    assert jump(a) < 0.5 * jump(rough)


def test_random_smooth_has_no_closed_form():
    with pytest.raises(ValueError, match="closed form"):
        sample_texture({"kind": "random_smooth", "seed": 0}, np.zeros((1, 2)), P)
