from __future__ import annotations

import math
from pathlib import Path

import numpy as np
import pytest

from forcedist.errors import ConfigurationError, CsvFormatError, InputError, SceneError
from forcedist.flowfeat import (
    FeatureVector,
    FlowConfig,
    FlowField,
    GrayImage,
    IndentationDisplacement,
    ParticleScene,
    RadialSqueeze,
    UniformDisplacement,
    average_features,
    dense_flow,
    pool_features,
    quantize,
    random_scene,
    read_features_csv,
    read_flow,
    read_image,
    render_scene,
    usable_levels,
    write_features_csv,
    write_flow,
    write_image,
)


def _scene(field=None, seed: int = 5, size: int = 128) -> ParticleScene:
    return random_scene(size, size, 900, 2.0, np.random.default_rng(seed), field=field, margin=6.0)


def test_static_scene_renders_identical_frames() -> None:
    ref, cur = render_scene(_scene())

    np.testing.assert_array_equal(ref.pixels, cur.pixels)
    assert ref.shape == (128, 128)
    assert 0.0 <= ref.pixels.min() and ref.pixels.max() <= 1.0


def test_rendering_is_deterministic_for_a_seed() -> None:
    first = render_scene(_scene(UniformDisplacement(1.0, 0.5)))[1]
    second = render_scene(_scene(UniformDisplacement(1.0, 0.5)))[1]

    np.testing.assert_array_equal(first.pixels, second.pixels)


def test_scene_rejects_particles_pushed_out_of_frame() -> None:
    with pytest.raises(SceneError, match="leave the frame"):
        ParticleScene(64, 64, [[60.0, 30.0]], 2.0, field=UniformDisplacement(10.0, 0.0))
    with pytest.raises(SceneError):
        ParticleScene(64, 64, [[70.0, 30.0]], 2.0)


def test_radial_fields_peak_on_their_radius() -> None:
    squeeze = RadialSqueeze(50.0, 50.0, amplitude=2.0, sigma=10.0)
    spread = IndentationDisplacement(50.0, 50.0, depth_mm=1.5, contact_radius_px=10.0, gain_px_per_mm=2.0)

    dx, dy = squeeze.displacement(np.array([60.0]), np.array([50.0]))
    assert dx[0] == pytest.approx(-2.0)
    assert dy[0] == pytest.approx(0.0)
    dx, _ = spread.displacement(np.array([60.0]), np.array([50.0]))
    assert dx[0] == pytest.approx(3.0)
    dx, dy = spread.displacement(np.array([50.0]), np.array([50.0]))
    assert (dx[0], dy[0]) == (0.0, 0.0)


def test_image_rejects_bad_pixels() -> None:
    with pytest.raises(InputError, match="at least"):
        GrayImage(np.zeros((16, 64)))
    with pytest.raises(InputError, match="\\[0, 1\\]"):
        GrayImage(np.full((32, 32), 1.5))


@pytest.mark.parametrize("suffix", [".png", ".pgm"])
def test_image_files_store_eight_bit_levels(tmp_path: Path, suffix: str) -> None:
    ref, _ = render_scene(_scene())

    path = write_image(ref, tmp_path / f"ref{suffix}")

    np.testing.assert_allclose(read_image(path).pixels, quantize(ref).pixels, atol=1e-12)


def test_unsupported_image_suffix(tmp_path: Path) -> None:
    ref, _ = render_scene(_scene())

    with pytest.raises(InputError, match="suffix"):
        write_image(ref, tmp_path / "ref.jpg")


def test_usable_levels_keep_two_patches_at_the_coarsest_level() -> None:
    config = FlowConfig(levels=4, patch=8)

    assert usable_levels((128, 128), config) == 4
    assert usable_levels((40, 40), config) == 2
    assert usable_levels((32, 400), config) == 2


def test_flow_config_validation() -> None:
    with pytest.raises(InputError):
        FlowConfig(patch=4, stride=8)
    with pytest.raises(InputError):
        FlowConfig(levels=0)


def test_identical_frames_give_zero_flow() -> None:
    ref, _ = render_scene(_scene())

    flow = dense_flow(ref, ref)
    features = pool_features(flow, 4, 4)

    assert float(np.max(flow.magnitude)) < 1e-6
    assert float(np.max(features.magnitudes)) < 1e-6
    assert np.all(features.directions == 0.0)


def test_flow_recovers_rendered_translation() -> None:
    shift = UniformDisplacement(1.5, -0.75)
    ref, cur = render_scene(_scene(shift))

    flow = dense_flow(ref, cur)

    inner = (slice(16, -16), slice(16, -16))
    error = flow.endpoint_error(np.full(flow.u.shape, 1.5), np.full(flow.v.shape, -0.75))[inner]
    assert float(np.median(error)) < 0.25
    features = pool_features(flow, 4, 4)
    assert float(np.median(features.magnitudes)) == pytest.approx(math.hypot(1.5, -0.75), abs=0.25)
    assert float(np.median(features.directions)) == pytest.approx(math.atan2(-0.75, 1.5), abs=0.15)


@pytest.mark.parametrize("dx, dy", [(3.0, -2.0), (5.0, 0.0), (0.0, 4.0)])
def test_every_region_recovers_a_rendered_translation(dx: float, dy: float) -> None:
    ref, cur = render_scene(_scene(UniformDisplacement(dx, dy)))

    features = pool_features(dense_flow(ref, cur), 4, 4)

    np.testing.assert_allclose(features.magnitudes, math.hypot(dx, dy), atol=0.2)
    np.testing.assert_allclose(features.directions, math.atan2(dy, dx), atol=0.05)


def test_flow_follows_a_radial_squeeze() -> None:
    squeeze = RadialSqueeze(64.0, 64.0, amplitude=4.0, sigma=32.0)
    ref, cur = render_scene(_scene(squeeze))

    flow = dense_flow(ref, cur)

    x, y = np.meshgrid(np.arange(128, dtype=float), np.arange(128, dtype=float))
    u, v = squeeze.displacement(x, y)
    assert float(np.max(np.hypot(u, v))) == pytest.approx(4.0, abs=0.01)
    inner = (slice(16, -16), slice(16, -16))
    assert float(np.mean(flow.endpoint_error(u, v)[inner])) <= 0.3


def test_flow_rejects_mismatched_frames() -> None:
    with pytest.raises(InputError, match="sizes differ"):
        dense_flow(GrayImage(np.zeros((32, 32))), GrayImage(np.zeros((32, 40))))


def test_pooling_is_region_major_magnitude_direction() -> None:
    u = np.zeros((4, 8))
    u[:, :4] = 1.0
    flow = FlowField(u, np.zeros((4, 8)))

    features = pool_features(flow, 1, 2)

    assert features.values.tolist() == [1.0, 0.0, 0.0, 0.0]
    assert features.m == 2


def test_pooling_maps_negative_pi_to_pi() -> None:
    flow = FlowField(np.full((4, 4), -1.0), np.full((4, 4), -0.0))

    features = pool_features(flow, 2, 2)

    assert np.all(features.directions == math.pi)
    assert np.all(features.magnitudes == 1.0)


def test_pooling_rejects_non_tiling_regions() -> None:
    with pytest.raises(ConfigurationError, match="do not tile"):
        pool_features(FlowField.zeros(128, 128), 3, 3)


def test_average_features_uses_mean_vectors() -> None:
    east = FeatureVector.from_vectors(np.array([1.0]), np.array([0.0]))
    west = FeatureVector.from_vectors(np.array([-1.0]), np.array([0.0]))
    north = FeatureVector.from_vectors(np.array([0.0]), np.array([2.0]))

    assert average_features([east, west]).values.tolist() == pytest.approx([0.0, 0.0], abs=1e-12)
    mean = average_features([east, north])
    assert mean.magnitudes[0] == pytest.approx(math.hypot(0.5, 1.0))
    with pytest.raises(InputError):
        average_features([])


def test_feature_vector_validation() -> None:
    with pytest.raises(InputError):
        FeatureVector(np.array([1.0, 0.0, 2.0]))
    with pytest.raises(InputError):
        FeatureVector(np.array([-1.0, 0.0]))


def test_flow_dump_keeps_float32_values(tmp_path: Path) -> None:
    rng = np.random.default_rng(0)
    flow = FlowField(rng.normal(size=(6, 5)), rng.normal(size=(6, 5)))

    path = write_flow(flow, tmp_path / "flow.bin")
    loaded = read_flow(path)

    assert path.read_bytes()[:4] == b"FLOW"
    assert (loaded.width, loaded.height) == (5, 6)
    np.testing.assert_array_equal(loaded.u, flow.u.astype(np.float32))
    np.testing.assert_array_equal(loaded.v, flow.v.astype(np.float32))


def test_flow_dump_rejects_truncation(tmp_path: Path) -> None:
    path = write_flow(FlowField.zeros(4, 4), tmp_path / "flow.bin")
    path.write_bytes(path.read_bytes()[:-4])

    with pytest.raises(InputError):
        read_flow(path)


def test_feature_csv_round_trip_and_order_check(tmp_path: Path) -> None:
    features = FeatureVector.from_vectors(np.array([1.0, 0.0, -2.0]), np.array([1.0, 0.0, 0.5]))

    path = write_features_csv(features, tmp_path / "features.csv")
    assert read_features_csv(path).values.tolist() == features.values.tolist()

    bad = tmp_path / "bad.csv"
    bad.write_text("region_index,magnitude_px,direction_rad\n1,0.5,0\n", encoding="utf-8")
    with pytest.raises(CsvFormatError, match="out of order"):
        read_features_csv(bad)
