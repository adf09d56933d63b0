import numpy as np
import pytest

from icectl.kinematics import CatheterParams, Config, forward, geodesic_angle_deg
from icectl.plant import (
    CurvatureCondition,
    DistortionField,
    EMSample,
    PlantModel,
    measure,
    plant_forward,
)

P = CatheterParams()
STRAIGHT = Config(0.0, 0.0, 0.0, 0.0)


class TestDistortionField:
    def test_default_gain_softens(self):
        d = DistortionField()
        assert d.gain(0.0) == 1.0
        assert d.gain(90.0) == pytest.approx(0.85)

    def test_twist_bound_enforced(self):
        with pytest.raises(ValueError):
            DistortionField(twist_amplitude_deg=11.0)

    def test_axis_scale_positive(self):
        with pytest.raises(ValueError):
            DistortionField(axis_scale=(1.0, 0.0))


class TestCurvatureCondition:
    def test_presets(self):
        assert CurvatureCondition.named("straight").arc_angles_deg == (0.0, 0.0)
        assert CurvatureCondition.named("moderate").arc_angles_deg == (30.0, 30.0)
        assert CurvatureCondition.named("steep").arc_angles_deg == (40.0, 45.0)

    def test_wrong_angles_rejected(self):
        with pytest.raises(ValueError):
            CurvatureCondition("moderate", (10.0, 10.0))


class TestPlantForward:
    def test_straight_fixed_point_any_distortion(self):
        for d in (
            DistortionField(),
            DistortionField(alpha_gain=(1.3,), twist_amplitude_deg=9.0),
            DistortionField(alpha_gain=(0.7, 0.2, -0.1), twist_amplitude_deg=3.0, axis_scale=(1.2, 0.8)),
        ):
            m = PlantModel(distortion=d)
            pose = plant_forward(STRAIGHT, m)
            ref = forward(STRAIGHT, P)
            assert np.array_equal(pose.position, ref.position)
            assert np.array_equal(pose.rotation, ref.rotation)

    def test_identity_distortion_matches_model(self):
        m = PlantModel(distortion=DistortionField.identity())
        rng = np.random.default_rng(2)
        for _ in range(50):
            q = Config(*rng.uniform(-90, 90, 2), rng.uniform(-180, 180), rng.uniform(-30, 30))
            assert np.allclose(plant_forward(q, m).position, forward(q, P).position, atol=1e-12)

    def test_pure_gain_equals_scaled_knob(self):
        m = PlantModel(distortion=DistortionField(alpha_gain=(0.9,), twist_amplitude_deg=0.0))
        pose = plant_forward(Config(90.0, 0.0, 0.0, 0.0), m)
        ref = forward(Config(81.0, 0.0, 0.0, 0.0), P)
        assert np.allclose(pose.position, ref.position, atol=1e-9)
        assert np.allclose(pose.rotation, ref.rotation, atol=1e-12)

    def test_monotone_degradation_with_curvature(self):
        rmse = {}
        grid = np.linspace(-90, 90, 13)
        for label in ("straight", "moderate", "steep"):
            m = PlantModel(curvature=CurvatureCondition.named(label))
            errs = []
            for p1 in grid:
                for p2 in grid:
                    q = Config(p1, p2)
                    errs.append(
                        np.linalg.norm(plant_forward(q, m).position - forward(q, P).position)
                    )
            rmse[label] = float(np.sqrt(np.mean(np.square(errs))))
        assert rmse["straight"] < rmse["moderate"] < rmse["steep"]

    def test_curvature_bias_magnitudes(self):
        q = Config(25.0, -40.0, 10.0, 3.0)
        base = plant_forward(q, PlantModel())
        steep = plant_forward(q, PlantModel(curvature=CurvatureCondition.named("steep")))
        assert np.linalg.norm(steep.position - base.position) == pytest.approx(1.5, abs=1e-9)
        assert geodesic_angle_deg(steep.rotation, base.rotation) == pytest.approx(4.0, abs=1e-9)


class TestMeasure:
    def test_zero_noise_is_exact(self):
        m = PlantModel(noise_sd=(0.0, 0.0), seed=5)
        q = Config(20.0, 30.0, 15.0, 2.0)
        s = measure(q, m)
        ref = plant_forward(q, m)
        assert np.array_equal(s.measured_pose.position, ref.position)
        assert np.array_equal(s.measured_pose.rotation, ref.rotation)

    def test_fixed_seed_reproduces_stream(self):
        qs = [Config(10.0 * i, -5.0 * i) for i in range(5)]
        a = PlantModel(noise_sd=(1.0, 0.5), seed=42)
        b = PlantModel(noise_sd=(1.0, 0.5), seed=42)
        for q in qs:
            sa, sb = measure(q, a), measure(q, b)
            assert np.array_equal(sa.measured_pose.position, sb.measured_pose.position)
            assert np.array_equal(sa.measured_pose.rotation, sb.measured_pose.rotation)
            assert sa.timestamp == sb.timestamp

    def test_position_noise_sd_chi_square(self):
        m = PlantModel(noise_sd=(1.0, 0.0), seed=7)
        q = Config(10.0, 5.0)
        base = plant_forward(q, m).position
        samples = np.array([measure(q, m).measured_pose.position - base for _ in range(10000)])
        sd = samples.std(axis=0, ddof=1)
        assert np.all(sd > 0.97) and np.all(sd < 1.03)

    def test_timestamps_monotone(self):
        m = PlantModel(seed=1)
        ts = [measure(STRAIGHT, m).timestamp for _ in range(5)]
        assert ts == sorted(ts) and len(set(ts)) == 5

    def test_orientation_noise_angle_scale(self):
        m = PlantModel(noise_sd=(0.0, 2.0), seed=3)
        q = Config(40.0, 0.0)
        base = plant_forward(q, m).rotation
        angles = [
            geodesic_angle_deg(measure(q, m).measured_pose.rotation, base) for _ in range(2000)
        ]
        # |N(0, 2deg)| has mean 2*sqrt(2/pi) ~ 1.596
        assert np.mean(angles) == pytest.approx(2.0 * np.sqrt(2.0 / np.pi), rel=0.1)

    def test_sample_type(self):
        m = PlantModel(seed=0)
        s = measure(STRAIGHT, m)
        assert isinstance(s, EMSample)
        assert s.config == STRAIGHT


def test_reset_noise_rewinds_stream():
    m = PlantModel(noise_sd=(1.0, 0.0), seed=9)
    a = measure(STRAIGHT, m).measured_pose.position
    m.reset_noise()
    b = measure(STRAIGHT, m).measured_pose.position
    assert np.array_equal(a, b)


def test_clone_is_independent():
    m = PlantModel(noise_sd=(1.0, 0.0), seed=9)
    c = m.clone()
    a = measure(STRAIGHT, m).measured_pose.position
    b = measure(STRAIGHT, c).measured_pose.position
    assert np.array_equal(a, b)
