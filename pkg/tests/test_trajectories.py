import math

import numpy as np
import pytest

from icectl.compensation import build_map, collect_grid
from icectl.kinematics import CatheterParams, Config, TipPose, forward, rodrigues
from icectl.plant import DistortionField, PlantModel, measure
from icectl.trajectories import (
    RunMetrics,
    SpinSpec,
    Trajectory,
    TrajectoryError,
    repeat_spread,
    run_and_score,
    spin_trajectory,
)

P = CatheterParams()


class TestSpinTrajectory:
    def test_quarter_spin_swaps_knobs(self):
        traj = spin_trajectory(SpinSpec(initial=(60.0, 0.0), step_count=360), P)
        k = 90
        q = traj.steps[k]
        assert q.phi1 == pytest.approx(0.0, abs=1e-12)
        assert q.phi2 == pytest.approx(60.0, abs=1e-12)
        assert q.phi3 == pytest.approx(-90.0, abs=1e-12)

    def test_cosine_sine_structure(self):
        a = 47.5
        traj = spin_trajectory(SpinSpec(initial=(a, 0.0), step_count=360), P)
        psis = np.radians(np.arange(361.0))
        phi1 = np.array([q.phi1 for q in traj.steps])
        phi2 = np.array([q.phi2 for q in traj.steps])
        assert np.max(np.abs(phi1 - a * np.cos(psis))) < 1e-9
        assert np.max(np.abs(phi2 - a * np.sin(psis))) < 1e-9

    def test_zero_bend_is_pure_roll(self):
        traj = spin_trajectory(SpinSpec(initial=(0.0, 0.0), step_count=36), P)
        for k, q in enumerate(traj.steps):
            assert q.phi1 == 0.0 and q.phi2 == 0.0
            assert q.phi3 == pytest.approx(-k * 10.0, abs=1e-12)

    def test_nonzero_initial_azimuth(self):
        traj = spin_trajectory(SpinSpec(initial=(30.0, 40.0), step_count=360), P)
        q0 = traj.steps[0]
        assert q0.phi1 == pytest.approx(30.0, abs=1e-9)
        assert q0.phi2 == pytest.approx(40.0, abs=1e-9)
        assert math.hypot(traj.steps[123].phi1, traj.steps[123].phi2) == pytest.approx(50.0)

    def test_model_space_stillness(self):
        traj = spin_trajectory(SpinSpec(initial=(60.0, 0.0), step_count=360), P)
        pos = np.array([forward(q, P).position for q in traj.steps])
        spread = np.max(np.linalg.norm(pos - pos[0], axis=1))
        assert spread < 1e-9

    def test_constant_alpha(self):
        traj = spin_trajectory(SpinSpec(initial=(60.0, 0.0), step_count=360), P)
        for q in traj.steps:
            assert math.hypot(q.phi1, q.phi2) == pytest.approx(60.0, abs=1e-12)

    def test_step_count_minimum(self):
        with pytest.raises(ValueError):
            SpinSpec(initial=(60.0, 0.0), step_count=4)

    def test_rate_limit_violation_raises(self):
        with pytest.raises(TrajectoryError):
            spin_trajectory(SpinSpec(initial=(80.0, 0.0), step_count=16), P)

    def test_compensated_spin_reduces_plant_drift(self):
        m = PlantModel()  # default softening + twist
        dense = build_map(collect_grid(m, 10.0), P, resolution_deg=1.0)
        ref = forward(Config(60.0, 0.0, 0.0, 0.0), P).position
        raw = spin_trajectory(SpinSpec(initial=(60.0, 0.0), step_count=120), P)
        comp = spin_trajectory(SpinSpec(initial=(60.0, 0.0), step_count=120, compensation=dense), P)
        from icectl.plant import plant_forward

        drift_raw = max(np.linalg.norm(plant_forward(q, m).position - ref) for q in raw.steps)
        drift_comp = max(np.linalg.norm(plant_forward(q, m).position - ref) for q in comp.steps)
        assert drift_comp <= 0.5 * drift_raw


class TestRunAndScore:
    def test_identity_plant_zero_error(self):
        m = PlantModel(distortion=DistortionField.identity())
        traj = spin_trajectory(SpinSpec(initial=(60.0, 0.0), step_count=90), P)
        ref = forward(Config(60.0, 0.0, 0.0, 0.0), P)
        r = run_and_score(traj, m, ref)
        assert r.position_rmse_mm < 1e-9
        assert r.orientation_rmse_deg < 1e-6

    def test_constant_position_bias_gives_bias_rmse(self):
        m = PlantModel(
            distortion=DistortionField.identity(),
            bias_mm=2.0,
            bias_dir=(1.0, 0.0, 0.0),
            ori_bias_deg=0.0,
        )
        # enable the bias through a curvature condition with severity 1
        from icectl.plant import CurvatureCondition

        m.curvature = CurvatureCondition.named("steep")
        traj = spin_trajectory(SpinSpec(initial=(40.0, 0.0), step_count=60), P)
        ref = forward(Config(40.0, 0.0, 0.0, 0.0), P)
        r = run_and_score(traj, m, ref)
        assert r.position_rmse_mm == pytest.approx(2.0, abs=1e-9)

    def test_rmse_consistency(self):
        m = PlantModel(noise_sd=(0.3, 0.2), seed=4)
        traj = spin_trajectory(SpinSpec(initial=(30.0, 0.0), step_count=45), P)
        r = run_and_score(traj, m, forward(Config(30.0, 0.0, 0.0, 0.0), P))
        r.self_check()
        assert r.position_rmse_mm > 0

    def test_error_growth_with_bend_on_default_plant(self):
        m = PlantModel()
        rmse = {}
        for bend in (20.0, 40.0, 60.0):
            traj = spin_trajectory(SpinSpec(initial=(bend, 0.0), step_count=90), P)
            r = run_and_score(traj, m, forward(Config(bend, 0.0, 0.0, 0.0), P))
            rmse[bend] = r
        assert rmse[20.0].position_rmse_mm < rmse[40.0].position_rmse_mm < rmse[60.0].position_rmse_mm
        assert (
            rmse[20.0].orientation_rmse_deg
            < rmse[40.0].orientation_rmse_deg
            < rmse[60.0].orientation_rmse_deg
        )


class TestRepeatSpread:
    def pose(self, x, y, z):
        return TipPose(np.array([x, y, z]), np.eye(3))

    def test_identical_poses_zero_spread(self):
        poses = [self.pose(1.0, 2.0, 3.0)] * 5
        rep = repeat_spread(poses)
        assert rep.mean_mm == 0.0 and rep.sd_mm == 0.0

    def test_collinear_median_is_middle(self):
        poses = [self.pose(0.0, 0.0, 0.0), self.pose(1.0, 0.0, 0.0), self.pose(2.0, 0.0, 0.0)]
        rep = repeat_spread(poses)
        assert rep.medoid_index == 1
        assert rep.mean_mm == pytest.approx(1.0)

    def test_needs_two(self):
        with pytest.raises(ValueError):
            repeat_spread([self.pose(0, 0, 0)])

    def test_seeded_noise_window(self):
        # 1 mm RMS positional accuracy = 1/sqrt(3) mm per axis
        m = PlantModel(noise_sd=(1.0 / math.sqrt(3.0), 0.5), seed=5)
        q = Config(20.0, -10.0, 5.0, 1.0)
        poses = [measure(q, m).measured_pose for _ in range(7)]
        rep = repeat_spread(poses)
        assert 0.8 <= rep.mean_mm <= 1.6


def test_trajectory_validate_rejects_workspace_violation():
    t = Trajectory(steps=(Config(0, 0, 0, 0), Config(91.0, 0, 0, 0)), rate_limit_deg=200.0)
    from icectl.kinematics import WorkspaceError

    with pytest.raises(WorkspaceError):
        t.validate(P)


def test_spin_reference_rotation_follows_roll():
    # measured frame of the ideal plant must equal the per-step reference
    m = PlantModel(distortion=DistortionField.identity())
    traj = spin_trajectory(SpinSpec(initial=(45.0, 0.0), step_count=120), P)
    ref = forward(Config(45.0, 0.0, 0.0, 0.0), P)
    z = np.array([0.0, 0.0, 1.0])
    for k, q in enumerate(traj.steps):
        expect = ref.rotation @ rodrigues(z, -k * traj.spin_step_deg)
        got = forward(q, P).rotation
        assert np.allclose(expect, got, atol=1e-9)
