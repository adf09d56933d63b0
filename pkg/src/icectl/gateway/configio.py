"""Declarative plant/catheter configuration files (TOML).

Schema (all keys optional, defaults shown):

    [catheter]
    bend_length_mm = 60.0
    knob_radius_mm = 10.0
    catheter_radius_mm = 10.0
    workspace_deg = 90.0
    us_offset_z_mm = 0.0        # image centre offset along the tip axis

    [distortion]
    alpha_gain = [1.0, -0.15]   # polynomial in alpha/90deg
    twist_amplitude_deg = 8.0
    twist_harmonic = 2
    axis_scale = [1.0, 1.0]

    [curvature]
    label = "straight"          # straight | moderate | steep

    [noise]
    position_mm = 0.0           # per-axis Gaussian sd
    orientation_deg = 0.0

    [plant]
    seed = 0
    bias_mm = 1.5
    bias_dir = [1.0, 0.0, 0.0]
    ori_bias_deg = 4.0
    ori_bias_axis = [1.0, 0.0, 0.0]
"""

from __future__ import annotations

import sys

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from icectl.kinematics import CatheterParams
from icectl.plant import CurvatureCondition, DistortionField, PlantModel


def _catheter_from(table: dict) -> CatheterParams:
    us = np.eye(4)
    us[2, 3] = float(table.get("us_offset_z_mm", 0.0))
    return CatheterParams(
        bend_length_mm=float(table.get("bend_length_mm", 60.0)),
        knob_radius_mm=float(table.get("knob_radius_mm", 10.0)),
        catheter_radius_mm=float(table.get("catheter_radius_mm", 10.0)),
        workspace_deg=float(table.get("workspace_deg", 90.0)),
        us_offset=us,
    )


def plant_from_dict(doc: dict) -> PlantModel:
    cat = _catheter_from(doc.get("catheter", {}))
    dt = doc.get("distortion", {})
    distortion = DistortionField(
        alpha_gain=tuple(float(c) for c in dt.get("alpha_gain", (1.0, -0.15))),
        twist_amplitude_deg=float(dt.get("twist_amplitude_deg", 8.0)),
        twist_harmonic=int(dt.get("twist_harmonic", 2)),
        axis_scale=tuple(float(s) for s in dt.get("axis_scale", (1.0, 1.0))),
    )
    curvature = CurvatureCondition.named(doc.get("curvature", {}).get("label", "straight"))
    nz = doc.get("noise", {})
    pl = doc.get("plant", {})
    return PlantModel(
        params=cat,
        distortion=distortion,
        curvature=curvature,
        noise_sd=(float(nz.get("position_mm", 0.0)), float(nz.get("orientation_deg", 0.0))),
        seed=int(pl.get("seed", 0)),
        bias_mm=float(pl.get("bias_mm", 1.5)),
        bias_dir=tuple(float(x) for x in pl.get("bias_dir", (1.0, 0.0, 0.0))),
        ori_bias_deg=float(pl.get("ori_bias_deg", 4.0)),
        ori_bias_axis=tuple(float(x) for x in pl.get("ori_bias_axis", (1.0, 0.0, 0.0))),
    )


def load_plant(path) -> PlantModel:
    with open(path, "rb") as f:
        doc = tomllib.load(f)
    return plant_from_dict(doc)


def plant_to_dict(m: PlantModel) -> dict:
    """Inline representation of a plant, embedded in session headers so a
    recording can be replayed without the original config file."""
    return {
        "catheter": {
            "bend_length_mm": m.params.bend_length_mm,
            "knob_radius_mm": m.params.knob_radius_mm,
            "catheter_radius_mm": m.params.catheter_radius_mm,
            "workspace_deg": m.params.workspace_deg,
            "us_offset_z_mm": float(m.params.us_offset[2, 3]),
        },
        "distortion": {
            "alpha_gain": list(m.distortion.alpha_gain),
            "twist_amplitude_deg": m.distortion.twist_amplitude_deg,
            "twist_harmonic": m.distortion.twist_harmonic,
            "axis_scale": list(m.distortion.axis_scale),
        },
        "curvature": {"label": m.curvature.label},
        "noise": {"position_mm": m.noise_sd[0], "orientation_deg": m.noise_sd[1]},
        "plant": {
            "seed": m.seed,
            "bias_mm": m.bias_mm,
            "bias_dir": list(m.bias_dir),
            "ori_bias_deg": m.ori_bias_deg,
            "ori_bias_axis": list(m.ori_bias_axis),
        },
    }
