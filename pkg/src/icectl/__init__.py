"""Desk-scale robotic ICE catheter controller and simulator."""

from icectl.kinematics import (
    BendParams,
    CatheterParams,
    Config,
    TipPose,
    UnreachablePoseError,
    WorkspaceError,
    config_to_bend,
    forward,
    inverse,
    rodrigues,
)

__all__ = [
    "BendParams",
    "CatheterParams",
    "Config",
    "TipPose",
    "UnreachablePoseError",
    "WorkspaceError",
    "config_to_bend",
    "forward",
    "inverse",
    "rodrigues",
]

__version__ = "0.1.0"
