"""levisim: optical trapping, gas damping, rotation and near-field sensing
of a levitated silica nanodumbbell close to a surface."""

__version__ = "0.1.0"

from .damping import DampingRates, Environment, damping_rates  # noqa: E402
from .optics import BeamParams, SurfaceSpec  # noqa: E402
from .trap import DumbbellGeom, dumbbell_polarizability, find_wells  # noqa: E402

__all__ = [
    "BeamParams",
    "DampingRates",
    "DumbbellGeom",
    "Environment",
    "SurfaceSpec",
    "damping_rates",
    "dumbbell_polarizability",
    "find_wells",
]
