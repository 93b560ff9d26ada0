"""Quaternionic Hopfield networks on unit quaternions: multivalued and continuous-valued dynamics."""

from .dynamics import ModelKind, Tolerances, TrajectoryOutcome, UpdateMode, enumerate_fixed_points, run
from .network import NetworkState, ResolutionFactors, WeightMatrix, energy
from .quaternion import PhaseTriple, Quaternion

__all__ = [
    "ModelKind",
    "NetworkState",
    "PhaseTriple",
    "Quaternion",
    "ResolutionFactors",
    "Tolerances",
    "TrajectoryOutcome",
    "UpdateMode",
    "WeightMatrix",
    "energy",
    "enumerate_fixed_points",
    "run",
]
