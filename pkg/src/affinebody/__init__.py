"""Numerics for affinely-rigid body dynamics.

Subpackages cover the deformation-tensor algebra (``tensors``), velocity
and momentum kinematics (``kinematics``), kinetic energy and force models
(``dynamics``), constrained equations of motion (``constraints``), time
stepping (``integrate``), and a scenario-driven command line front end
(``cli``).
"""

from . import dynamics, kinematics, tensors
from .errors import AffineBodyError

__all__ = [
    "AffineBodyError",
    "dynamics",
    "kinematics",
    "tensors",
]

__version__ = "0.1.0"
