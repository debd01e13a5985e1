"""Vehicle mathematics: kinematics, parameters, allocation and dynamics."""
from .dynamics import (coriolis_matrix, damping_matrix, dynamics_derivative,
                       integrate_rk4, kinetic_energy, mass_matrix, param_vector)
from .mechanism import (ExpansionTable, MechanismGeometry, mechanism_forward,
                        mechanism_inverse)
from .params import (ARM_OFFSET, TABLE_II, HydroParams, ParamPolynomials,
                     eval_params, thruster_arm)
from .propulsion import (F_MAX, PropulsionTable, ThrusterLayout, allocation,
                         allocation_matrix)
from .state import L_MAX, BodyVelocity, Pose, VesselState, rotation_matrix, wrap_angle

__all__ = [
    "ARM_OFFSET", "F_MAX", "L_MAX", "TABLE_II",
    "BodyVelocity", "ExpansionTable", "HydroParams", "MechanismGeometry",
    "ParamPolynomials", "Pose", "PropulsionTable", "ThrusterLayout", "VesselState",
    "allocation", "allocation_matrix", "coriolis_matrix", "damping_matrix",
    "dynamics_derivative", "eval_params", "integrate_rk4", "kinetic_energy",
    "mass_matrix", "mechanism_forward", "mechanism_inverse", "param_vector",
    "rotation_matrix", "thruster_arm", "wrap_angle",
]
