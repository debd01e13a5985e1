"""Trajectory-tracking controllers, references and metrics."""
from .metrics import control_effort, tracking_metrics
from .nmpc import (NmpcConfig, NmpcController, NmpcSolution, ShootingProblem, box_qp,
                   nmpc_step, shooting_cost, shooting_gradient, target_reached)
from .pid import (TABLE_III, AxisGains, PidController, PidGains, PidState, allocate_forces,
                  pid_step, retune, ziegler_nichols)
from .reference import (ReferenceTrajectory, build_reference, circle_reference, hold_reference,
                        hourglass_vertices, move_reference, polyline_reference, square_vertices)


def make_controller(name, reference=None, f_max=6.0, **kw):
    if name == "nmpc":
        return NmpcController(NmpcConfig.with_f_max(f_max, **kw), reference)
    if name == "pid":
        return PidController(reference=reference, f_max=f_max, **kw)
    raise ValueError(f"unknown controller {name!r}")
