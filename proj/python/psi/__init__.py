"""Python bindings for the psi pipeline core.

Poses are ``Pose(rotvec, trans)`` with numpy 3-vectors; point clouds are
``(N, 3)`` float arrays. Task specs and verdicts are JSON strings in the same
format the ``psi`` command line tool reads and writes.
"""

import json

from ._psi import (  # noqa: F401
    NUM_ANCHORS,
    NUM_WAYPOINTS,
    Pose,
    PsiError,
    anchor_grasps,
    assign_candidate,
    center_at,
    compose,
    flow_to_se3,
    gen_flow_labels,
    icp_register,
    interpolate,
    matrix_to_rotvec,
    object_center,
    predict,
    remove_outliers,
    rotation_distance,
    rotvec_to_matrix,
    select_grasp_index,
    uncenter_at,
)
from ._psi import evaluate_task as _evaluate_task


def evaluate_task(task, motion, u):
    """Judge a world-frame object motion; ``task`` is a dict or JSON string."""
    if not isinstance(task, str):
        task = json.dumps(task)
    return json.loads(_evaluate_task(task, list(motion), u))
