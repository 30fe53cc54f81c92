#!/usr/bin/env python3
"""Writes configs/arms/*.json.

DH tables follow the vendors' published kinematics (rounded to 0.1 mm).
Home joints come from a numeric IK for a downward-pointing tool above the
table, and the self_test block is filled by the NumPy forward kinematics
below, which shares no code with the C++ library.
"""

import json
import math
import pathlib

import numpy as np
from scipy.optimize import least_squares
from scipy.spatial.transform import Rotation

PI = math.pi
TAU = 2 * PI


def rx(a):
    c, s = math.cos(a), math.sin(a)
    return np.array([[1, 0, 0, 0], [0, c, -s, 0], [0, s, c, 0], [0, 0, 0, 1.0]])


def rz(a):
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, -s, 0, 0], [s, c, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1.0]])


def trans(x, y, z):
    m = np.eye(4)
    m[:3, 3] = (x, y, z)
    return m


def pose_matrix(p):
    m = np.eye(4)
    m[:3, :3] = Rotation.from_rotvec(p["rotvec"]).as_matrix()
    m[:3, 3] = p["trans"]
    return m


def matrix_pose(m):
    return {"rotvec": Rotation.from_matrix(m[:3, :3]).as_rotvec().tolist(), "trans": m[:3, 3].tolist()}


def chain(arm, q):
    """Frames base, 1..dof, tool plus, per joint, the bend point of its link."""
    frames = [pose_matrix(arm["base_pose"])]
    bends = []
    for row, qi in zip(arm["dh_rows"], q):
        th = qi + row["theta_offset"]
        prev = frames[-1]
        if arm["convention"] == "standard":
            bend = prev @ rz(th) @ trans(0, 0, row["d"])
            frames.append(bend @ trans(row["a"], 0, 0) @ rx(row["alpha"]))
        else:
            bend = prev @ rx(row["alpha"]) @ trans(row["a"], 0, 0)
            frames.append(bend @ rz(th) @ trans(0, 0, row["d"]))
        bends.append(bend)
    frames.append(frames[-1] @ pose_matrix(arm["tool"]))
    return frames, bends


def link_capsules(arm, radius, gripper):
    """Capsules rigid with each moving link. Link 1 only spins about the
    vertical base axis, so it is left out together with the fixed base."""
    n = len(arm["dh_rows"])
    q0 = np.zeros(n)
    frames, bends = chain(arm, q0)
    caps = []
    for j in range(1, n + 1):
        if arm["convention"] == "standard":
            # Body between axis j (through frame j-1) and axis j+1 (frame j).
            pts = [frames[j - 1][:3, 3], bends[j - 1][:3, 3], frames[j][:3, 3]]
        else:
            # Body between axis j (frame j) and axis j+1 (frame j+1); past the
            # last axis the gripper capsules take over.
            if j == n:
                continue
            pts = [frames[j][:3, 3], bends[j][:3, 3], frames[j + 1][:3, 3]]
        if j == 1:
            continue
        inv = np.linalg.inv(frames[j])
        local = [(inv @ np.append(p, 1.0))[:3] for p in pts]
        for a, b in zip(local[:-1], local[1:]):
            if np.linalg.norm(a - b) < 1e-6:
                continue
            caps.append({"joint_index": j, "p0": a.tolist(), "p1": b.tolist(), "radius": radius[j - 1]})
    # Gripper in the tool frame: palm column and two fingers along tool x.
    back = gripper["flange_to_tcp"]
    caps.append({"joint_index": n + 1, "p0": [0.0, 0.0, -back], "p1": [0.0, 0.0, -0.06], "radius": 0.04})
    for side in (-1.0, 1.0):
        caps.append({"joint_index": n + 1, "p0": [side * 0.04, 0.0, -0.06], "p1": [side * 0.04, 0.0, 0.0],
                     "radius": 0.012})
    return caps


def ee(arm, q):
    return chain(arm, q)[0][-1]


def home_ik(arm, target, seeds):
    lo = np.array([l[0] for l in arm["joint_limits"]])
    hi = np.array([l[1] for l in arm["joint_limits"]])

    def resid(q):
        m = ee(arm, q)
        rot = Rotation.from_matrix(target[:3, :3] @ m[:3, :3].T).as_rotvec()
        return np.concatenate([target[:3, 3] - m[:3, 3], rot])

    for seed in seeds:
        # Keep clear of the limits so the home pose has room in every joint.
        margin = np.minimum(0.3, (hi - lo) / 4)
        start = np.clip(seed, lo + margin, hi - margin)
        # Stay near the seed first, then polish the exact solution from there.
        near = least_squares(lambda q: np.concatenate([resid(q), 0.05 * (q - start)]), start,
                             bounds=(lo + margin, hi - margin), max_nfev=4000)
        sol = least_squares(resid, near.x, bounds=(lo + margin, hi - margin), xtol=1e-15, ftol=1e-15, gtol=1e-15,
                            max_nfev=4000)
        # Seeds are listed in order of preference (elbow up first).
        if np.linalg.norm(resid(sol.x)) < 1e-9:
            return sol.x
    raise RuntimeError(f"no home solution for {arm['name']}")


def finish(arm, radius, gripper, home_seeds, extra_q):
    arm["link_capsules"] = link_capsules(arm, radius, gripper)
    down = np.eye(4)
    down[:3, :3] = np.diag([1.0, -1.0, -1.0])
    down[:3, 3] = (0.4, 0.0, 0.3)
    home = home_ik(arm, down, home_seeds)
    arm["home_q"] = [float(v) for v in home]
    rng = np.random.default_rng(7)
    lo = np.array([l[0] for l in arm["joint_limits"]])
    hi = np.array([l[1] for l in arm["joint_limits"]])
    qs = [np.zeros(len(lo))] if np.all(lo <= 0) and np.all(hi >= 0) else []
    qs.append(home)
    qs += [np.asarray(q) for q in extra_q]
    qs += [lo + (hi - lo) * rng.uniform(0.1, 0.9, len(lo)) for _ in range(3)]
    arm["self_test"] = [{"q": [float(v) for v in q], "ee": matrix_pose(ee(arm, q))} for q in qs]
    return arm


def xarm7():
    rows = [(0, -PI / 2, 0.267), (0, PI / 2, 0), (0.0525, PI / 2, 0.293), (0.0775, PI / 2, 0),
            (0, PI / 2, 0.3425), (0.076, -PI / 2, 0), (0, 0, 0.097)]
    arm = {
        "name": "xarm7",
        "convention": "standard",
        "dh_rows": [{"a": a, "alpha": al, "d": d, "theta_offset": 0.0} for a, al, d in rows],
        "joint_limits": [[-TAU, TAU], [-2.059, 2.0944], [-TAU, TAU], [-0.19198, 3.927], [-TAU, TAU],
                         [-1.69297, PI], [-TAU, TAU]],
        "base_pose": {"rotvec": [0.0, 0.0, 0.0], "trans": [0.0, 0.0, 0.0]},
        "tool": {"rotvec": [0.0, 0.0, 0.0], "trans": [0.0, 0.0, 0.172]},
    }
    seeds = [np.array([0, 0.3, 0, 1.2, 0, 0.9, 0]), np.array([0, -0.2, 0, 0.8, 0, 1.0, 0])]
    return finish(arm, [0.07, 0.06, 0.06, 0.055, 0.05, 0.05, 0.045], {"flange_to_tcp": 0.172}, seeds, [])


def panda():
    rows = [(0, 0, 0.333), (0, -PI / 2, 0), (0, PI / 2, 0.316), (0.0825, PI / 2, 0), (-0.0825, -PI / 2, 0.384),
            (0, PI / 2, 0), (0.088, PI / 2, 0)]
    arm = {
        "name": "panda",
        "convention": "modified",
        "dh_rows": [{"a": a, "alpha": al, "d": d, "theta_offset": 0.0} for a, al, d in rows],
        "joint_limits": [[-2.8973, 2.8973], [-1.7628, 1.7628], [-2.8973, 2.8973], [-3.0718, -0.0698],
                         [-2.8973, 2.8973], [-0.0175, 3.7525], [-2.8973, 2.8973]],
        "base_pose": {"rotvec": [0.0, 0.0, 0.0], "trans": [0.0, 0.0, 0.0]},
        # Flange (0.107) plus hand with fingertip center (0.1034), rotated -45 deg.
        "tool": matrix_pose(trans(0, 0, 0.107 + 0.1034) @ rz(-PI / 4)),
    }
    seeds = [np.array([0, 0.2, 0, -2.0, 0, 2.2, 0.785]), np.array([0, -0.3, 0, -2.4, 0, 2.0, 0.785])]
    return finish(arm, [0.07, 0.065, 0.06, 0.06, 0.055, 0.05, 0.045], {"flange_to_tcp": 0.2104}, seeds, [])


def gen3():
    rows = [(PI / 2, -0.2848, 0.0), (PI / 2, -0.0118, PI), (PI / 2, -0.4208, PI), (PI / 2, -0.0128, PI),
            (PI / 2, -0.3143, PI), (PI / 2, 0.0, PI), (PI, -0.1674, PI)]
    arm = {
        "name": "gen3",
        "convention": "standard",
        "dh_rows": [{"a": 0.0, "alpha": al, "d": d, "theta_offset": off} for al, d, off in rows],
        "joint_limits": [[-TAU, TAU], [-2.41, 2.41], [-TAU, TAU], [-2.66, 2.66], [-TAU, TAU], [-2.23, 2.23],
                         [-TAU, TAU]],
        "base_pose": {"rotvec": [PI, 0.0, 0.0], "trans": [0.0, 0.0, 0.0]},
        "tool": {"rotvec": [0.0, 0.0, 0.0], "trans": [0.0, 0.0, 0.15]},
    }
    seeds = [np.array([0, 0.3, PI, -1.8, 0, -1.0, PI / 2]), np.array([0, -0.3, 0, 1.8, 0, 1.0, 0])]
    return finish(arm, [0.065, 0.06, 0.055, 0.055, 0.05, 0.05, 0.045], {"flange_to_tcp": 0.15}, seeds, [])


def ur5e():
    a = [0, -0.425, -0.3922, 0, 0, 0]
    d = [0.1625, 0, 0, 0.1333, 0.0997, 0.0996]
    al = [PI / 2, 0, 0, PI / 2, -PI / 2, 0]
    arm = {
        "name": "ur5e",
        "convention": "standard",
        "dh_rows": [{"a": a[i], "alpha": al[i], "d": d[i], "theta_offset": 0.0} for i in range(6)],
        "joint_limits": [[-TAU, TAU], [-TAU, TAU], [-PI, PI], [-TAU, TAU], [-TAU, TAU], [-TAU, TAU]],
        "base_pose": {"rotvec": [0.0, 0.0, 0.0], "trans": [0.0, 0.0, 0.0]},
        "tool": {"rotvec": [0.0, 0.0, 0.0], "trans": [0.0, 0.0, 0.15]},
    }
    seeds = [np.array([0, -2.0, -1.6, -1.1, 1.57, 0]), np.array([0, -1.2, 1.5, -1.9, -1.57, 0])]
    return finish(arm, [0.07, 0.065, 0.055, 0.05, 0.05, 0.045], {"flange_to_tcp": 0.15}, seeds, [])


def main():
    out = pathlib.Path(__file__).resolve().parent.parent / "configs" / "arms"
    out.mkdir(parents=True, exist_ok=True)
    for make in (xarm7, panda, gen3, ur5e):
        arm = make()
        (out / f"{arm['name']}.json").write_text(json.dumps(arm, indent=2) + "\n")
        print(arm["name"], "home", np.round(arm["home_q"], 3))


if __name__ == "__main__":
    main()
