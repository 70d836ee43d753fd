"""Write the bundled robot descriptions, calibrating their Labanotation tables.

Each (limb, direction) window is found by posing the model's FK so the limb
points along the canonical direction (all other joints at zero), then
widening the solved joint values by +-30 deg and clipping to hard limits.

    python scripts/build_robots.py [--out src/lfoexec/data]
"""
import argparse
import json
import re
from pathlib import Path

import numpy as np
from scipy.optimize import least_squares

from lfoexec.kinematics import joint_frames, load_robot
from lfoexec.laban import ALL_DIRECTIONS

WINDOW = np.radians(30.0)
HALF_PI_Y = [np.cos(np.pi / 4), 0.0, np.sin(np.pi / 4), 0.0]  # hand z along link x


def joint(name, jtype, axis, xyz, limits, parent, child):
    return {"name": name, "type": jtype, "axis": axis, "parent": parent, "child": child,
            "origin": {"position": xyz, "quaternion": [1.0, 0.0, 0.0, 0.0]}, "limits": limits}


def nextage_like():
    j = [
        joint("r_shoulder_yaw", "revolute", [0, 0, 1], [0.0, -0.20, 1.02], [-1.53, 1.53], "chest", "r_shoulder_link"),
        joint("r_shoulder_pitch", "revolute", [0, 1, 0], [0.0, 0.0, 0.0], [-2.44, 1.80], "r_shoulder_link", "r_upper_arm"),
        joint("r_elbow", "revolute", [0, 1, 0], [0.32, 0.0, 0.0], [-2.75, 2.75], "r_upper_arm", "r_elbow_link"),
        joint("r_forearm_roll", "revolute", [1, 0, 0], [0.0, 0.0, 0.0], [-2.88, 2.88], "r_elbow_link", "r_forearm"),
        joint("r_wrist_pitch", "revolute", [0, 1, 0], [0.30, 0.0, 0.0], [-1.75, 1.75], "r_forearm", "r_wrist_link"),
        joint("r_wrist_roll", "revolute", [1, 0, 0], [0.0, 0.0, 0.0], [-2.88, 2.88], "r_wrist_link", "r_hand_mount"),
    ]
    return {
        "name": "nextage_like",
        "joints": j,
        "end_effector": {"position": [0.10, 0.0, 0.0], "quaternion": HALF_PI_Y},
        "labels": {"elbow_joint": "r_elbow"},
    }, {
        "upper": (["r_shoulder_yaw", "r_shoulder_pitch"], "r_shoulder_pitch", "r_elbow"),
        "lower": (["r_elbow"], "r_elbow", "r_wrist_pitch"),
    }


def fetch_like():
    # base link stands 0.15 m behind the workcell origin
    pi = float(np.pi)
    j = [
        joint("torso_lift", "prismatic", [0, 0, 1], [-0.236, 0.0, 0.377], [0.0, 0.386], "base_link", "torso_lift_link"),
        joint("shoulder_pan", "revolute", [0, 0, 1], [0.119, 0.0, 0.348], [-1.6056, 1.6056], "torso_lift_link", "shoulder_pan_link"),
        joint("shoulder_lift", "revolute", [0, 1, 0], [0.117, 0.0, 0.060], [-1.221, 1.518], "shoulder_pan_link", "shoulder_lift_link"),
        joint("upperarm_roll", "revolute", [1, 0, 0], [0.219, 0.0, 0.0], [-pi, pi], "shoulder_lift_link", "upperarm_roll_link"),
        joint("elbow_flex", "revolute", [0, 1, 0], [0.133, 0.0, 0.0], [-2.251, 2.251], "upperarm_roll_link", "elbow_flex_link"),
        joint("forearm_roll", "revolute", [1, 0, 0], [0.197, 0.0, 0.0], [-pi, pi], "elbow_flex_link", "forearm_roll_link"),
        joint("wrist_flex", "revolute", [0, 1, 0], [0.1245, 0.0, 0.0], [-2.16, 2.16], "forearm_roll_link", "wrist_flex_link"),
        joint("wrist_roll", "revolute", [1, 0, 0], [0.1385, 0.0, 0.0], [-pi, pi], "wrist_flex_link", "wrist_roll_link"),
    ]
    return {
        "name": "fetch_like",
        "joints": j,
        "end_effector": {"position": [0.20, 0.0, 0.0], "quaternion": HALF_PI_Y},
        "labels": {"elbow_joint": "elbow_flex"},
    }, {
        "upper": (["shoulder_pan", "shoulder_lift"], "shoulder_lift", "elbow_flex"),
        "lower": (["upperarm_roll", "elbow_flex"], "elbow_flex", "wrist_flex"),
    }


def limb_direction(model, q, start_joint, end_joint):
    frames, _ = joint_frames(model, q)
    a = frames[model.joint_index(start_joint)][:3, 3]
    b = frames[model.joint_index(end_joint)][:3, 3]
    return (b - a) / np.linalg.norm(b - a)


def calibrate(model, limb_joints):
    table = {}
    for limb, (names, start, end) in limb_joints.items():
        idx = [model.joint_index(n) for n in names]
        lim = model.limits[idx]
        entries = {}
        for direction in ALL_DIRECTIONS:
            target = direction.unit_vector

            def residual(x):
                q = np.zeros(model.dof)
                q[idx] = x
                return np.concatenate([limb_direction(model, q, start, end) - target, 1e-3 * x])

            best = None
            for seed in np.array(np.meshgrid(*[np.linspace(-2.5, 2.5, 5)] * len(idx))).reshape(len(idx), -1).T:
                seed = np.clip(seed, lim[:, 0] + 1e-6, lim[:, 1] - 1e-6)
                sol = least_squares(residual, seed, bounds=(lim[:, 0], lim[:, 1]), xtol=1e-14, ftol=1e-14, gtol=1e-14)
                if best is None or sol.cost < best.cost - 1e-12:
                    best = sol
            entries[direction.name] = {
                n: [round(float(max(lo, c - WINDOW)), 6), round(float(min(hi, c + WINDOW)), 6)]
                for n, c, (lo, hi) in zip(names, best.x, lim)
            }
        table[f"{limb}_arm"] = entries
    return table


def build(make_robot):
    desc, limbs = make_robot()
    bare = dict(desc, laban_table={})
    model = load_robot(json.dumps(bare).encode())
    desc["laban_table"] = calibrate(model, limbs)
    order = ["name", "joints", "end_effector", "laban_table", "labels"]
    return {k: desc[k] for k in order}


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default=str(Path(__file__).resolve().parents[1] / "src/lfoexec/data"))
    args = parser.parse_args()
    out = Path(args.out)
    for fn in (nextage_like, fetch_like):
        desc = build(fn)
        path = out / f"{desc['name']}.robot"
        text = json.dumps(desc, indent=2)
        # keep numeric vectors on one line
        text = re.sub(r"\[\s+([-0-9.,e\s]+?)\s+\]", lambda m: "[" + " ".join(m.group(1).split()) + "]", text)
        path.write_text(text + "\n")
        print("wrote", path)


if __name__ == "__main__":
    main()
