"""Robot/object model definitions, forward kinematics, and the plain-text
model description file.

Description file schema (JSON):

    {
      "robot": {
        "capsule_radius": 0.03,
        "links":  [{"name", "length", "mass", "inertia"}, ...],
        "joints": [{"parent", "child", "parent_anchor", "child_anchor",
                    "rest_angle", "limits", "torque_limit", "kp", "kd"}, ...],
        "fingertips": {"thumb": 7, "others": [8]}
      },
      "object": {"vertices": [[x, z], ...], "density", "friction",
                 "restitution", "com_offset"},
      "sim": {<SimConfig field overrides>}
    }
"""
from __future__ import annotations

import json
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .geometry import rotate, wrap_angle
from .types import JointSpec, LinkSpec, ModelError, ObjectModel, RobotModel, SimConfig

# Planar-H9 link indices
PELVIS, THIGH_L, SHIN_L, THIGH_R, SHIN_R, UARM, FOREARM, JAW_A, JAW_B = range(9)
LINK_NAMES = ("pelvis", "thigh_l", "shin_l", "thigh_r", "shin_r",
              "upper_arm", "forearm", "jaw_a", "jaw_b")
JOINT_NAMES = ("hip_l", "knee_l", "hip_r", "knee_r", "shoulder", "elbow",
               "jaw_a", "jaw_b")
GRIPPER_LINKS = (JAW_A, JAW_B)


def _rod(name, length, mass, inertia_scale=1.0):
    return LinkSpec(name, length, mass, inertia_scale * mass * length * length / 12.0)


def planar_h9() -> RobotModel:
    """Default planar robot: pelvis trunk, two 2-segment legs, one
    2-segment arm ending in a two-jaw gripper. 9 links, 8 actuated joints.

    Capsules run proximal -> distal along local +x; the pelvis points up
    at rest (angle pi/2) with hips at its lower end and the shoulder at
    the top.
    """
    links = [
        _rod("pelvis", 0.50, 14.0),
        _rod("thigh_l", 0.45, 4.5),
        _rod("shin_l", 0.45, 3.0),
        _rod("thigh_r", 0.45, 4.5),
        _rod("shin_r", 0.45, 3.0),
        _rod("upper_arm", 0.35, 1.8),
        _rod("forearm", 0.35, 1.2),
        _rod("jaw_a", 0.15, 0.35, inertia_scale=4.0),
        _rod("jaw_b", 0.15, 0.35, inertia_scale=4.0),
    ]
    half = {name: l.length * 0.5 for name, l in zip(LINK_NAMES, links)}
    joints = [
        # legs hang straight down from the pelvis bottom at q = 0
        JointSpec(PELVIS, THIGH_L, (-half["pelvis"], 0.0), (-half["thigh_l"], 0.0),
                  rest_angle=-np.pi, limits=(-1.6, 1.6), torque_limit=200.0, kp=350.0, kd=18.0),
        JointSpec(THIGH_L, SHIN_L, (half["thigh_l"], 0.0), (-half["shin_l"], 0.0),
                  rest_angle=0.0, limits=(-2.4, 0.02), torque_limit=180.0, kp=280.0, kd=12.0),
        JointSpec(PELVIS, THIGH_R, (-half["pelvis"], 0.0), (-half["thigh_r"], 0.0),
                  rest_angle=-np.pi, limits=(-1.6, 1.6), torque_limit=200.0, kp=350.0, kd=18.0),
        JointSpec(THIGH_R, SHIN_R, (half["thigh_r"], 0.0), (-half["shin_r"], 0.0),
                  rest_angle=0.0, limits=(-2.4, 0.02), torque_limit=180.0, kp=280.0, kd=12.0),
        # arm hangs straight down from the pelvis top at q = 0
        JointSpec(PELVIS, UARM, (half["pelvis"], 0.0), (-half["upper_arm"], 0.0),
                  rest_angle=-np.pi, limits=(-2.8, 2.8), torque_limit=80.0, kp=120.0, kd=8.0),
        JointSpec(UARM, FOREARM, (half["upper_arm"], 0.0), (-half["forearm"], 0.0),
                  rest_angle=0.0, limits=(-2.6, 0.05), torque_limit=50.0, kp=60.0, kd=4.0),
        # jaws splay symmetrically off the forearm tip
        JointSpec(FOREARM, JAW_A, (half["forearm"], 0.0), (-half["jaw_a"], 0.0),
                  rest_angle=0.0, limits=(0.05, 1.3), torque_limit=6.0, kp=10.0, kd=0.15),
        JointSpec(FOREARM, JAW_B, (half["forearm"], 0.0), (-half["jaw_b"], 0.0),
                  rest_angle=0.0, limits=(-1.3, -0.05), torque_limit=6.0, kp=10.0, kd=0.15),
    ]
    return RobotModel(links=links, joints=joints, fingertip_ids=(JAW_A, (JAW_B,)))


def box_object(half_w: float = 0.06, half_h: float = 0.06, density: float = 200.0,
               friction: float = 0.9, restitution: float = 0.7,
               com_offset=(0.0, 0.0)) -> ObjectModel:
    verts = np.array([[-half_w, -half_h], [half_w, -half_h],
                      [half_w, half_h], [-half_w, half_h]])
    return ObjectModel(vertices=verts, density=density, friction=friction,
                       restitution=restitution, com_offset=np.asarray(com_offset, float))


def fk_link_poses(robot: RobotModel, root_pos, root_angle: float,
                  q: np.ndarray) -> np.ndarray:
    """Forward kinematics: (n_links, 3) rows of [x, z, angle] per link."""
    out = np.zeros((robot.n_links, 3))
    out[0, :2] = np.asarray(root_pos, dtype=np.float64)
    out[0, 2] = root_angle
    for j, spec in zip(q, robot.joints):
        pa = out[spec.parent]
        theta = pa[2] + spec.rest_angle + j
        anchor = pa[:2] + rotate(pa[2], np.asarray(spec.parent_anchor))
        out[spec.child, :2] = anchor - rotate(theta, np.asarray(spec.child_anchor))
        out[spec.child, 2] = wrap_angle(theta)
    return out


def fk_link_velocities(robot: RobotModel, poses: np.ndarray, root_vel, root_omega: float,
                       qdot: np.ndarray) -> np.ndarray:
    """Rigid-chain velocities consistent with joint rates: (n_links, 3)
    rows of [vx, vz, omega]."""
    out = np.zeros((robot.n_links, 3))
    out[0, :2] = np.asarray(root_vel, dtype=np.float64)
    out[0, 2] = root_omega
    for jd, spec in zip(qdot, robot.joints):
        pa = poses[spec.parent]
        pv = out[spec.parent]
        omega_c = pv[2] + jd
        anchor = pa[:2] + rotate(pa[2], np.asarray(spec.parent_anchor))
        r_pa = anchor - pa[:2]
        v_anchor = pv[:2] + pv[2] * np.array([-r_pa[1], r_pa[0]])
        r_cb = poses[spec.child, :2] - anchor
        out[spec.child, :2] = v_anchor + omega_c * np.array([-r_cb[1], r_cb[0]])
        out[spec.child, 2] = omega_c
    return out


def save_model_file(path, robot: RobotModel, obj: ObjectModel,
                    sim: SimConfig | None = None) -> None:
    doc = {
        "robot": {
            "capsule_radius": robot.capsule_radius,
            "links": [asdict(l) for l in robot.links],
            "joints": [{**asdict(j),
                        "parent_anchor": list(j.parent_anchor),
                        "child_anchor": list(j.child_anchor),
                        "limits": list(j.limits)} for j in robot.joints],
            "fingertips": {"thumb": robot.fingertip_ids[0],
                           "others": list(robot.fingertip_ids[1])},
        },
        "object": {"vertices": obj.vertices.tolist(), "density": obj.density,
                   "friction": obj.friction, "restitution": obj.restitution,
                   "com_offset": obj.com_offset.tolist()},
        "sim": asdict(sim) if sim else {},
    }
    Path(path).write_text(json.dumps(doc, indent=2))


def load_model_file(path) -> tuple[RobotModel, ObjectModel, SimConfig]:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise ModelError(f"{path}: invalid model file: {e}") from e
    try:
        r = doc["robot"]
        links = [LinkSpec(**l) for l in r["links"]]
        joints = [JointSpec(parent=j["parent"], child=j["child"],
                            parent_anchor=tuple(j["parent_anchor"]),
                            child_anchor=tuple(j["child_anchor"]),
                            rest_angle=j["rest_angle"], limits=tuple(j["limits"]),
                            torque_limit=j["torque_limit"], kp=j["kp"], kd=j["kd"])
                  for j in r["joints"]]
        robot = RobotModel(links=links, joints=joints,
                           fingertip_ids=(r["fingertips"]["thumb"],
                                          tuple(r["fingertips"]["others"])),
                           capsule_radius=r.get("capsule_radius", 0.03))
        o = doc["object"]
        obj = ObjectModel(vertices=np.array(o["vertices"]), density=o["density"],
                          friction=o["friction"], restitution=o["restitution"],
                          com_offset=np.array(o.get("com_offset", [0.0, 0.0])))
        sim = SimConfig(**doc.get("sim", {}))
    except (KeyError, TypeError) as e:
        raise ModelError(f"{path}: missing or malformed field: {e}") from e
    return robot, obj, sim


def two_link_ik(anchor, target, l1: float, l2: float, bend: float):
    """World angles (theta1, theta2) of a 2-link chain from anchor to
    target; bend=+1 puts the middle joint CCW of the chord, -1 CW."""
    d = np.asarray(target, dtype=np.float64) - np.asarray(anchor, dtype=np.float64)
    r = float(np.hypot(d[0], d[1]))
    r = min(max(r, abs(l1 - l2) + 1e-6), l1 + l2 - 1e-6)
    phi = np.arctan2(d[1], d[0])
    alpha = np.arccos(np.clip((l1 * l1 + r * r - l2 * l2) / (2.0 * l1 * r), -1.0, 1.0))
    theta1 = phi + bend * alpha
    mid = np.asarray(anchor) + l1 * np.array([np.cos(theta1), np.sin(theta1)])
    delta = np.asarray(target) - mid
    theta2 = np.arctan2(delta[1], delta[0])
    return float(theta1), float(theta2)


def leg_ik(robot: RobotModel, pelvis_pos, pelvis_angle: float, foot_target,
           side: str) -> tuple[float, float]:
    """Hip and knee joint angles placing a shin tip at foot_target.

    The knee bends backward (q_knee <= 0) as the joint limits require.
    """
    hip_j, knee_j = (0, 1) if side == "left" else (2, 3)
    hip_spec = robot.joints[hip_j]
    anchor = np.asarray(pelvis_pos) + rotate(pelvis_angle, np.asarray(hip_spec.parent_anchor))
    l1 = robot.links[THIGH_L].length
    l2 = robot.links[SHIN_L].length
    t1, t2 = two_link_ik(anchor, foot_target, l1, l2, bend=+1.0)
    q_hip = wrap_angle(t1 - pelvis_angle - hip_spec.rest_angle)
    q_knee = wrap_angle(t2 - t1 - robot.joints[knee_j].rest_angle)
    return float(q_hip), float(q_knee)


def arm_ik(robot: RobotModel, pelvis_pos, pelvis_angle: float,
           wrist_target) -> tuple[float, float]:
    """Shoulder and elbow joint angles placing the forearm tip at
    wrist_target; elbow bends with q_elbow <= 0."""
    spec = robot.joints[4]
    anchor = np.asarray(pelvis_pos) + rotate(pelvis_angle, np.asarray(spec.parent_anchor))
    l1 = robot.links[UARM].length
    l2 = robot.links[FOREARM].length
    t1, t2 = two_link_ik(anchor, wrist_target, l1, l2, bend=+1.0)
    q_sh = wrap_angle(t1 - pelvis_angle - spec.rest_angle)
    q_el = wrap_angle(t2 - t1 - robot.joints[5].rest_angle)
    return float(q_sh), float(q_el)


DEFAULT_STAND_HEIGHT = 1.10   # pelvis z with softly bent knees
DEFAULT_FOOT_SPREAD = 0.22    # stance half-width


def build_stance(robot: RobotModel, root_x: float = 0.0,
                 root_z: float = DEFAULT_STAND_HEIGHT,
                 foot_spread: float = DEFAULT_FOOT_SPREAD,
                 wrist_target=None, jaw_open: float = 0.5) -> np.ndarray:
    """Joint angles for a balanced stance, feet on the ground by IK."""
    q = np.zeros(robot.n_joints)
    root = np.array([root_x, root_z])
    ground = robot.capsule_radius
    q[0], q[1] = leg_ik(robot, root, np.pi / 2, (root_x + foot_spread, ground), "left")
    q[2], q[3] = leg_ik(robot, root, np.pi / 2, (root_x - foot_spread, ground), "right")
    if wrist_target is not None:
        q[4], q[5] = arm_ik(robot, root, np.pi / 2, wrist_target)
    else:
        q[4], q[5] = 0.0, -0.3
    q[6], q[7] = jaw_open, -jaw_open
    lo = np.array([j.limits[0] for j in robot.joints])
    hi = np.array([j.limits[1] for j in robot.joints])
    return np.clip(q, lo + 1e-3, hi - 1e-3)


def default_stand_q(robot: RobotModel) -> np.ndarray:
    return build_stance(robot)
