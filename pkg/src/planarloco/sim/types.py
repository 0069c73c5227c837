"""Domain types for the planar rigid-body simulator."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import polygon_area, wrap_angle


class SimulationDiverged(RuntimeError):
    """Raised when a body leaves the finite-state envelope."""

    def __init__(self, env_index: int, body_index: int):
        super().__init__(f"non-finite state in env {env_index}, body {body_index}")
        self.env_index = env_index
        self.body_index = body_index


class ModelError(ValueError):
    pass


@dataclass
class BodyState:
    """Pose and velocity of one rigid body. x is horizontal, z vertical."""

    position: np.ndarray        # (2,) meters
    angle: float                # radians, wrapped to (-pi, pi]
    linear_velocity: np.ndarray  # (2,) m/s
    angular_velocity: float     # rad/s

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=np.float64)
        self.linear_velocity = np.asarray(self.linear_velocity, dtype=np.float64)
        self.angle = float(wrap_angle(self.angle))
        if not (np.all(np.isfinite(self.position)) and np.isfinite(self.angle)
                and np.all(np.isfinite(self.linear_velocity))
                and np.isfinite(self.angular_velocity)):
            raise ModelError("body state must be finite")


@dataclass
class LinkSpec:
    name: str
    length: float      # m
    mass: float        # kg (area mass)
    inertia: float     # kg m^2 about COM


@dataclass
class JointSpec:
    parent: int                      # parent link index
    child: int                       # child link index
    parent_anchor: tuple[float, float]  # COM-local, m
    child_anchor: tuple[float, float]
    rest_angle: float                # child minus parent world angle at q = 0
    limits: tuple[float, float]      # rad, about rest
    torque_limit: float              # N m
    kp: float
    kd: float


@dataclass
class RobotModel:
    links: list[LinkSpec]
    joints: list[JointSpec]
    fingertip_ids: tuple[int, tuple[int, ...]]  # (thumb tip link, other tip links)
    capsule_radius: float = 0.03

    def __post_init__(self):
        n = len(self.links)
        thumb, others = self.fingertip_ids
        if len(others) < 1:
            raise ModelError("need at least one non-thumb fingertip")
        if thumb in others:
            raise ModelError("thumb tip cannot be in the fingertip set")
        # joint graph must be a tree rooted at link 0 (the free pelvis body)
        seen = {0}
        for j in self.joints:
            if not (0 <= j.parent < n and 0 <= j.child < n):
                raise ModelError("joint references unknown link")
            if j.parent not in seen:
                raise ModelError(f"joint parent {j.parent} not reachable from root")
            if j.child in seen:
                raise ModelError(f"link {j.child} has two parents (not a tree)")
            seen.add(j.child)
        if seen != set(range(n)):
            raise ModelError("joint graph does not span all links")

    @property
    def n_links(self) -> int:
        return len(self.links)

    @property
    def n_joints(self) -> int:
        return len(self.joints)


@dataclass
class ObjectModel:
    vertices: np.ndarray          # (nv, 2) convex, counter-clockwise, COM-local m
    density: float = 200.0        # kg / m^2
    friction: float = 0.9
    restitution: float = 0.7
    com_offset: np.ndarray = field(default_factory=lambda: np.zeros(2))

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=np.float64)
        self.com_offset = np.asarray(self.com_offset, dtype=np.float64)
        area = polygon_area(self.vertices)
        if area <= 1e-6:
            raise ModelError(f"polygon must be convex/CCW with area > 1e-6 (got {area:.2e})")
        v = self.vertices
        nv = len(v)
        for i in range(nv):
            e1 = v[(i + 1) % nv] - v[i]
            e2 = v[(i + 2) % nv] - v[(i + 1) % nv]
            if e1[0] * e2[1] - e1[1] * e2[0] < -1e-12:
                raise ModelError("polygon must be convex and counter-clockwise")
        if self.friction < 0:
            raise ModelError("friction must be >= 0")
        if not 0.0 <= self.restitution <= 1.0:
            raise ModelError("restitution must be in [0, 1]")

    @property
    def mass(self) -> float:
        return self.density * polygon_area(self.vertices)

    @property
    def inertia(self) -> float:
        # polygon moment about the centroid, then shifted to the COM offset
        v = self.vertices
        nv = len(v)
        num = 0.0
        for i in range(nv):
            a, b = v[i], v[(i + 1) % nv]
            cross = a[0] * b[1] - a[1] * b[0]
            num += cross * (a @ a + a @ b + b @ b)
        i_origin = self.density * num / 12.0
        m = self.mass
        c = polygon_centroid(self.vertices)
        i_centroid = i_origin - m * float(c @ c)
        d = c - self.com_offset
        return i_centroid + m * float(d @ d)


def polygon_centroid(vertices: np.ndarray) -> np.ndarray:
    v = np.asarray(vertices, dtype=np.float64)
    nv = len(v)
    area = 0.0
    cx = cz = 0.0
    for i in range(nv):
        a, b = v[i], v[(i + 1) % nv]
        cross = a[0] * b[1] - a[1] * b[0]
        area += cross
        cx += (a[0] + b[0]) * cross
        cz += (a[1] + b[1]) * cross
    area *= 0.5
    return np.array([cx, cz]) / (6.0 * area)


@dataclass
class SimConfig:
    sim_dt: float = 1.0 / 60.0
    control_dt: float = 1.0 / 30.0
    substeps: int = 2
    contact_offset: float = 0.02
    object_rest_offset: float = 0.01
    ground_friction: float = 0.9
    ground_restitution: float = 0.7
    gravity: float = 9.81
    solver_iterations: int = 4

    def __post_init__(self):
        if self.substeps < 1:
            raise ModelError("substeps must be >= 1")
        ratio = self.control_dt / self.sim_dt
        if abs(ratio - round(ratio)) > 1e-9:
            raise ModelError("control_dt must be an integer multiple of sim_dt")
        if abs(self.substeps * self.sim_dt - self.control_dt) > 1e-9:
            raise ModelError("control_dt must equal substeps * sim_dt")


@dataclass
class ContactReport:
    """Per-control-step contact summary. Flags are true iff a positive
    normal impulse was applied during the step; impulses are summed N s."""

    link_object: np.ndarray          # (n_envs, n_links) bool
    link_ground: np.ndarray          # (n_envs, n_links) bool
    object_ground: np.ndarray        # (n_envs,) bool
    link_object_impulse: np.ndarray  # (n_envs, n_links)
    link_ground_impulse: np.ndarray  # (n_envs, n_links)
    object_ground_impulse: np.ndarray  # (n_envs,)
