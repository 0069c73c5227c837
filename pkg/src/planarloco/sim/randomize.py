"""Dynamics randomization and scheduled velocity perturbations."""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .types import ObjectModel, RobotModel
from .world import SimWorld


@dataclass
class PerturbConfig:
    push_interval: float = 4.0      # seconds between pushes
    push_speed: float = 1.0         # m/s added planar speed
    targets: str = "both"           # pelvis | object | both | random

    def interval_steps(self, control_dt: float) -> int:
        return max(1, int(round(self.push_interval / control_dt)))


def apply_perturbation(world: SimWorld, rng: np.random.Generator,
                       cfg: PerturbConfig | None = None) -> SimWorld:
    """Every push_interval seconds, add a planar velocity of push_speed in
    a random direction to the pelvis and/or object. No-op off schedule."""
    cfg = cfg or PerturbConfig()
    k = cfg.interval_steps(world.config.control_dt)
    due = (world.step_count > 0) & (world.step_count % k == 0)
    if not due.any() or cfg.push_speed == 0.0:
        return world
    n = world.n_envs
    for body_kind in ("pelvis", "object"):
        if cfg.targets == "random":
            hit = rng.random(n) < 0.5
        elif cfg.targets in (body_kind, "both"):
            hit = np.ones(n, dtype=bool)
        else:
            hit = np.zeros(n, dtype=bool)
        phi = rng.uniform(-np.pi, np.pi, size=n)
        dv = cfg.push_speed * np.stack([np.cos(phi), np.sin(phi)], axis=-1)
        body = 0 if body_kind == "pelvis" else world.obj_body
        world.vel[:, body] += np.where((due & hit)[:, None], dv, 0.0)
    return world


@dataclass
class RandomizeRanges:
    friction: tuple[float, float] = (1.0, 3.0)
    com_offset: tuple[float, float] = (-0.05, 0.05)     # m
    object_mass_scale: tuple[float, float] = (0.8, 1.2)
    base_mass_scale: tuple[float, float] = (0.8, 1.2)
    # actuation randomization is off by default for the expert
    gain_scale: tuple[float, float] = (0.8, 1.2)
    randomize_gains: bool = False

    def validate(self) -> None:
        for name in ("friction", "com_offset", "object_mass_scale",
                     "base_mass_scale", "gain_scale"):
            lo, hi = getattr(self, name)
            if hi < lo:
                raise ValueError(f"invalid randomization range for {name}")


def randomize_dynamics(object_model: ObjectModel, robot_model: RobotModel,
                       rng: np.random.Generator,
                       ranges: RandomizeRanges | None = None
                       ) -> tuple[ObjectModel, RobotModel]:
    """Sample one randomized (object, robot) pair.

    Friction and center-of-mass offset perturb the object; mass scales hit
    the object density and the pelvis mass; PD gain scaling is sampled
    only when ranges.randomize_gains is set.
    """
    ranges = ranges or RandomizeRanges()
    ranges.validate()
    friction = rng.uniform(*ranges.friction)
    com = rng.uniform(*ranges.com_offset, size=2)
    obj_scale = rng.uniform(*ranges.object_mass_scale)
    base_scale = rng.uniform(*ranges.base_mass_scale)

    new_obj = ObjectModel(vertices=object_model.vertices.copy(),
                          density=object_model.density * obj_scale,
                          friction=friction,
                          restitution=object_model.restitution,
                          com_offset=object_model.com_offset + com)

    links = list(robot_model.links)
    base = links[0]
    links[0] = replace(base, mass=base.mass * base_scale, inertia=base.inertia * base_scale)
    joints = robot_model.joints
    if ranges.randomize_gains:
        joints = [replace(j, kp=j.kp * rng.uniform(*ranges.gain_scale),
                          kd=j.kd * rng.uniform(*ranges.gain_scale))
                  for j in robot_model.joints]
    new_robot = RobotModel(links=links, joints=joints,
                           fingertip_ids=robot_model.fingertip_ids,
                           capsule_radius=robot_model.capsule_radius)
    return new_obj, new_robot


def load_env_dynamics(world: SimWorld, env: int, obj: ObjectModel,
                      robot: RobotModel) -> None:
    """Write one env's randomized mass/material/gain rows into the world."""
    for i, link in enumerate(robot.links):
        world.inv_m[env, i] = 1.0 / link.mass
        world.inv_i[env, i] = 1.0 / link.inertia
    world.inv_m[env, world.obj_body] = 1.0 / obj.mass
    world.inv_i[env, world.obj_body] = 1.0 / obj.inertia
    world.obj_verts[env] = obj.vertices - obj.com_offset
    world.obj_friction[env] = obj.friction
    world.obj_restitution[env] = obj.restitution
    world.kp[env] = [j.kp for j in robot.joints]
    world.kd[env] = [j.kd for j in robot.joints]
