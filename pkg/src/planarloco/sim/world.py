"""Batched planar rigid-body world: articulated robot + one convex object
+ static ground, PD-actuated joints, sequential-impulse contacts.

All state arrays carry a leading env axis; every env is an independent
world stepped in lockstep. Integration is semi-implicit Euler at sim_dt;
each control step runs `substeps` sub-integrations. Contacts use
speculative activation within contact_offset, accumulated normal/friction
impulses with warm starting, and Baumgarte bias for resting penetration.
Joint anchors are enforced by velocity impulses plus a nonlinear
positional pass; PD actuation is solved implicitly as motor impulses so
arbitrary gains stay stable at the sim rate.
"""
from __future__ import annotations

import numpy as np

from .geometry import capsule_sample_params, cross2, rotate, wrap_angle
from .types import (BodyState, ContactReport, ObjectModel, RobotModel,
                    SimConfig, SimulationDiverged)

BAUMGARTE = 0.2
PENETRATION_SLOP = 0.005
RESTITUTION_THRESHOLD = 1.0   # m/s approach speed below which impacts are inelastic
MAX_VELOCITY = 100.0


def pd_torque(q, qdot, target, kp, kd, tau_max):
    """PD torque clamp(kp * wrap(target - q) - kd * qdot, +-tau_max)."""
    err = wrap_angle(np.asarray(target) - np.asarray(q))
    return np.clip(kp * err - kd * np.asarray(qdot), -np.asarray(tau_max), np.asarray(tau_max))


def batch_point_polygon_sdf(points: np.ndarray, verts: np.ndarray):
    """Signed distance of points (n, S, 2) to per-env convex CCW polygons
    (n, nv, 2). Returns (dist (n,S), witness (n,S,2), normal (n,S,2));
    negative inside, witness on the boundary, normal outward."""
    nxt = np.roll(verts, -1, axis=1)
    edge = nxt - verts                                    # (n, nv, 2)
    elen2 = np.maximum((edge * edge).sum(-1), 1e-18)
    en = np.stack([edge[..., 1], -edge[..., 0]], axis=-1) / np.sqrt(elen2)[..., None]

    rel = points[:, :, None, :] - verts[:, None, :, :]    # (n, S, nv, 2)
    plane_d = (rel * en[:, None]).sum(-1)                 # (n, S, nv)
    inside = np.all(plane_d <= 1e-12, axis=2)

    i_in = plane_d.argmax(axis=2)
    d_in = np.take_along_axis(plane_d, i_in[..., None], axis=2)[..., 0]
    n_in = np.take_along_axis(np.broadcast_to(en[:, None], rel.shape),
                              i_in[..., None, None], axis=2)[:, :, 0, :]
    w_in = points - n_in * d_in[..., None]

    t = ((rel * edge[:, None]).sum(-1) / elen2[:, None]).clip(0.0, 1.0)
    foot = verts[:, None] + t[..., None] * edge[:, None]  # (n, S, nv, 2)
    diff = points[:, :, None, :] - foot
    seg_d2 = (diff * diff).sum(-1)
    i_out = seg_d2.argmin(axis=2)
    w_out = np.take_along_axis(foot, i_out[..., None, None], axis=2)[:, :, 0, :]
    d_out = np.sqrt(np.take_along_axis(seg_d2, i_out[..., None], axis=2)[..., 0])
    delta = points - w_out
    n_edge = np.take_along_axis(np.broadcast_to(en[:, None], rel.shape),
                                i_out[..., None, None], axis=2)[:, :, 0, :]
    safe = (d_out > 1e-12)[..., None]
    n_out = np.where(safe, delta / np.maximum(d_out, 1e-12)[..., None], n_edge)

    dist = np.where(inside, d_in, d_out)
    witness = np.where(inside[..., None], w_in, w_out)
    normal = np.where(inside[..., None], n_in, n_out)
    return dist, witness, normal


class _ContactGroup:
    """Per-slot contact constraints between one body array and either the
    ground (body_a None) or the object (body_a = object index)."""

    __slots__ = ("body_a", "body_b", "jn", "jt", "nx", "nz", "tx", "tz",
                 "rbx", "rbz", "rax", "raz", "kn", "kt", "sep", "active",
                 "any_active", "rest_target", "friction", "nslots")

    def __init__(self, world: "SimWorld", points, normal, sep, body_a, body_b,
                 jn, jt, friction, restitution):
        self.body_a = body_a
        self.body_b = body_b
        self.jn = jn
        self.jt = jt
        self.friction = friction
        self.nslots = points.shape[1]
        self.sep = sep
        self.active = sep < world.config.contact_offset
        self.any_active = self.active.any(axis=0)
        jn[~self.active] = 0.0
        jt[~self.active] = 0.0

        self.nx, self.nz = normal[..., 0], normal[..., 1]
        self.tx, self.tz = -self.nz, self.nx
        rb = points - world.pos[:, body_b, :]
        self.rbx, self.rbz = rb[..., 0], rb[..., 1]
        inv_mb = world.inv_m[:, body_b]
        inv_ib = world.inv_i[:, body_b]
        rbxn = self.rbx * self.nz - self.rbz * self.nx
        rbxt = self.rbx * self.tz - self.rbz * self.tx
        kn = inv_mb + inv_ib * rbxn ** 2
        kt = inv_mb + inv_ib * rbxt ** 2
        if body_a is not None:
            ra = points - world.pos[:, None, body_a, :]
            self.rax, self.raz = ra[..., 0], ra[..., 1]
            inv_ma = world.inv_m[:, body_a, None]
            inv_ia = world.inv_i[:, body_a, None]
            raxn = self.rax * self.nz - self.raz * self.nx
            raxt = self.rax * self.tz - self.raz * self.tx
            kn = kn + inv_ma + inv_ia * raxn ** 2
            kt = kt + inv_ma + inv_ia * raxt ** 2
        else:
            self.rax = self.raz = None
        self.kn = np.maximum(kn, 1e-12)
        self.kt = np.maximum(kt, 1e-12)

        vn0 = self._normal_velocity_all(world)
        self.rest_target = np.where(vn0 < -RESTITUTION_THRESHOLD,
                                    -restitution[:, None] * vn0, 0.0)

    def _normal_velocity_all(self, world) -> np.ndarray:
        b = self.body_b
        vx = world.vel[:, b, 0] - world.omega[:, b] * self.rbz
        vz = world.vel[:, b, 1] + world.omega[:, b] * self.rbx
        if self.body_a is not None:
            a = self.body_a
            vx = vx - (world.vel[:, a, None, 0] - world.omega[:, a, None] * self.raz)
            vz = vz - (world.vel[:, a, None, 1] + world.omega[:, a, None] * self.rax)
        return vx * self.nx + vz * self.nz


class SimWorld:
    """n_envs independent copies of one robot+object scene."""

    def __init__(self, robot: RobotModel, obj: ObjectModel, config: SimConfig | None = None,
                 n_envs: int = 1):
        self.robot = robot
        self.object_model = obj
        self.config = config or SimConfig()
        self.n_envs = n_envs
        nL = robot.n_links
        self.n_links = nL
        self.obj_body = nL
        nb = nL + 1
        self.n_bodies = nb
        n = n_envs

        self.pos = np.zeros((n, nb, 2))
        self.angle = np.zeros((n, nb))
        self.vel = np.zeros((n, nb, 2))
        self.omega = np.zeros((n, nb))
        self.step_count = np.zeros(n, dtype=np.int64)

        # per-env mass properties (dynamics randomization scales rows)
        self.inv_m = np.zeros((n, nb))
        self.inv_i = np.zeros((n, nb))
        for i, link in enumerate(robot.links):
            self.inv_m[:, i] = 1.0 / link.mass
            self.inv_i[:, i] = 1.0 / link.inertia
        self.inv_m[:, nL] = 1.0 / obj.mass
        self.inv_i[:, nL] = 1.0 / obj.inertia

        # object geometry/material rows
        base_verts = obj.vertices - obj.com_offset
        self.obj_verts = np.broadcast_to(base_verts, (n,) + base_verts.shape).copy()
        self.obj_friction = np.full(n, obj.friction)
        self.obj_restitution = np.full(n, obj.restitution)

        # joints
        nj = robot.n_joints
        self.n_joints = nj
        self.jp = np.array([j.parent for j in robot.joints])
        self.jc = np.array([j.child for j in robot.joints])
        self.j_pa = np.array([j.parent_anchor for j in robot.joints])
        self.j_ca = np.array([j.child_anchor for j in robot.joints])
        self.j_rest = np.array([j.rest_angle for j in robot.joints])
        self.j_lo = np.array([j.limits[0] for j in robot.joints])
        self.j_hi = np.array([j.limits[1] for j in robot.joints])
        self.tau_max = np.array([j.torque_limit for j in robot.joints])
        self.kp = np.broadcast_to(np.array([j.kp for j in robot.joints]), (n, nj)).copy()
        self.kd = np.broadcast_to(np.array([j.kd for j in robot.joints]), (n, nj)).copy()

        self.half_len = np.array([l.length * 0.5 for l in robot.links])
        self.radius = robot.capsule_radius

        # fixed contact-slot tables
        self.gl_link = np.repeat(np.arange(nL), 2)
        self.gl_t = np.tile(np.array([0.0, 1.0]), nL)
        ol_link, ol_t = [], []
        for i, link in enumerate(robot.links):
            for t in capsule_sample_params(link.length):
                ol_link.append(i)
                ol_t.append(t)
        self.ol_link = np.array(ol_link)
        self.ol_t = np.array(ol_t)
        self.nv = len(obj.vertices)
        # per-link slot ranges (contiguous) for report reduction
        self.ol_slices = [np.flatnonzero(self.ol_link == i) for i in range(nL)]

        # warm-start impulse caches (normal, tangent) per slot
        self.gl_jn = np.zeros((n, len(self.gl_link)))
        self.gl_jt = np.zeros((n, len(self.gl_link)))
        self.ol_jn = np.zeros((n, len(self.ol_link)))
        self.ol_jt = np.zeros((n, len(self.ol_link)))
        self.og_jn = np.zeros((n, self.nv))
        self.og_jt = np.zeros((n, self.nv))
        self.joint_impulse = np.zeros((n, nj, 2))

        # diagnostics refreshed by step()
        self.last_torque = np.zeros((n, nj))
        self.last_qdot = np.zeros((n, nj))
        self._ol_dist_cache: tuple[int, tuple] | None = None

    # ------------------------------------------------------------------
    # state access

    @property
    def time(self) -> np.ndarray:
        return self.step_count * self.config.control_dt

    def joint_angles(self) -> np.ndarray:
        return wrap_angle(self.angle[:, self.jc] - self.angle[:, self.jp] - self.j_rest)

    def joint_velocities(self) -> np.ndarray:
        return self.omega[:, self.jc] - self.omega[:, self.jp]

    def get_body_state(self, env: int, body: int) -> BodyState:
        return BodyState(self.pos[env, body].copy(), float(self.angle[env, body]),
                         self.vel[env, body].copy(), float(self.omega[env, body]))

    def set_body_state(self, env: int, body: int, state: BodyState) -> None:
        self.pos[env, body] = state.position
        self.angle[env, body] = state.angle
        self.vel[env, body] = state.linear_velocity
        self.omega[env, body] = state.angular_velocity
        self._ol_dist_cache = None

    def reset_envs(self, envs, pos, angle, vel, omega) -> None:
        """Overwrite full state rows and clear impulse caches and clocks."""
        envs = np.asarray(envs)
        self.pos[envs] = pos
        self.angle[envs] = wrap_angle(angle)
        self.vel[envs] = vel
        self.omega[envs] = omega
        self.step_count[envs] = 0
        for cache in (self.gl_jn, self.gl_jt, self.ol_jn, self.ol_jt,
                      self.og_jn, self.og_jt):
            cache[envs] = 0.0
        self.joint_impulse[envs] = 0.0
        self._ol_dist_cache = None

    def snapshot(self) -> dict:
        return {k: getattr(self, k).copy() for k in
                ("pos", "angle", "vel", "omega", "step_count", "inv_m", "inv_i",
                 "obj_verts", "obj_friction", "obj_restitution", "kp", "kd",
                 "gl_jn", "gl_jt", "ol_jn", "ol_jt", "og_jn", "og_jt", "joint_impulse")}

    def restore(self, snap: dict) -> None:
        for k, v in snap.items():
            getattr(self, k)[...] = v
        self._ol_dist_cache = None

    def object_world_verts(self) -> np.ndarray:
        """(n, nv, 2) polygon vertices in world coordinates."""
        return self.pos[:, None, self.obj_body, :] + rotate(
            self.angle[:, self.obj_body, None], self.obj_verts)

    def capsule_points(self, link_ids, t_params) -> np.ndarray:
        """World positions of capsule-axis samples; returns (n, nslots, 2)."""
        lx = (np.asarray(t_params) * 2.0 - 1.0) * self.half_len[link_ids]
        a = self.angle[:, link_ids]
        offs = np.stack([np.cos(a) * lx, np.sin(a) * lx], axis=-1)
        return self.pos[:, link_ids, :] + offs

    def link_tip_position(self, link: int) -> np.ndarray:
        """Distal endpoint of a link capsule, (n, 2)."""
        return self.capsule_points(np.array([link]), np.array([1.0]))[:, 0, :]

    def link_object_distance(self, link: int, n_samples: int | None = None):
        """Min signed distance from a link capsule to the object surface.

        Negative inside (deepest sampled point); returns per-env
        (distance, witness point on the object surface).
        """
        if n_samples is None:
            d, w, _ = self.all_link_object_distances()
            return d[:, link], w[:, link]
        ts = np.linspace(0.0, 1.0, n_samples)
        ids = np.full(len(ts), link)
        pts = self.capsule_points(ids, ts)
        d, w, _ = batch_point_polygon_sdf(pts, self.object_world_verts())
        d = d - self.radius
        best = d.argmin(axis=1)
        rows = np.arange(self.n_envs)
        return d[rows, best], w[rows, best]

    def all_link_object_distances(self):
        """Per-link signed distance, witness, and realizing capsule point;
        shapes (n, nL), (n, nL, 2), (n, nL, 2). Cached per control step."""
        key = int(self.step_count.sum()) + self.n_envs
        if self._ol_dist_cache is not None and self._ol_dist_cache[0] == key:
            return self._ol_dist_cache[1]
        pts = self.capsule_points(self.ol_link, self.ol_t)
        d, w, _ = batch_point_polygon_sdf(pts, self.object_world_verts())
        d = d - self.radius
        rows = np.arange(self.n_envs)
        nL = self.n_links
        dist = np.empty((self.n_envs, nL))
        witness = np.empty((self.n_envs, nL, 2))
        point = np.empty((self.n_envs, nL, 2))
        for link in range(nL):
            cols = self.ol_slices[link]
            best = cols[d[:, cols].argmin(axis=1)]
            dist[:, link] = d[rows, best]
            witness[:, link] = w[rows, best]
            point[:, link] = pts[rows, best]
        out = (dist, witness, point)
        self._ol_dist_cache = (key, out)
        return out

    # ------------------------------------------------------------------
    # stepping

    def step(self, pd_targets: np.ndarray, external_impulses=None) -> ContactReport:
        """Advance one control step. pd_targets: (n, n_joints) radians.

        external_impulses: optional {body_index: (n, 2) N s} applied once
        at the start of the step.
        """
        cfg = self.config
        n = self.n_envs
        pd_targets = np.clip(np.asarray(pd_targets, dtype=np.float64), self.j_lo, self.j_hi)

        if external_impulses:
            for body, imp in external_impulses.items():
                self.vel[:, body] += np.asarray(imp) * self.inv_m[:, body, None]

        rep = ContactReport(
            link_object=np.zeros((n, self.n_links), dtype=bool),
            link_ground=np.zeros((n, self.n_links), dtype=bool),
            object_ground=np.zeros(n, dtype=bool),
            link_object_impulse=np.zeros((n, self.n_links)),
            link_ground_impulse=np.zeros((n, self.n_links)),
            object_ground_impulse=np.zeros(n),
        )
        self.last_torque[...] = 0.0
        self.last_qdot[...] = 0.0
        for _ in range(cfg.substeps):
            self._substep(pd_targets, rep)
        self.last_torque /= cfg.substeps
        self.last_qdot /= cfg.substeps
        self.angle[...] = wrap_angle(self.angle)
        self.step_count += 1
        self._ol_dist_cache = None

        if not (np.all(np.isfinite(self.pos)) and np.all(np.isfinite(self.vel))
                and np.all(np.isfinite(self.angle)) and np.all(np.isfinite(self.omega))):
            bad = ~(np.isfinite(self.pos).all(-1) & np.isfinite(self.vel).all(-1)
                    & np.isfinite(self.angle) & np.isfinite(self.omega))
            env, body = np.argwhere(bad)[0]
            raise SimulationDiverged(int(env), int(body))
        return rep

    def _substep(self, pd_targets, rep: ContactReport) -> None:
        cfg = self.config
        dt = cfg.sim_dt

        q = self.joint_angles()
        self.last_qdot += self.joint_velocities()
        pd_err = wrap_angle(pd_targets - q)

        self.vel[:, :, 1] -= dt * cfg.gravity * (self.inv_m > 0.0)
        np.clip(self.vel, -MAX_VELOCITY, MAX_VELOCITY, out=self.vel)
        np.clip(self.omega, -MAX_VELOCITY, MAX_VELOCITY, out=self.omega)

        groups = self._build_contacts()
        joints = self._build_joint_data()
        motor_impulse = np.zeros((self.n_envs, self.n_joints))
        self._warm_start(groups, joints)
        for _ in range(cfg.solver_iterations):
            self._solve_pd_motors(pd_err, motor_impulse, dt)
            self._solve_joints_velocity(joints)
            self._solve_joint_limits(q, dt)
            for g in groups:
                self._solve_contact_group(g, dt)
        self.last_torque += motor_impulse / dt

        pos_build = self.pos.copy()
        self.pos += dt * self.vel
        self.angle += dt * self.omega

        for _ in range(cfg.solver_iterations):
            self._position_correct_joints()
            for g in groups:
                self._position_correct_contacts(g, pos_build)

        # contact report: positive accumulated normal impulse this substep
        gl = self.gl_jn > 0
        ol = self.ol_jn > 0
        view = gl.reshape(self.n_envs, self.n_links, 2)
        rep.link_ground |= view.any(axis=2)
        rep.link_ground_impulse += self.gl_jn.reshape(self.n_envs, self.n_links, 2).sum(axis=2)
        for link in range(self.n_links):
            cols = self.ol_slices[link]
            rep.link_object[:, link] |= ol[:, cols].any(axis=1)
            rep.link_object_impulse[:, link] += self.ol_jn[:, cols].sum(axis=1)
        rep.object_ground |= (self.og_jn > 0).any(axis=1)
        rep.object_ground_impulse += self.og_jn.sum(axis=1)

    # -- constraint assembly -------------------------------------------

    def _build_contacts(self) -> list[_ContactGroup]:
        cfg = self.config
        n = self.n_envs
        groups = []

        # link vs ground: capsule endpoints against z = 0
        pts = self.capsule_points(self.gl_link, self.gl_t)
        sep = pts[:, :, 1] - self.radius
        normal = np.zeros_like(pts)
        normal[:, :, 1] = 1.0
        cp = pts
        cp[:, :, 1] -= self.radius
        groups.append(_ContactGroup(self, cp, normal, sep, None, self.gl_link,
                                    self.gl_jn, self.gl_jt,
                                    np.full(n, cfg.ground_friction),
                                    np.full(n, cfg.ground_restitution)))

        # link vs object: capsule samples against the rest-offset surface
        pts = self.capsule_points(self.ol_link, self.ol_t)
        d, w, nrm = batch_point_polygon_sdf(pts, self.object_world_verts())
        sep = d - self.radius - cfg.object_rest_offset
        groups.append(_ContactGroup(self, w, nrm, sep, self.obj_body, self.ol_link,
                                    self.ol_jn, self.ol_jt,
                                    self.obj_friction, self.obj_restitution))

        # object vs ground: polygon vertices against z = 0
        verts = self.object_world_verts()
        sep = verts[:, :, 1] - cfg.object_rest_offset
        normal = np.zeros_like(verts)
        normal[:, :, 1] = 1.0
        groups.append(_ContactGroup(self, verts, normal, sep, None,
                                    np.full(self.nv, self.obj_body),
                                    self.og_jn, self.og_jt,
                                    np.sqrt(self.obj_friction * cfg.ground_friction),
                                    np.maximum(self.obj_restitution, cfg.ground_restitution)))
        return groups

    def _build_joint_data(self) -> dict:
        ra = rotate(self.angle[:, self.jp], self.j_pa)
        rb = rotate(self.angle[:, self.jc], self.j_ca)
        inv_ma = self.inv_m[:, self.jp]
        inv_mb = self.inv_m[:, self.jc]
        inv_ia = self.inv_i[:, self.jp]
        inv_ib = self.inv_i[:, self.jc]
        k11 = inv_ma + inv_mb + inv_ia * ra[..., 1] ** 2 + inv_ib * rb[..., 1] ** 2
        k12 = -inv_ia * ra[..., 0] * ra[..., 1] - inv_ib * rb[..., 0] * rb[..., 1]
        k22 = inv_ma + inv_mb + inv_ia * ra[..., 0] ** 2 + inv_ib * rb[..., 0] ** 2
        det = np.maximum(k11 * k22 - k12 * k12, 1e-12)
        return dict(rax=ra[..., 0], raz=ra[..., 1], rbx=rb[..., 0], rbz=rb[..., 1],
                    k11=k11, k12=k12, k22=k22, det=det)

    def _apply_joint_impulse(self, j: int, d: dict, px, pz) -> None:
        p, c = self.jp[j], self.jc[j]
        self.vel[:, p, 0] -= self.inv_m[:, p] * px
        self.vel[:, p, 1] -= self.inv_m[:, p] * pz
        self.omega[:, p] -= self.inv_i[:, p] * (d["rax"][:, j] * pz - d["raz"][:, j] * px)
        self.vel[:, c, 0] += self.inv_m[:, c] * px
        self.vel[:, c, 1] += self.inv_m[:, c] * pz
        self.omega[:, c] += self.inv_i[:, c] * (d["rbx"][:, j] * pz - d["rbz"][:, j] * px)

    def _apply_contact_impulse(self, g: _ContactGroup, i: int, px, pz) -> None:
        b = g.body_b[i]
        self.vel[:, b, 0] += self.inv_m[:, b] * px
        self.vel[:, b, 1] += self.inv_m[:, b] * pz
        self.omega[:, b] += self.inv_i[:, b] * (g.rbx[:, i] * pz - g.rbz[:, i] * px)
        if g.body_a is not None:
            a = g.body_a
            self.vel[:, a, 0] -= self.inv_m[:, a] * px
            self.vel[:, a, 1] -= self.inv_m[:, a] * pz
            self.omega[:, a] -= self.inv_i[:, a] * (g.rax[:, i] * pz - g.raz[:, i] * px)

    def _warm_start(self, groups, joints) -> None:
        for j in range(self.n_joints):
            self._apply_joint_impulse(j, joints, self.joint_impulse[:, j, 0],
                                      self.joint_impulse[:, j, 1])
        for g in groups:
            for i in range(g.nslots):
                if not g.any_active[i]:
                    continue
                px = g.jn[:, i] * g.nx[:, i] + g.jt[:, i] * g.tx[:, i]
                pz = g.jn[:, i] * g.nz[:, i] + g.jt[:, i] * g.tz[:, i]
                self._apply_contact_impulse(g, i, px, pz)

    def _solve_pd_motors(self, pd_err, motor_impulse, dt: float) -> None:
        """PD actuation as implicit angular motor impulses: solves
        tau = kp*(err - dt*qdot') - kd*qdot' at end-of-substep velocity,
        clamped to the torque limit over the substep."""
        for j in range(self.n_joints):
            p, c = self.jp[j], self.jc[j]
            inv_red = self.inv_i[:, p] + self.inv_i[:, c]
            kp, kd = self.kp[:, j], self.kd[:, j]
            soft = dt * (kd + dt * kp)
            lam_acc = motor_impulse[:, j]
            w_rel = self.omega[:, c] - self.omega[:, p]
            lam = (dt * kp * pd_err[:, j] - soft * (w_rel - inv_red * lam_acc)) \
                / (1.0 + soft * inv_red)
            cap = self.tau_max[j] * dt
            np.clip(lam, -cap, cap, out=lam)
            d = lam - lam_acc
            motor_impulse[:, j] = lam
            self.omega[:, c] += self.inv_i[:, c] * d
            self.omega[:, p] -= self.inv_i[:, p] * d

    def _solve_joints_velocity(self, d: dict) -> None:
        for j in range(self.n_joints):
            p, c = self.jp[j], self.jc[j]
            rax, raz = d["rax"][:, j], d["raz"][:, j]
            rbx, rbz = d["rbx"][:, j], d["rbz"][:, j]
            vx = (self.vel[:, c, 0] - self.omega[:, c] * rbz) \
                - (self.vel[:, p, 0] - self.omega[:, p] * raz)
            vz = (self.vel[:, c, 1] + self.omega[:, c] * rbx) \
                - (self.vel[:, p, 1] + self.omega[:, p] * rax)
            k11, k12, k22, det = d["k11"][:, j], d["k12"][:, j], d["k22"][:, j], d["det"][:, j]
            px = -(k22 * vx - k12 * vz) / det
            pz = -(k11 * vz - k12 * vx) / det
            self.joint_impulse[:, j, 0] += px
            self.joint_impulse[:, j, 1] += pz
            self._apply_joint_impulse(j, d, px, pz)

    def _solve_joint_limits(self, q, dt: float) -> None:
        beta = BAUMGARTE
        for j in range(self.n_joints):
            p, c = self.jp[j], self.jc[j]
            lo_gap = q[:, j] - self.j_lo[j]
            hi_gap = self.j_hi[j] - q[:, j]
            lo_viol = lo_gap < 0
            hi_viol = hi_gap < 0
            if not (lo_viol.any() or hi_viol.any()):
                continue
            k = self.inv_i[:, p] + self.inv_i[:, c]
            qd = self.omega[:, c] - self.omega[:, p]
            if lo_viol.any():
                lam = np.where(lo_viol, np.maximum(0.0, (-beta / dt * lo_gap - qd) / k), 0.0)
                self.omega[:, c] += self.inv_i[:, c] * lam
                self.omega[:, p] -= self.inv_i[:, p] * lam
                qd = self.omega[:, c] - self.omega[:, p]
            if hi_viol.any():
                lam = np.where(hi_viol, np.maximum(0.0, (-beta / dt * hi_gap + qd) / k), 0.0)
                self.omega[:, c] -= self.inv_i[:, c] * lam
                self.omega[:, p] += self.inv_i[:, p] * lam

    def _solve_contact_group(self, g: _ContactGroup, dt: float) -> None:
        beta = BAUMGARTE
        vel, omega = self.vel, self.omega
        inv_m, inv_i = self.inv_m, self.inv_i
        has_a = g.body_a is not None
        if has_a:
            a = g.body_a
        for i in range(g.nslots):
            if not g.any_active[i]:
                continue
            act = g.active[:, i]
            nx, nz = g.nx[:, i], g.nz[:, i]
            rbx, rbz = g.rbx[:, i], g.rbz[:, i]
            b = g.body_b[i]
            vx = vel[:, b, 0] - omega[:, b] * rbz
            vz = vel[:, b, 1] + omega[:, b] * rbx
            if has_a:
                rax, raz = g.rax[:, i], g.raz[:, i]
                vx = vx - (vel[:, a, 0] - omega[:, a] * raz)
                vz = vz - (vel[:, a, 1] + omega[:, a] * rax)
            vn = vx * nx + vz * nz
            sep = g.sep[:, i]
            # block approach (speculative for positive gaps); penetration is
            # resolved positionally to avoid injecting momentum
            bias = np.where(sep < 0.0, 0.0, -sep / dt)
            target = np.maximum(bias, g.rest_target[:, i])
            dlam = np.where(act, (target - vn) / g.kn[:, i], 0.0)
            new = np.maximum(0.0, g.jn[:, i] + dlam)
            dlam = new - g.jn[:, i]
            g.jn[:, i] = new
            self._apply_contact_impulse(g, i, dlam * nx, dlam * nz)

            tx, tz = g.tx[:, i], g.tz[:, i]
            vx = vel[:, b, 0] - omega[:, b] * rbz
            vz = vel[:, b, 1] + omega[:, b] * rbx
            if has_a:
                vx = vx - (vel[:, a, 0] - omega[:, a] * raz)
                vz = vz - (vel[:, a, 1] + omega[:, a] * rax)
            vt = vx * tx + vz * tz
            dlt = np.where(act, -vt / g.kt[:, i], 0.0)
            bound = g.friction * g.jn[:, i]
            newt = np.clip(g.jt[:, i] + dlt, -bound, bound)
            dlt = newt - g.jt[:, i]
            g.jt[:, i] = newt
            self._apply_contact_impulse(g, i, dlt * tx, dlt * tz)

    def _position_correct_joints(self) -> None:
        # anchors and effective masses refreshed once per pass, applied
        # sequentially joint by joint
        d = self._build_joint_data()
        pa_w = self.pos[:, self.jp, :]
        ca_w = self.pos[:, self.jc, :]
        cx = (ca_w[..., 0] + d["rbx"]) - (pa_w[..., 0] + d["rax"])
        cz = (ca_w[..., 1] + d["rbz"]) - (pa_w[..., 1] + d["raz"])
        for j in range(self.n_joints):
            p, c = self.jp[j], self.jc[j]
            px = -(d["k22"][:, j] * cx[:, j] - d["k12"][:, j] * cz[:, j]) / d["det"][:, j]
            pz = -(d["k11"][:, j] * cz[:, j] - d["k12"][:, j] * cx[:, j]) / d["det"][:, j]
            inv_ma, inv_mb = self.inv_m[:, p], self.inv_m[:, c]
            self.pos[:, p, 0] -= inv_ma * px
            self.pos[:, p, 1] -= inv_ma * pz
            self.angle[:, p] -= self.inv_i[:, p] * (d["rax"][:, j] * pz - d["raz"][:, j] * px)
            self.pos[:, c, 0] += inv_mb * px
            self.pos[:, c, 1] += inv_mb * pz
            self.angle[:, c] += self.inv_i[:, c] * (d["rbx"][:, j] * pz - d["rbz"][:, j] * px)


def step(world: SimWorld, pd_targets, external_impulses=None):
    """Advance `world` by one control step; returns (world, ContactReport)."""
    report = world.step(pd_targets, external_impulses)
    return world, report
