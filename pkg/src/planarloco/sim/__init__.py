from .geometry import capsule_sample_params, point_polygon_sdf, rotate, wrap_angle
from .models import (DEFAULT_STAND_HEIGHT, GRIPPER_LINKS, JOINT_NAMES, LINK_NAMES,
                     PELVIS, arm_ik, box_object, build_stance, default_stand_q,
                     fk_link_poses, fk_link_velocities, leg_ik, load_model_file,
                     planar_h9, save_model_file, two_link_ik)
from .randomize import (PerturbConfig, RandomizeRanges, apply_perturbation,
                        load_env_dynamics, randomize_dynamics)
from .types import (BodyState, ContactReport, JointSpec, LinkSpec, ModelError,
                    ObjectModel, RobotModel, SimConfig, SimulationDiverged)
from .world import SimWorld, pd_torque, step

__all__ = [
    "wrap_angle", "rotate", "point_polygon_sdf", "capsule_sample_params",
    "BodyState", "LinkSpec", "JointSpec", "RobotModel", "ObjectModel", "SimConfig",
    "ContactReport", "ModelError", "SimulationDiverged",
    "SimWorld", "step", "pd_torque",
    "planar_h9", "box_object", "fk_link_poses", "fk_link_velocities",
    "default_stand_q", "build_stance", "leg_ik", "arm_ik", "two_link_ik",
    "DEFAULT_STAND_HEIGHT", "load_model_file", "save_model_file",
    "LINK_NAMES", "JOINT_NAMES", "GRIPPER_LINKS", "PELVIS",
    "apply_perturbation", "randomize_dynamics", "load_env_dynamics",
    "PerturbConfig", "RandomizeRanges",
]
