"""Desk-scale planar loco-manipulation control stack.

A 2-D rigid-body simulator with an articulated robot and a rigid object,
a procedural reference-clip generator, a three-stage training pipeline
(full-reference imitation expert, masked variational distillation, RL
post-training), an evaluation harness, and a live steering service.
"""

__version__ = "0.1.0"
