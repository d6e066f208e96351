"""Ellipsoidal controlled invariant sets for discrete-time affine hybrid
systems, computed by dualizing the invariance condition into a single
conic program, plus a safety-guaranteed receding-horizon controller."""

from .geometry import (DualQuadraticCone, EllipsoidCQ, EllipsoidQuad,
                       cq_to_quad, dual_quadratic, homogenize, householder,
                       image_membership, quad_to_cq, recover_primal)
from .model import (Box, HybridAlgebraicSystem, HybridControlSystem, Node,
                    Polytope, Transition, load_problem, load_sets,
                    save_problem, save_sets)
from .reduce import ReductionTrace, lift_inputs, orthogonal_complement, to_algebraic
from .synth import build_program, extract, solve, synthesize
from .verify import verify_has, verify_hcs

__all__ = [
    "Box", "DualQuadraticCone", "EllipsoidCQ", "EllipsoidQuad",
    "HybridAlgebraicSystem", "HybridControlSystem", "Node", "Polytope",
    "ReductionTrace", "Transition", "build_program", "cq_to_quad",
    "dual_quadratic", "extract", "homogenize", "householder",
    "image_membership", "lift_inputs", "load_problem", "load_sets",
    "orthogonal_complement", "quad_to_cq", "recover_primal", "save_problem",
    "save_sets", "solve", "synthesize", "to_algebraic", "verify_has",
    "verify_hcs",
]

__version__ = "0.1.0"
