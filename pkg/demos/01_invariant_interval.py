"""A first invariant set, end to end on a one-dimensional system.

The system is the self-loop x+ = a x on the safe interval [-1, 1].  For
|a| < 1 every subinterval around the origin is invariant and the largest
one is [-1, 1] itself; for |a| > 1 only the origin survives, so the
synthesis program (which insists on a full-dimensional ellipsoid) must
report infeasibility.  This script checks both answers and then walks the
same machinery through a slightly less symmetric example.
"""

import numpy as np

import hybridinv as hv
from hybridinv.model import (AlgebraicTransition, HybridAlgebraicSystem, Node,
                             Polytope)


def self_loop(a, c=0.0, interior=0.0):
    node = Node(id="q", state_dim=1, input_dim=0,
                safe_set=Polytope.from_box([-1.0], [1.0]),
                interior_point=np.array([interior]))
    t = AlgebraicTransition(source="q", target="q", label="d",
                            A=np.array([[a]]), E=np.eye(1), c=np.array([c]))
    return HybridAlgebraicSystem(nodes={"q": node}, transitions=[t])


def describe(sets, report):
    if sets is None:
        print(f"  status: {report.status}")
        return
    e = sets["q"]
    r = 1.0 / np.sqrt(e.Q[0, 0])
    print(f"  status: {report.status} (solve {report.solve_seconds:.3f}s)")
    print(f"  interval: [{e.c[0] - r:+.6f}, {e.c[0] + r:+.6f}]")
    print(f"  lambda:   {report.node_lambda['q']:.6f} (Theorem-level normalization is 1)")


print("Contracting map x+ = 0.5 x on [-1, 1]")
describe(*hv.synthesize(self_loop(0.5)))

print("\nExpanding map x+ = 2 x on [-1, 1]")
describe(*hv.synthesize(self_loop(2.0)))

# An affine loop with a fixed point off center: x+ = 0.5 x + 0.25 has the
# fixed point 0.5, and the largest invariant interval inside [-1, 1] is
# [0, 1] (its endpoints map to 0.25 and 0.75).
print("\nAffine map x+ = 0.5 x + 0.25 on [-1, 1]")
describe(*hv.synthesize(self_loop(0.5, c=0.25, interior=0.5)))

# Certify the last family independently of the solver.
sets, _ = hv.synthesize(self_loop(0.5, c=0.25, interior=0.5))
report = hv.verify_has(self_loop(0.5, c=0.25, interior=0.5), sets, samples=1000)
print(f"\nIndependent certification: {report.verdict} "
      f"(worst containment margin {report.worst_margin:.2e}, "
      f"worst invariance residual {report.worst_residual:.2e})")
