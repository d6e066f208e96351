"""Independent certification of candidate invariant families.

Containment in the polytopic safe sets is checked analytically through the
ellipsoid support function.  The per-transition inclusion is checked on
deterministic boundary samples: for algebraic systems through the
closed-form image-membership test, for control systems by solving the small
box-constrained placement problem per sample.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from .geometry import EllipsoidCQ, image_membership
from .model import (Box, HybridAlgebraicSystem, HybridControlSystem,
                    ValidationError)


@dataclass
class TransitionCheck:
    source: str
    label: str
    target: str
    samples: int
    worst_residual: float
    failures: list[NDArray] = field(default_factory=list)


@dataclass
class VerificationReport:
    # (node id, facet index) -> margin; negative means violated.
    containment: dict[tuple[str, int], float] = field(default_factory=dict)
    transitions: list[TransitionCheck] = field(default_factory=list)
    tol: float = 1e-6

    @property
    def worst_margin(self) -> float:
        return min(self.containment.values(), default=0.0)

    @property
    def worst_residual(self) -> float:
        return max((t.worst_residual for t in self.transitions), default=0.0)

    @property
    def verdict(self) -> str:
        ok = self.worst_margin >= -self.tol and self.worst_residual <= self.tol
        return "PASS" if ok else "FAIL"

    def to_json(self) -> dict:
        return {
            "verdict": self.verdict,
            "tol": self.tol,
            "worst_containment_margin": self.worst_margin,
            "worst_invariance_residual": self.worst_residual,
            "containment": [
                {"node": nid, "facet": i, "margin": m}
                for (nid, i), m in sorted(self.containment.items())
            ],
            "transitions": [
                {"from": t.source, "label": t.label, "to": t.target,
                 "samples": t.samples, "worst_residual": t.worst_residual,
                 "failures": [x.tolist() for x in t.failures[:10]]}
                for t in self.transitions
            ],
        }


def _check_dims(nodes, sets) -> None:
    for nid, n in nodes.items():
        if nid not in sets:
            raise ValidationError(f"no candidate set for node {nid}")
        if sets[nid].dim != n.state_dim:
            raise ValidationError(
                f"set for node {nid} has dimension {sets[nid].dim}, node has {n.state_dim}")


def _containment(nodes, sets, report: VerificationReport) -> None:
    for nid, n in sorted(nodes.items()):
        e = sets[nid]
        for i in range(n.safe_set.nfacets):
            report.containment[(nid, i)] = float(n.safe_set.b[i] - e.support(n.safe_set.A[i]))


def verify_has(sys: HybridAlgebraicSystem, sets: dict[str, EllipsoidCQ],
               samples: int = 1000, tol: float = 1e-6, seed: int = 0) -> VerificationReport:
    """Check invariance of per-node ellipsoids for an algebraic system."""
    _check_dims(sys.nodes, sets)
    report = VerificationReport(tol=tol)
    _containment(sys.nodes, sets, report)
    for t in sys.transitions:
        src, tgt = sets[t.source], sets[t.target]
        check = TransitionCheck(source=t.source, label=t.label, target=t.target,
                                samples=samples, worst_residual=0.0)
        for x in src.boundary_points(samples, seed=seed):
            _, value = image_membership(t.E, tgt, t.A @ x + t.c)
            residual = max(0.0, value - 1.0)
            if residual > check.worst_residual:
                check.worst_residual = residual
            if residual > tol:
                check.failures.append(x)
        report.transitions.append(check)
    return report


def _box_quadratic_min(B: NDArray, w: NDArray, Q: NDArray, box: Box | None,
                       sweeps: int = 50) -> float:
    """min over u (in the box, if any) of (B u + w)^T Q (B u + w).

    Closed-form unconstrained minimizer, clipped to the box and polished by
    coordinate-descent sweeps; exact when unconstrained, and accurate to
    roundoff for the small strictly convex problems this is used on."""
    m = B.shape[1]
    if m == 0:
        return float(w @ Q @ w)
    G = B.T @ Q @ B
    g = B.T @ Q @ w
    u = np.linalg.lstsq(G, -g, rcond=None)[0]
    if box is None:
        r = B @ u + w
        return float(r @ Q @ r)
    u = np.clip(u, box.lower, box.upper)
    diag = np.diag(G)
    for _ in range(sweeps):
        for j in range(m):
            if diag[j] <= 0:
                continue
            grad_j = 2.0 * (G[j] @ u + g[j])
            u[j] = np.clip(u[j] - grad_j / (2.0 * diag[j]), box.lower[j], box.upper[j])
    r = B @ u + w
    return float(r @ Q @ r)


def verify_hcs(sys: HybridControlSystem, sets: dict[str, EllipsoidCQ],
               samples: int = 1000, tol: float = 1e-6, seed: int = 0) -> VerificationReport:
    """Check controlled invariance of per-node ellipsoids for a control system.

    For each boundary sample and transition, the best admissible input is
    found by the clipped closed form plus coordinate descent over the box."""
    _check_dims(sys.nodes, sets)
    report = VerificationReport(tol=tol)
    _containment(sys.nodes, sets, report)
    for t in sys.transitions:
        src = sets[t.source]
        tgt = sets[t.target]
        box = sys.nodes[t.source].input_set
        check = TransitionCheck(source=t.source, label=t.label, target=t.target,
                                samples=samples, worst_residual=0.0)
        for x in src.boundary_points(samples, seed=seed):
            w = t.A @ x + t.c - tgt.c
            value = _box_quadratic_min(t.B, w, tgt.Q, box)
            residual = max(0.0, value - 1.0)
            if residual > check.worst_residual:
                check.worst_residual = residual
            if residual > tol:
                check.failures.append(x)
        report.transitions.append(check)
    return report
