"""Maximum-volume ellipsoidal invariant sets via one conic solve.

For every node q we search a quadratic (D_q, d_q, delta_q) describing, in
coordinates where the known interior point is reflected onto the lifting
axis, the dual cone of the lifted candidate ellipsoid.  Constraints:

  * a convexity/normalization block per node,
  * one linear-matrix inequality per transition (the S-procedure applied
    to the dualized inclusion, with the transition multiplier fixed to 1),
  * one linear inequality per safe-set facet,
  * a strict-interior inequality per node whose safe set is unbounded,

and the objective maximizes sum(log det D_q).  At the optimum the scale
lambda_q = d_q^T D_q^{-1} d_q - delta_q equals 1, so det D_q is exactly
the shape determinant of the recovered ellipsoid.
"""

from __future__ import annotations

import os
import time
from dataclasses import dataclass, field

import cvxpy as cp
import numpy as np
from numpy.typing import NDArray
from scipy.optimize import linprog

from . import geometry
from .geometry import EllipsoidCQ, householder, homogenize
from .model import HybridAlgebraicSystem, Polytope


class SynthesisError(Exception):
    pass


class MissingInteriorPoint(SynthesisError):
    pass


DEFAULT_SOLVER = os.environ.get("HYBRIDINV_SOLVER", "CLARABEL")

_SOLVER_OPTS = {
    "CLARABEL": {"tol_gap_abs": 1e-8, "tol_gap_rel": 1e-8, "tol_feas": 1e-8},
    "SCS": {"eps": 1e-9, "max_iters": 200_000},
}


@dataclass
class Program1Instance:
    """Assembled conic program plus the data needed to read a solution back.

    The program is posed in per-node normalized coordinates x = S z + m
    (S diagonal from the safe set's bounding box) to keep the conic solve
    well conditioned; ``scalings`` maps each node to its (diag(S), m)."""

    problem: cp.Problem
    variables: dict[str, tuple[cp.Variable, cp.Variable, cp.Variable]]
    householders: dict[str, NDArray]
    interior: dict[str, NDArray]
    node_dims: dict[str, int]
    scalings: dict[str, tuple[NDArray, NDArray]] = field(default_factory=dict)
    counts: dict[str, int] = field(default_factory=dict)


@dataclass
class SynthesisReport:
    status: str
    objective: float | None
    node_lambda: dict[str, float]
    build_seconds: float
    solve_seconds: float
    extract_seconds: float
    sproc_residual: float | None = None
    solver: str = DEFAULT_SOLVER

    def to_json(self) -> dict:
        return {
            "status": self.status,
            "objective": self.objective,
            "node_lambda": self.node_lambda,
            "timing_seconds": {"build": self.build_seconds, "solve": self.solve_seconds,
                               "extract": self.extract_seconds},
            "sproc_residual": self.sproc_residual,
            "solver": self.solver,
        }


def bounding_box(P: Polytope) -> tuple[NDArray, NDArray]:
    """Per-coordinate extent of the polytope, +-inf where it recedes."""
    lo = np.full(P.dim, -np.inf)
    hi = np.full(P.dim, np.inf)
    if P.nfacets == 0:
        return lo, hi
    for i in range(P.dim):
        for sign in (1.0, -1.0):
            cvec = np.zeros(P.dim)
            cvec[i] = -sign
            res = linprog(cvec, A_ub=P.A, b_ub=P.b, bounds=(None, None), method="highs")
            if res.status == 3:  # unbounded in this direction
                continue
            if not res.success:
                raise SynthesisError(f"bounding-box probe failed: {res.message}")
            if sign > 0:
                hi[i] = -res.fun
            else:
                lo[i] = res.fun
    return lo, hi


def polytope_is_bounded(P: Polytope) -> bool:
    """A polytope is bounded iff no coordinate direction recedes to infinity."""
    if P.nfacets == 0:
        return P.dim == 0
    lo, hi = bounding_box(P)
    return bool(np.all(np.isfinite(lo)) and np.all(np.isfinite(hi)))


def _node_scaling(P: Polytope) -> tuple[NDArray, NDArray, bool]:
    """(diag scale, offset, bounded flag) normalizing the safe set's box to
    roughly [-1, 1] per coordinate; unbounded coordinates stay untouched."""
    lo, hi = bounding_box(P)
    finite = np.isfinite(lo) & np.isfinite(hi)
    s = np.ones(P.dim)
    m = np.zeros(P.dim)
    width = hi - lo
    usable = finite & (width > 0)
    s[usable] = 0.5 * width[usable]
    m[usable] = 0.5 * (hi + lo)[usable]
    return s, m, bool(np.all(finite))


def _sym_embed(D: cp.Variable, d: cp.Variable, corner: cp.Expression) -> cp.Expression:
    n = D.shape[0]
    col = cp.reshape(d, (n, 1), order="C")
    row = cp.reshape(d, (1, n), order="C")
    return cp.bmat([[D, col], [row, cp.reshape(corner, (1, 1), order="C")]])


def _scaled_relation(t, scalings) -> tuple[NDArray, NDArray]:
    """Homogenized (RA, RE) of the reset relation rewritten in the source
    and target nodes' normalized coordinates x = S z + m."""
    s_src, m_src = scalings[t.source]
    s_tgt, m_tgt = scalings[t.target]
    A = t.A * s_src[None, :]
    E = t.E * s_tgt[None, :]
    c = t.c + t.A @ m_src - t.E @ m_tgt
    return homogenize(A, c), homogenize(E, np.zeros(E.shape[0]))


def build_program(sys: HybridAlgebraicSystem,
                  interior: dict[str, NDArray] | None = None,
                  eps_psd: float = 1e-6,
                  eps_int: float = 1e-6,
                  multiplier: float = 1.0) -> Program1Instance:
    """Assemble the invariant-set program for an algebraic hybrid system.

    ``interior`` overrides/augments the per-node interior points stored on
    the nodes; every node must end up with one strictly inside its safe set.
    ``multiplier`` is the fixed transition multiplier (free multipliers would
    make the transition blocks bilinear; 1.0 is the value the optimum is
    normalized to anyway)."""
    t0 = time.perf_counter()
    hs: dict[str, NDArray] = {}
    for nid, n in sys.nodes.items():
        h = None if interior is None else interior.get(nid)
        if h is None:
            h = n.interior_point
        if h is None:
            raise MissingInteriorPoint(
                f"node {nid} has no interior point; synthesis needs one per node")
        h = np.asarray(h, dtype=float).reshape(-1)
        if np.any(n.safe_set.A @ h >= n.safe_set.b):
            raise MissingInteriorPoint(f"node {nid}: interior point is not strictly inside the safe set")
        hs[nid] = h

    variables = {}
    householders = {}
    scalings = {}
    M_expr = {}
    constraints = []
    counts = {"convexity_blocks": 0, "transition_blocks": 0,
              "facet_inequalities": 0, "interior_inequalities": 0}
    obj = 0
    for nid, n in sorted(sys.nodes.items()):
        dim = n.state_dim
        D = cp.Variable((dim, dim), symmetric=True, name=f"D[{nid}]")
        d = cp.Variable(dim, name=f"d[{nid}]")
        delta = cp.Variable(name=f"delta[{nid}]")
        variables[nid] = (D, d, delta)
        # Pose the node in normalized coordinates x = S z + m so safe sets
        # of very different physical extents condition the solver equally.
        s, m, bounded = _node_scaling(n.safe_set)
        scalings[nid] = (s, m)
        H = householder((hs[nid] - m) / s)
        householders[nid] = H
        M_expr[nid] = H @ _sym_embed(D, d, delta) @ H

        # Absolute floor: a trace-relative floor would self-scale to zero and
        # admit the degenerate D -> 0 family (a single invariant point).
        block = _sym_embed(D, d, delta + 1)
        constraints.append(block >> eps_psd * np.eye(dim + 1))
        counts["convexity_blocks"] += 1

        for i in range(n.safe_set.nfacets):
            a = n.safe_set.A[i]
            v = np.concatenate([-(s * a), [n.safe_set.b[i] - a @ m]])
            constraints.append(cp.quad_form(v, M_expr[nid]) <= 0)
            counts["facet_inequalities"] += 1

        if not bounded:
            ez = np.zeros(dim + 1)
            ez[dim] = 1.0
            constraints.append(cp.quad_form(ez, M_expr[nid])
                               <= -eps_int * cp.trace(D) / dim)
            counts["interior_inequalities"] += 1

        obj = obj + cp.log_det(D)

    for t in sys.transitions:
        RA, RE = _scaled_relation(t, scalings)
        lhs = multiplier * (RE @ M_expr[t.target] @ RE.T) - RA @ M_expr[t.source] @ RA.T
        if lhs.shape == (1, 1):
            constraints.append(lhs[0, 0] >= 0)
        else:
            constraints.append(lhs >> 0)
        counts["transition_blocks"] += 1

    problem = cp.Problem(cp.Maximize(obj), constraints)
    inst = Program1Instance(problem=problem, variables=variables,
                            householders=householders, interior=hs,
                            node_dims={k: n.state_dim for k, n in sys.nodes.items()},
                            scalings=scalings, counts=counts)
    inst.counts["build_seconds"] = time.perf_counter() - t0
    return inst


def solve(inst: Program1Instance, solver: str = DEFAULT_SOLVER,
          solver_opts: dict | None = None
          ) -> tuple[dict[str, tuple[NDArray, NDArray, float]] | None, SynthesisReport]:
    """Run the conic solver; returns the per-node quadratics and a report.

    On infeasibility the quadratics are None and the report status says so;
    this is an expected outcome, not an exception."""
    opts = dict(_SOLVER_OPTS.get(solver, {}))
    if solver_opts:
        opts.update(solver_opts)
    t0 = time.perf_counter()
    try:
        inst.problem.solve(solver=solver, **opts)
    except cp.error.SolverError as exc:
        raise SynthesisError(f"solver failure: {exc}") from exc
    solve_s = time.perf_counter() - t0

    status = inst.problem.status
    if status not in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE):
        return None, SynthesisReport(
            status=status, objective=None, node_lambda={},
            build_seconds=inst.counts.get("build_seconds", 0.0),
            solve_seconds=solve_s, extract_seconds=0.0, solver=solver)

    solution = {}
    lams = {}
    for nid, (D, d, delta) in inst.variables.items():
        Dv = 0.5 * (D.value + D.value.T)
        dv = np.asarray(d.value, dtype=float).reshape(-1)
        solution[nid] = (Dv, dv, float(delta.value))
        lams[nid] = float(dv @ np.linalg.solve(Dv, dv) - delta.value)
    report = SynthesisReport(
        status=status, objective=float(inst.problem.value), node_lambda=lams,
        build_seconds=inst.counts.get("build_seconds", 0.0),
        solve_seconds=solve_s, extract_seconds=0.0, solver=solver)
    return solution, report


def extract(solution: dict[str, tuple[NDArray, NDArray, float]],
            inst: Program1Instance,
            sys: HybridAlgebraicSystem | None = None,
            containment_tol: float = 1e-6) -> dict[str, EllipsoidCQ]:
    """Turn solved quadratics into per-node ellipsoids.

    Undoes the interior-point reflection, inverts each dual cone matrix and
    converts the resulting quadratic.  When the system is supplied, each
    ellipsoid is checked analytically against its safe-set facets."""
    sets = {}
    for nid, (D, d, delta) in solution.items():
        H = inst.householders[nid]
        n = D.shape[0]
        B = np.zeros((n + 1, n + 1))
        B[:n, :n] = D
        B[:n, n] = d
        B[n, :n] = d
        B[n, n] = delta
        M = H @ B @ H
        try:
            cone = geometry.DualQuadraticCone(M=M)
            e_z = geometry.recover_primal(cone)
        except geometry.GeometryError as exc:
            raise type(exc)(f"node {nid}: {exc}") from exc
        # Map back from the node's normalized coordinates x = S z + m.
        s, m = inst.scalings[nid]
        Sinv = np.diag(1.0 / s)
        sets[nid] = geometry.EllipsoidCQ(Q=Sinv @ e_z.Q @ Sinv, c=s * e_z.c + m)
    if sys is not None:
        for nid, e in sets.items():
            P = sys.nodes[nid].safe_set
            for i in range(P.nfacets):
                s = e.support(P.A[i])
                if s > P.b[i] + containment_tol:
                    raise SynthesisError(
                        f"node {nid}: facet {i} violated by extracted set "
                        f"(support {s} > {P.b[i]})")
    return sets


def sproc_residual(sys: HybridAlgebraicSystem,
                   solution: dict[str, tuple[NDArray, NDArray, float]],
                   inst: Program1Instance,
                   samples: int = 10_000, seed: int = 0) -> float:
    """Worst sampled violation of the per-transition quadratic comparison."""
    rng = np.random.default_rng(seed)
    Ms = {}
    for nid, (D, d, delta) in solution.items():
        H = inst.householders[nid]
        n = D.shape[0]
        B = np.block([[D, d[:, None]], [d[None, :], np.array([[delta]])]])
        Ms[nid] = H @ B @ H
    worst = 0.0
    for t in sys.transitions:
        RA, RE = _scaled_relation(t, inst.scalings)
        Y = rng.standard_normal((samples, RA.shape[0]))
        lhs = np.einsum("ij,jk,ik->i", Y @ RA, Ms[t.source], Y @ RA)
        rhs = np.einsum("ij,jk,ik->i", Y @ RE, Ms[t.target], Y @ RE)
        viol = (lhs - rhs) / np.maximum(1.0, np.einsum("ij,ij->i", Y, Y))
        worst = max(worst, float(viol.max()))
    return worst


def synthesize(has: HybridAlgebraicSystem,
               interior: dict[str, NDArray] | None = None,
               eps_psd: float = 1e-6, eps_int: float = 1e-6,
               solver: str = DEFAULT_SOLVER, solver_opts: dict | None = None,
               residual_samples: int = 0,
               multiplier_grid: tuple[float, ...] | None = None
               ) -> tuple[dict[str, EllipsoidCQ] | None, SynthesisReport]:
    """Build, solve and extract in one call.

    ``multiplier_grid`` optionally sweeps the fixed transition multiplier
    over the given values and keeps the best feasible objective (off by
    default; the default multiplier 1.0 is used otherwise)."""
    best = None
    for mult in (multiplier_grid or (1.0,)):
        inst = build_program(has, interior=interior, eps_psd=eps_psd,
                             eps_int=eps_int, multiplier=mult)
        solution, report = solve(inst, solver=solver, solver_opts=solver_opts)
        if solution is not None and (best is None or report.objective > best[2].objective):
            best = (inst, solution, report)
        elif best is None:
            best = (inst, solution, report)
    inst, solution, report = best
    if solution is None:
        return None, report
    t0 = time.perf_counter()
    sets = extract(solution, inst, sys=has)
    report.extract_seconds = time.perf_counter() - t0
    if residual_samples:
        report.sproc_residual = sproc_residual(has, solution, inst, samples=residual_samples)
    return sets, report
