"""Truck-platoon cruise-control benchmark.

A truck (mass m0, speed v0) pulls M trailers (mass m each, speeds v_i)
through spring/damper couplings with elongations d_i.  The scalar input u
accelerates the truck.  Speed limits arrive as events a/b/c and give the
platoon a fixed number of sampling periods to comply; d means no new limit.
State ordering: x = (d_1..d_M, v_0..v_M).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray
from scipy.linalg import expm

from .model import Box, HybridControlSystem, Node, Polytope, Transition

LIMIT_LABELS = ("a", "b", "c")
NO_EVENT_LABEL = "d"


@dataclass(frozen=True)
class CruiseParams:
    trailers: int = 1
    truck_mass: float = 500.0       # kg
    trailer_mass: float = 1000.0    # kg
    damper: float = 4600.0          # N s / m
    spring: float = 4500.0          # N / kg (numeric value used as-is)
    speed_limits: dict = field(default_factory=lambda: {"a": 15.6, "b": 24.5, "c": 29.5})
    d_min: float = -0.5
    d_max: float = 0.5
    v_min: float = 5.0
    v_max: float = 35.0
    u_min: float = -4.0
    u_max: float = 4.0
    period: float = 0.4             # s

    def __post_init__(self):
        if self.trailers < 1:
            raise ValueError("at least one trailer is required")

    @property
    def state_dim(self) -> int:
        return 2 * self.trailers + 1


def continuous_matrices(p: CruiseParams) -> tuple[NDArray, NDArray]:
    """Continuous-time dynamics dx/dt = A x + B u."""
    M = p.trailers
    n = p.state_dim
    kd, ks = p.damper, p.spring
    A = np.zeros((n, n))
    B = np.zeros((n, 1))

    def d_idx(i):  # d_i, 1-based
        return i - 1

    def v_idx(i):  # v_i, 0-based
        return M + i

    # d_i' = v_{i-1} - v_i
    for i in range(1, M + 1):
        A[d_idx(i), v_idx(i - 1)] = 1.0
        A[d_idx(i), v_idx(i)] = -1.0
    # v_0' = kd/m0 (v_1 - v_0) - ks/m0 d_1 + u
    A[v_idx(0), v_idx(1)] = kd / p.truck_mass
    A[v_idx(0), v_idx(0)] = -kd / p.truck_mass
    A[v_idx(0), d_idx(1)] = -ks / p.truck_mass
    B[v_idx(0), 0] = 1.0
    # interior trailers
    for i in range(1, M):
        A[v_idx(i), v_idx(i - 1)] += kd / p.trailer_mass
        A[v_idx(i), v_idx(i)] += -2.0 * kd / p.trailer_mass
        A[v_idx(i), v_idx(i + 1)] += kd / p.trailer_mass
        A[v_idx(i), d_idx(i)] += ks / p.trailer_mass
        A[v_idx(i), d_idx(i + 1)] += -ks / p.trailer_mass
    # last trailer
    A[v_idx(M), v_idx(M - 1)] += kd / p.trailer_mass
    A[v_idx(M), v_idx(M)] += -kd / p.trailer_mass
    A[v_idx(M), d_idx(M)] += ks / p.trailer_mass
    return A, B


def discretize_zoh(A: NDArray, B: NDArray, h: float) -> tuple[NDArray, NDArray]:
    """Exact sampling under piecewise-constant input, via the matrix
    exponential of the augmented block [[A, B], [0, 0]] times h."""
    if h <= 0:
        raise ValueError("sampling period must be positive")
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    n, m = A.shape[0], B.shape[1]
    aug = np.zeros((n + m, n + m))
    aug[:n, :n] = A
    aug[:n, n:] = B
    phi = expm(aug * h)
    return phi[:n, :n], phi[:n, n:]


def safe_polytope(p: CruiseParams, limit: str | None) -> Polytope:
    """Base operating box on (d, v), optionally capped by a speed limit."""
    M, n = p.trailers, p.state_dim
    rows, offs = [], []
    for i in range(M):
        e = np.zeros(n); e[i] = 1.0
        rows += [e, -e]
        offs += [p.d_max, -p.d_min]
    for i in range(M + 1):
        e = np.zeros(n); e[M + i] = 1.0
        rows += [e, -e]
        offs += [p.v_max, -p.v_min]
    if limit is not None:
        vbar = p.speed_limits[limit]
        for i in range(M + 1):
            e = np.zeros(n); e[M + i] = 1.0
            rows.append(e)
            offs.append(vbar)
    return Polytope(A=np.array(rows), b=np.array(offs))


def interior_point(p: CruiseParams) -> NDArray:
    """Shared interior point: zero elongations, all speeds midway between
    the global minimum and the tightest limit."""
    v = 0.5 * (p.v_min + min(p.speed_limits.values()))
    h = np.zeros(p.state_dim)
    h[p.trailers:] = v
    return h


def node_name(limit: str, countdown: int) -> str:
    return f"q_{limit}{countdown}"


def build_automaton(p: CruiseParams, horizon_steps: int = 2) -> HybridControlSystem:
    """Hybrid control system for the platoon under arriving speed limits.

    Nodes: the unrestricted node plus one node per (limit, steps-left)
    pair; a new limit sigma jumps to its longest countdown node, countdowns
    step down on d, and fully-enforced nodes self-loop on d."""
    if horizon_steps < 1:
        raise ValueError("horizon_steps must be at least 1")
    Ac, Bc = continuous_matrices(p)
    Ad, Bd = discretize_zoh(Ac, Bc, p.period)
    c = np.zeros(p.state_dim)
    ubox = Box(lower=np.array([p.u_min]), upper=np.array([p.u_max]))
    h = interior_point(p)

    nodes: dict[str, Node] = {}
    start = node_name(NO_EVENT_LABEL, 0)
    nodes[start] = Node(id=start, state_dim=p.state_dim, input_dim=1,
                        safe_set=safe_polytope(p, None), input_set=ubox, interior_point=h)
    for lim in LIMIT_LABELS:
        for j in range(horizon_steps):
            nid = node_name(lim, j)
            nodes[nid] = Node(id=nid, state_dim=p.state_dim, input_dim=1,
                              safe_set=safe_polytope(p, lim if j == 0 else None),
                              input_set=ubox, interior_point=h)

    transitions: list[Transition] = []

    def add(src, tgt, label):
        transitions.append(Transition(source=src, target=tgt, label=label, A=Ad, B=Bd, c=c))

    # A new limit can arrive anywhere it is not already active.
    for lim in LIMIT_LABELS:
        entry = node_name(lim, horizon_steps - 1)
        add(start, entry, lim)
        for other in LIMIT_LABELS:
            if other == lim:
                continue
            for j in range(horizon_steps):
                add(node_name(other, j), entry, lim)
    # Countdown and steady-state self-loops on "no new limit".
    add(start, start, NO_EVENT_LABEL)
    for lim in LIMIT_LABELS:
        for j in range(horizon_steps - 1, 0, -1):
            add(node_name(lim, j), node_name(lim, j - 1), NO_EVENT_LABEL)
        add(node_name(lim, 0), node_name(lim, 0), NO_EVENT_LABEL)

    return HybridControlSystem(nodes=nodes, transitions=transitions)
