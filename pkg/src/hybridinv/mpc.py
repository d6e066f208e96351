"""Receding-horizon controller and closed-loop simulator.

Two modes: ``safe`` constrains every predicted (state, input) pair to the
precomputed invariant ellipsoid of the lifted node it belongs to (a
second-order-cone constraint), which makes the optimizer feasible at every
step; ``unsafe`` uses only the polytopic safe sets and input bounds and can
run out of feasible inputs when a speed limit lands inside the horizon.

Events (new speed limits) are exogenous: prediction follows the no-event
label unless the scenario is marked as announced.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import cvxpy as cp
import numpy as np
from numpy.typing import NDArray

from .geometry import EllipsoidCQ
from .model import HybridControlSystem, Transition
from .reduce import ReductionTrace
from .synth import DEFAULT_SOLVER

NO_EVENT_LABEL = "d"


class MpcError(Exception):
    pass


class ScenarioError(MpcError):
    pass


@dataclass
class MpcScenario:
    system: HybridControlSystem
    initial_node: str
    initial_state: NDArray
    horizon: int
    mode: str = "safe"                      # "safe" | "unsafe"
    duration: float = 60.0
    period: float = 0.4
    # sorted (time, label) pairs; event times must be multiples of the period
    events: tuple[tuple[float, str], ...] = ()
    sets: dict[str, EllipsoidCQ] | None = None      # lifted-node ellipsoids
    trace: ReductionTrace | None = None
    announced: bool = False
    terminal_only: bool = False
    solver: str = DEFAULT_SOLVER

    def __post_init__(self):
        if self.horizon < 1:
            raise ScenarioError("horizon must be at least 1")
        if self.mode not in ("safe", "unsafe"):
            raise ScenarioError(f"unknown mode {self.mode!r}")
        if self.mode == "safe" and (self.sets is None or self.trace is None):
            raise ScenarioError("safe mode needs invariant sets and a reduction trace")
        times = [t for t, _ in self.events]
        if times != sorted(times):
            raise ScenarioError("events must be sorted by time")
        for t, _ in self.events:
            if abs(t / self.period - round(t / self.period)) > 1e-9:
                raise ScenarioError(f"event time {t} is not a multiple of the period")
        self.initial_state = np.asarray(self.initial_state, dtype=float).reshape(-1)

    @property
    def steps(self) -> int:
        return int(round(self.duration / self.period))


@dataclass
class StepRecord:
    step: int
    time: float
    node: str
    state: NDArray
    input: NDArray | None
    status: str
    stage_objective: float | None


@dataclass
class Trajectory:
    records: list[StepRecord] = field(default_factory=list)

    @property
    def feasible(self) -> bool:
        return all(r.status == "optimal" for r in self.records)

    def first_infeasible_step(self) -> int | None:
        for r in self.records:
            if r.status != "optimal":
                return r.step
        return None

    def to_csv(self, path) -> None:
        """Columns: step, time_s, node, d_1..d_M, v_0..v_M, u, status.

        Falls back to x_0..x_{n-1} labels when the state dimension is not of
        platoon form 2M+1."""
        if not self.records:
            header_state = []
        else:
            n = self.records[0].state.shape[0]
            if n % 2 == 1:
                M = (n - 1) // 2
                header_state = [f"d_{i}" for i in range(1, M + 1)] + \
                               [f"v_{i}" for i in range(M + 1)]
            else:
                header_state = [f"x_{i}" for i in range(n)]
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["step", "time_s", "node"] + header_state + ["u", "status"])
            for r in self.records:
                u = "" if r.input is None or r.input.size == 0 else repr(float(r.input[0]))
                w.writerow([r.step, repr(r.time), r.node]
                           + [repr(float(v)) for v in r.state]
                           + [u, r.status])


def _transition(sys: HybridControlSystem, node: str, label: str) -> Transition:
    for t in sys.transitions:
        if t.source == node and t.label == label:
            return t
    raise MpcError(f"no transition labeled {label!r} out of node {node}")


class RecedingHorizonController:
    """Solves the per-step second-order-cone program and returns the first
    input of the optimal plan."""

    def __init__(self, scenario: MpcScenario):
        self.s = scenario
        self._chol: dict[str, NDArray] = {}

    def _soc_factor(self, node: str) -> tuple[NDArray, NDArray]:
        if node not in self._chol:
            e = self.s.sets[node]
            self._chol[node] = e.cholesky().T      # (z-c)^T Q (z-c) = |L^T (z-c)|^2
        return self._chol[node], self.s.sets[node].c

    def plan(self, x: NDArray, node: str, labels: list[str]
             ) -> tuple[NDArray | None, str, float | None]:
        """Optimize over the horizon for the given predicted label sequence.

        Returns (first input, status, planned objective)."""
        s = self.s
        sys = s.system
        H = len(labels)
        trans = []
        q = node
        for lab in labels:
            t = _transition(sys, q, lab)
            trans.append(t)
            q = t.target

        xs = [None] * (H + 1)
        us = [cp.Variable(sys.nodes[t.source].input_dim) for t in trans]
        xs[0] = x
        cons = []
        obj = 0
        for j, t in enumerate(trans):
            xs[j + 1] = t.A @ xs[j] + t.B @ us[j] + t.c
            src = sys.nodes[t.source]
            if src.input_set is not None:
                cons += [us[j] >= src.input_set.lower, us[j] <= src.input_set.upper]
            tgt = sys.nodes[t.target]
            if s.mode == "unsafe":
                if tgt.safe_set.nfacets:
                    cons.append(tgt.safe_set.A @ xs[j + 1] <= tgt.safe_set.b)
            else:
                constrain = (j == H - 1) if s.terminal_only else True
                if constrain:
                    nu = s.trace.constraint_node(t.source, t.label, t.target)
                    Lt, center = self._soc_factor(nu)
                    z = cp.hstack([xs[j], us[j]])
                    cons.append(cp.norm2(Lt @ z - Lt @ center) <= 1)
            # distance covered: v_0 integrated over the step
            v0 = xs[j + 1][(sys.nodes[t.target].state_dim - 1) // 2] \
                if sys.nodes[t.target].state_dim % 2 == 1 else xs[j + 1][0]
            obj = obj + s.period * v0
        problem = cp.Problem(cp.Maximize(obj), cons)
        try:
            problem.solve(solver=s.solver)
        except cp.error.SolverError:
            return None, "solver_error", None
        if problem.status not in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE):
            return None, "infeasible", None
        return np.asarray(us[0].value, dtype=float).reshape(-1), "optimal", float(problem.value)


def _label_schedule(s: MpcScenario) -> list[str]:
    by_step = {int(round(t / s.period)): lab for t, lab in s.events}
    return [by_step.get(k, NO_EVENT_LABEL) for k in range(s.steps)]


def simulate(s: MpcScenario) -> Trajectory:
    """Run the closed loop; halts at the first infeasible step."""
    labels = _label_schedule(s)
    controller = RecedingHorizonController(s)
    traj = Trajectory()
    x = s.initial_state.copy()
    node = s.initial_node
    for k in range(s.steps):
        # Predicted labels: this step's label is observed; future labels are
        # the no-event label unless the schedule is announced.
        pred = [labels[k]]
        if s.announced:
            pred += labels[k + 1: k + s.horizon]
        pred += [NO_EVENT_LABEL] * (s.horizon - len(pred))
        # Clip the prediction where the automaton has no matching transition.
        q = node
        usable = []
        for lab in pred:
            try:
                t = _transition(s.system, q, lab)
            except MpcError:
                break
            usable.append(lab)
            q = t.target
        if not usable:
            traj.records.append(StepRecord(step=k, time=k * s.period, node=node,
                                           state=x.copy(), input=None,
                                           status="no_transition", stage_objective=None))
            break
        u, status, value = controller.plan(x, node, usable)
        traj.records.append(StepRecord(step=k, time=k * s.period, node=node,
                                       state=x.copy(), input=u, status=status,
                                       stage_objective=value))
        if status != "optimal":
            break
        t = _transition(s.system, node, labels[k])
        x = t.A @ x + t.B @ u + t.c
        node = t.target
    return traj
