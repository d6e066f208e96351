"""Shared fixtures: small analytic systems and the (expensive) cruise
pipeline, synthesized once per session."""

import numpy as np
import pytest

import hybridinv as hv
from hybridinv import cruise as cruise_mod
from hybridinv.model import (Box, HybridAlgebraicSystem,
                             HybridControlSystem, Node, Polytope, Transition)
from hybridinv.model import AlgebraicTransition

# One pass/fail line per acceptance criterion, echoed in the summary.
ACCEPTANCE_LINES: list[str] = []


def record_acceptance(number: int, name: str, passed: bool, detail: str = "") -> None:
    line = f"acceptance {number} ({name}): {'PASS' if passed else 'FAIL'}"
    if detail:
        line += f" -- {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def make_self_loop_has(a: float, safe_radius: float = 1.0) -> HybridAlgebraicSystem:
    """One node, one self-loop x+ = a x, safe set [-r, r]."""
    node = Node(id="q", state_dim=1, input_dim=0,
                safe_set=Polytope.from_box([-safe_radius], [safe_radius]),
                interior_point=np.zeros(1))
    t = AlgebraicTransition(source="q", target="q", label="d",
                            A=np.array([[a]]), E=np.eye(1), c=np.zeros(1))
    return HybridAlgebraicSystem(nodes={"q": node}, transitions=[t])


def make_two_node_hcs(seed: int = 7) -> HybridControlSystem:
    """Random-flavored 2-node constrained system with contracting maps."""
    rng = np.random.default_rng(seed)
    nodes = {}
    for nid in ("p", "q"):
        nodes[nid] = Node(id=nid, state_dim=2, input_dim=1,
                          safe_set=Polytope.from_box([-1, -1], [1, 1]),
                          input_set=Box(lower=np.array([-1.0]), upper=np.array([1.0])),
                          interior_point=np.zeros(2))
    theta = 0.4
    rot = np.array([[np.cos(theta), -np.sin(theta)],
                    [np.sin(theta), np.cos(theta)]])
    transitions = []
    for (src, tgt, lab) in [("p", "q", "go"), ("q", "p", "back"), ("p", "p", "stay")]:
        transitions.append(Transition(
            source=src, target=tgt, label=lab,
            A=0.5 * rot, B=np.array([[0.1], [0.2]]), c=np.array([0.05, 0.0])))
    _ = rng  # seed reserved for future perturbations
    return HybridControlSystem(nodes=nodes, transitions=transitions)


@pytest.fixture(scope="session")
def cruise_params():
    return cruise_mod.CruiseParams()


@pytest.fixture(scope="session")
def cruise_system(cruise_params):
    return cruise_mod.build_automaton(cruise_params, horizon_steps=2)


@pytest.fixture(scope="session")
def cruise_reduction(cruise_system):
    lifted, trace = hv.lift_inputs(cruise_system, merge=True)
    has = hv.to_algebraic(lifted)
    return lifted, has, trace


@pytest.fixture(scope="session")
def cruise_synthesis(cruise_reduction):
    """(sets, report, synth wall time in seconds) for the M = 1 benchmark."""
    import time
    _, has, _ = cruise_reduction
    t0 = time.perf_counter()
    sets, report = hv.synthesize(has)
    elapsed = time.perf_counter() - t0
    assert sets is not None, f"cruise synthesis failed: {report.status}"
    return sets, report, elapsed
