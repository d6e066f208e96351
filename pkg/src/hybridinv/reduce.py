"""Reductions between system classes.

Two steps:

1. ``lift_inputs`` removes box input constraints by appending the input to
   the state.  Each transition q -> r gets an auxiliary node holding the
   (x, u) pair, with safe set P_q x U_q; with ``merge=True`` the auxiliary
   node of one chosen label is folded into its source node and auxiliary
   nodes sharing the same label, target and reset map are folded together,
   which is what keeps the truck benchmark at 10 nodes instead of 22.

2. ``to_algebraic`` removes the (now unconstrained) input entirely by
   projecting each reset map onto the orthogonal complement of the input
   image, yielding an implicit relation E x+ = A x + c.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from .geometry import EllipsoidCQ, project
from .model import (AlgebraicTransition, Box, HybridAlgebraicSystem,
                    HybridControlSystem, Node, Polytope, Transition,
                    ValidationError)

LOAD_PREFIX = "q0"  # label of the input-loading half-transition


def _load_label(sigma: str) -> str:
    # One loading transition per outgoing label, so the labels stay distinct.
    return f"{LOAD_PREFIX}({sigma})"


@dataclass
class ReductionTrace:
    """Bookkeeping for mapping lifted objects back to the original system.

    node_map: lifted node id -> {"kind": "original"|"merged"|"auxiliary",
        "sources": [original ids], "label": str | None, "target": str | None}
    coordinate_map: lifted node id -> {"state": [...], "input": [...]},
        index lists into the lifted state vector.
    """

    node_map: dict[str, dict] = field(default_factory=dict)
    coordinate_map: dict[str, dict] = field(default_factory=dict)
    # (source node, label, target node) -> lifted node holding the (x, u) pair
    # that the step applying this transition must stay inside.
    constraint_nodes: dict[tuple[str, str, str], str] = field(default_factory=dict)

    def lifted_node(self, original_id: str) -> str:
        for nid, info in self.node_map.items():
            if info["kind"] in ("original", "merged") and info["sources"] == [original_id]:
                return nid
        raise KeyError(original_id)

    def constraint_node(self, source: str, label: str, target: str) -> str:
        return self.constraint_nodes[(source, label, target)]

    def original_sets(self, lifted_sets: dict[str, EllipsoidCQ]) -> dict[str, EllipsoidCQ]:
        """Project lifted per-node ellipsoids back onto original state spaces."""
        out = {}
        for nid, info in self.node_map.items():
            if info["kind"] not in ("original", "merged") or nid not in lifted_sets:
                continue
            coords = self.coordinate_map[nid]["state"]
            e = lifted_sets[nid]
            out[info["sources"][0]] = e if len(coords) == e.dim else project(e, coords)
        return out

    def to_json(self) -> dict:
        return {
            "node_map": self.node_map,
            "coordinate_map": self.coordinate_map,
            "constraint_nodes": [
                {"from": k[0], "label": k[1], "to": k[2], "node": v}
                for k, v in sorted(self.constraint_nodes.items())
            ],
        }

    @staticmethod
    def from_json(obj: dict) -> "ReductionTrace":
        return ReductionTrace(
            node_map=obj["node_map"],
            coordinate_map=obj["coordinate_map"],
            constraint_nodes={(e["from"], e["label"], e["to"]): e["node"]
                              for e in obj.get("constraint_nodes", [])},
        )

    def save(self, path) -> None:
        with open(path, "w") as f:
            json.dump(self.to_json(), f, indent=1)
            f.write("\n")


def _input_polytope(node: Node) -> Polytope:
    if node.input_set is None:
        return Polytope.empty(node.input_dim)
    return node.input_set.as_polytope()


def _aux_interior(node: Node) -> NDArray | None:
    if node.interior_point is None:
        return None
    u = node.input_set.center if node.input_set is not None else np.zeros(node.input_dim)
    return np.concatenate([node.interior_point, u])


def _common_facets(polys: list[Polytope]) -> Polytope:
    """Facets present (by exact equality) in every listed polytope."""
    base = polys[0]
    keep_A, keep_b = [], []
    for i in range(base.nfacets):
        a, beta = base.A[i], base.b[i]
        ok = all(any(np.array_equal(a, P.A[j]) and beta == P.b[j] for j in range(P.nfacets))
                 for P in polys[1:])
        if ok:
            keep_A.append(a)
            keep_b.append(beta)
    if not keep_A:
        return Polytope.empty(base.dim)
    return Polytope(A=np.array(keep_A), b=np.array(keep_b))


def _vote_labels(sys: HybridControlSystem) -> dict[str, int]:
    votes: dict[str, set] = {}
    for t in sys.transitions:
        votes.setdefault(t.label, set()).add(t.source)
    return {k: len(v) for k, v in votes.items()}


def _can_merge(sys: HybridControlSystem) -> bool:
    dims = {n.input_dim for n in sys.nodes.values()}
    return len(dims) == 1 and dims != {0}


def lift_inputs(sys: HybridControlSystem, merge: bool = True
                ) -> tuple[HybridControlSystem, ReductionTrace]:
    """Rewrite the system so every input set is unconstrained.

    With ``merge=False`` this is the plain two-hop construction: every
    transition q -> r is replaced by q -> aux -> r where aux carries the
    (x, u) pair.  With ``merge=True`` (and a uniform input dimension) each
    node absorbs the auxiliary of its most widely shared outgoing label and
    remaining auxiliaries with identical label, target and reset map are
    shared across sources.
    """
    if merge and _can_merge(sys):
        return _lift_merged(sys)
    return _lift_plain(sys)


def _lift_plain(sys: HybridControlSystem) -> tuple[HybridControlSystem, ReductionTrace]:
    trace = ReductionTrace()
    nodes: dict[str, Node] = {}
    transitions: list[Transition] = []
    for nid, n in sys.nodes.items():
        nodes[nid] = Node(id=nid, state_dim=n.state_dim, input_dim=n.input_dim,
                          safe_set=n.safe_set, input_set=None,
                          interior_point=n.interior_point)
        trace.node_map[nid] = {"kind": "original", "sources": [nid], "label": None, "target": None}
        trace.coordinate_map[nid] = {"state": list(range(n.state_dim)), "input": []}

    counters: dict[str, int] = {}
    for t in sys.transitions:
        src = sys.nodes[t.source]
        tgt = sys.nodes[t.target]
        n, m = src.state_dim, src.input_dim
        base = f"{t.source}^{t.label}->{t.target}"
        idx = counters.get(base, 0)
        counters[base] = idx + 1
        aux_id = base if idx == 0 else f"{base}#{idx}"
        nodes[aux_id] = Node(
            id=aux_id, state_dim=n + m, input_dim=0,
            safe_set=src.safe_set.product(_input_polytope(src)),
            input_set=None, interior_point=_aux_interior(src))
        trace.node_map[aux_id] = {"kind": "auxiliary", "sources": [t.source],
                                  "label": t.label, "target": t.target}
        trace.coordinate_map[aux_id] = {"state": list(range(n)), "input": list(range(n, n + m))}
        trace.constraint_nodes[(t.source, t.label, t.target)] = aux_id

        A_load = np.vstack([np.eye(n), np.zeros((m, n))])
        B_load = np.vstack([np.zeros((n, m)), np.eye(m)])
        transitions.append(Transition(source=t.source, target=aux_id, label=_load_label(t.label),
                                      A=A_load, B=B_load, c=np.zeros(n + m)))
        transitions.append(Transition(source=aux_id, target=t.target, label=t.label,
                                      A=np.hstack([t.A, t.B]),
                                      B=np.zeros((tgt.state_dim, 0)), c=t.c))
    return HybridControlSystem(nodes=nodes, transitions=transitions), trace


def _lift_merged(sys: HybridControlSystem) -> tuple[HybridControlSystem, ReductionTrace]:
    m = next(iter(sys.nodes.values())).input_dim
    votes = _vote_labels(sys)
    trace = ReductionTrace()
    nodes: dict[str, Node] = {}
    transitions: list[Transition] = []

    absorbed: dict[str, str | None] = {}
    for nid, n in sys.nodes.items():
        labels = sys.labels_from(nid)
        absorbed[nid] = max(labels, key=lambda s: (votes[s], s)) if labels else None
        nodes[nid] = Node(
            id=nid, state_dim=n.state_dim + m, input_dim=m,
            safe_set=n.safe_set.product(_input_polytope(n)),
            input_set=None, interior_point=_aux_interior(n))
        trace.node_map[nid] = {"kind": "merged", "sources": [nid],
                               "label": absorbed[nid], "target": None}
        trace.coordinate_map[nid] = {"state": list(range(n.state_dim)),
                                     "input": list(range(n.state_dim, n.state_dim + m))}

    def lifted_map(t: Transition) -> tuple[NDArray, NDArray, NDArray]:
        # (x, u) -> (A x + B u + c, u_next); the new input lands in the u slot.
        n_tgt = sys.nodes[t.target].state_dim
        n_src = sys.nodes[t.source].state_dim
        A = np.zeros((n_tgt + m, n_src + m))
        A[:n_tgt, :n_src] = t.A
        A[:n_tgt, n_src:] = t.B
        B = np.vstack([np.zeros((n_tgt, m)), np.eye(m)])
        return A, B, np.concatenate([t.c, np.zeros(m)])

    # Group the remaining label transitions by (label, target, reset map,
    # dimensions, input box); each group becomes one shared auxiliary node.
    groups: dict[tuple, list[Transition]] = {}
    for t in sys.transitions:
        if t.label == absorbed[t.source]:
            A, B, c = lifted_map(t)
            transitions.append(Transition(source=t.source, target=t.target,
                                          label=t.label, A=A, B=B, c=c))
            trace.constraint_nodes[(t.source, t.label, t.target)] = t.source
        else:
            src = sys.nodes[t.source]
            ibox = src.input_set
            key = (t.label, t.target, src.state_dim,
                   t.A.tobytes(), t.B.tobytes(), t.c.tobytes(),
                   None if ibox is None else (ibox.lower.tobytes(), ibox.upper.tobytes()))
            groups.setdefault(key, []).append(t)

    used_ids: dict[str, int] = {}
    for key in sorted(groups, key=lambda k: (k[0], k[1], str(k))):
        members = groups[key]
        label, target = key[0], key[1]
        sources = sorted({t.source for t in members})
        base = f"^{label}->{target}"
        idx = used_ids.get(base, 0)
        used_ids[base] = idx + 1
        aux_id = base if idx == 0 else f"{base}#{idx}"

        n_src = sys.nodes[sources[0]].state_dim
        state_poly = _common_facets([sys.nodes[s].safe_set for s in sources])
        interior = next((_aux_interior(sys.nodes[s]) for s in sources
                         if sys.nodes[s].interior_point is not None), None)
        nodes[aux_id] = Node(
            id=aux_id, state_dim=n_src + m, input_dim=m,
            safe_set=state_poly.product(_input_polytope(sys.nodes[sources[0]])),
            input_set=None, interior_point=interior)
        trace.node_map[aux_id] = {"kind": "auxiliary", "sources": sources,
                                  "label": label, "target": target}
        trace.coordinate_map[aux_id] = {"state": list(range(n_src)),
                                        "input": list(range(n_src, n_src + m))}

        # Loading hop from every source, dynamics hop once.
        A_load = np.zeros((n_src + m, n_src + m))
        A_load[:n_src, :n_src] = np.eye(n_src)
        B_load = np.vstack([np.zeros((n_src, m)), np.eye(m)])
        for s in sources:
            transitions.append(Transition(source=s, target=aux_id, label=_load_label(label),
                                          A=A_load, B=B_load, c=np.zeros(n_src + m)))
        A, B, c = lifted_map(members[0])
        transitions.append(Transition(source=aux_id, target=target, label=label, A=A, B=B, c=c))
        for t in members:
            trace.constraint_nodes[(t.source, t.label, t.target)] = aux_id

    return HybridControlSystem(nodes=nodes, transitions=transitions), trace


def orthogonal_complement(B: NDArray, rcond: float = 1e-9) -> NDArray:
    """Orthonormal rows spanning Image(B)^perp, from an SVD of B.

    Singular values below rcond times the largest are treated as zero."""
    B = np.atleast_2d(np.asarray(B, dtype=float))
    n = B.shape[0]
    if B.shape[1] == 0 or not B.any():
        return np.eye(n)
    U, s, _ = np.linalg.svd(B, full_matrices=True)
    rank = int(np.sum(s > rcond * s[0]))
    return U[:, rank:].T.copy()


def to_algebraic(sys: HybridControlSystem) -> HybridAlgebraicSystem:
    """Project each reset map onto the complement of its input image.

    Requires every input set to be unconstrained (run ``lift_inputs``
    first); the output relation is E A x + E c = E x+ per transition."""
    for n in sys.nodes.values():
        if n.input_set is not None:
            raise ValidationError(f"node {n.id} still has a constrained input set")
    nodes = {nid: Node(id=nid, state_dim=n.state_dim, input_dim=0,
                       safe_set=n.safe_set, input_set=None,
                       interior_point=n.interior_point)
             for nid, n in sys.nodes.items()}
    transitions = []
    for t in sys.transitions:
        E = orthogonal_complement(t.B)
        transitions.append(AlgebraicTransition(
            source=t.source, target=t.target, label=t.label,
            A=E @ t.A, E=E, c=E @ t.c))
    return HybridAlgebraicSystem(nodes=nodes, transitions=transitions)
