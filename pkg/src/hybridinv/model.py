"""Data model for hybrid systems plus problem/result file IO.

A control system couples a finite automaton with affine reset maps
x+ = A x + B u + c, polytopic safe sets and box input sets.  An algebraic
system replaces the input by an implicit relation E x+ = A x + c.
All numbers serialize as plain JSON floats (shortest exact decimal), so a
save/load round trip is bit-faithful for doubles.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from .geometry import EllipsoidCQ


class ModelError(Exception):
    pass


class ValidationError(ModelError):
    """Structural or dimensional inconsistency, with a location message."""


class ParseError(ModelError):
    """Malformed problem or sets file."""


def _arr(x, name: str, ndim: int) -> NDArray:
    try:
        a = np.asarray(x, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{name}: not a numeric array ({exc})") from exc
    if a.ndim != ndim:
        raise ParseError(f"{name}: expected {ndim}-dimensional array, got shape {a.shape}")
    return a


@dataclass(frozen=True)
class Polytope:
    """H-representation {x : A x <= b}, one row per facet."""

    A: NDArray
    b: NDArray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        b = np.asarray(self.b, dtype=float).reshape(-1)
        if A.shape[0] != b.shape[0]:
            raise ValidationError(f"polytope has {A.shape[0]} normals but {b.shape[0]} offsets")
        for i in range(A.shape[0]):
            if not A[i].any() and b[i] < 0:
                raise ValidationError(f"facet {i} encodes the empty set (zero normal, negative offset)")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)

    @property
    def dim(self) -> int:
        return self.A.shape[1]

    @property
    def nfacets(self) -> int:
        return self.A.shape[0]

    def contains(self, x: NDArray, tol: float = 0.0) -> bool:
        return bool(np.all(self.A @ np.asarray(x, dtype=float) <= self.b + tol))

    def margins(self, x: NDArray) -> NDArray:
        """Per-facet slack b - A x (negative entries are violations)."""
        return self.b - self.A @ np.asarray(x, dtype=float)

    @staticmethod
    def empty(dim: int) -> "Polytope":
        return Polytope(A=np.zeros((0, dim)), b=np.zeros(0))

    @staticmethod
    def from_box(lower: NDArray, upper: NDArray) -> "Polytope":
        lower = np.asarray(lower, dtype=float).reshape(-1)
        upper = np.asarray(upper, dtype=float).reshape(-1)
        n = lower.shape[0]
        A = np.vstack([np.eye(n), -np.eye(n)])
        b = np.concatenate([upper, -lower])
        return Polytope(A=A, b=b)

    def product(self, other: "Polytope") -> "Polytope":
        """H-representation of the Cartesian product."""
        n, m = self.dim, other.dim
        A = np.zeros((self.nfacets + other.nfacets, n + m))
        A[: self.nfacets, :n] = self.A
        A[self.nfacets :, n:] = other.A
        return Polytope(A=A, b=np.concatenate([self.b, other.b]))


@dataclass(frozen=True)
class Box:
    """Axis-aligned box of input values."""

    lower: NDArray
    upper: NDArray

    def __post_init__(self):
        lower = np.asarray(self.lower, dtype=float).reshape(-1)
        upper = np.asarray(self.upper, dtype=float).reshape(-1)
        if lower.shape != upper.shape:
            raise ValidationError("box bounds have different lengths")
        if np.any(lower > upper):
            raise ValidationError("box has lower bound above upper bound")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def dim(self) -> int:
        return self.lower.shape[0]

    @property
    def center(self) -> NDArray:
        return 0.5 * (self.lower + self.upper)

    def as_polytope(self) -> Polytope:
        return Polytope.from_box(self.lower, self.upper)


@dataclass(frozen=True)
class Node:
    """Automaton node: safe set over the state, input set over the input.

    ``input_set`` is None for an unconstrained input space and
    ``interior_point`` may be omitted until synthesis needs it."""

    id: str
    state_dim: int
    input_dim: int
    safe_set: Polytope
    input_set: Box | None = None
    interior_point: NDArray | None = None

    def __post_init__(self):
        if self.state_dim <= 0:
            raise ValidationError(f"node {self.id}: state_dim must be positive")
        if self.input_dim < 0:
            raise ValidationError(f"node {self.id}: input_dim must be nonnegative")
        if self.safe_set.dim != self.state_dim:
            raise ValidationError(
                f"node {self.id}: safe set dimension {self.safe_set.dim} != state_dim {self.state_dim}")
        if self.input_set is not None and self.input_set.dim != self.input_dim:
            raise ValidationError(
                f"node {self.id}: input set dimension {self.input_set.dim} != input_dim {self.input_dim}")
        if self.interior_point is not None:
            h = np.asarray(self.interior_point, dtype=float).reshape(-1)
            if h.shape[0] != self.state_dim:
                raise ValidationError(f"node {self.id}: interior point has wrong dimension")
            if np.any(self.safe_set.A @ h >= self.safe_set.b):
                raise ValidationError(
                    f"node {self.id}: interior point does not strictly satisfy every facet")
            object.__setattr__(self, "interior_point", h)


@dataclass(frozen=True)
class Transition:
    """Labeled edge with affine reset map x+ = A x + B u + c."""

    source: str
    target: str
    label: str
    A: NDArray
    B: NDArray
    c: NDArray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        B = np.atleast_2d(np.asarray(self.B, dtype=float))
        c = np.asarray(self.c, dtype=float).reshape(-1)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "c", c)


@dataclass(frozen=True)
class AlgebraicTransition:
    """Labeled edge with implicit reset relation E x+ = A x + c."""

    source: str
    target: str
    label: str
    A: NDArray
    E: NDArray
    c: NDArray

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        E = np.asarray(self.E, dtype=float)
        c = np.asarray(self.c, dtype=float).reshape(-1)
        if A.ndim != 2 or E.ndim != 2:
            raise ValidationError(f"transition {self.source}-{self.label}->{self.target}: A, E must be matrices")
        if A.shape[0] != E.shape[0] or A.shape[0] != c.shape[0]:
            raise ValidationError(
                f"transition {self.source}-{self.label}->{self.target}: row counts of A, E, c disagree")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "E", E)
        object.__setattr__(self, "c", c)


def _check_automaton(nodes: dict[str, Node], transitions) -> None:
    for t in transitions:
        for end in (t.source, t.target):
            if end not in nodes:
                raise ValidationError(f"transition {t.source}-{t.label}->{t.target}: unknown node '{end}'")


@dataclass(frozen=True)
class HybridControlSystem:
    nodes: dict[str, Node] = field(default_factory=dict)
    transitions: tuple[Transition, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "nodes", dict(self.nodes))
        object.__setattr__(self, "transitions", tuple(self.transitions))
        _check_automaton(self.nodes, self.transitions)
        for t in self.transitions:
            src, tgt = self.nodes[t.source], self.nodes[t.target]
            if t.A.shape != (tgt.state_dim, src.state_dim):
                raise ValidationError(
                    f"transition {t.source}-{t.label}->{t.target}: A has shape {t.A.shape}, "
                    f"expected ({tgt.state_dim}, {src.state_dim})")
            if t.B.shape != (tgt.state_dim, src.input_dim):
                raise ValidationError(
                    f"transition {t.source}-{t.label}->{t.target}: B has shape {t.B.shape}, "
                    f"expected ({tgt.state_dim}, {src.input_dim})")
            if t.c.shape[0] != tgt.state_dim:
                raise ValidationError(
                    f"transition {t.source}-{t.label}->{t.target}: c has length {t.c.shape[0]}, "
                    f"expected {tgt.state_dim}")

    def outgoing(self, node_id: str) -> list[Transition]:
        return [t for t in self.transitions if t.source == node_id]

    def labels_from(self, node_id: str) -> list[str]:
        return sorted({t.label for t in self.outgoing(node_id)})

    @property
    def has_constrained_input(self) -> bool:
        return any(n.input_set is not None for n in self.nodes.values())


@dataclass(frozen=True)
class HybridAlgebraicSystem:
    nodes: dict[str, Node] = field(default_factory=dict)
    transitions: tuple[AlgebraicTransition, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "nodes", dict(self.nodes))
        object.__setattr__(self, "transitions", tuple(self.transitions))
        _check_automaton(self.nodes, self.transitions)
        for t in self.transitions:
            src, tgt = self.nodes[t.source], self.nodes[t.target]
            if t.A.shape[1] != src.state_dim:
                raise ValidationError(
                    f"transition {t.source}-{t.label}->{t.target}: A has {t.A.shape[1]} columns, "
                    f"expected {src.state_dim}")
            if t.E.shape[1] != tgt.state_dim:
                raise ValidationError(
                    f"transition {t.source}-{t.label}->{t.target}: E has {t.E.shape[1]} columns, "
                    f"expected {tgt.state_dim}")

    def outgoing(self, node_id: str) -> list[AlgebraicTransition]:
        return [t for t in self.transitions if t.source == node_id]


# ---------------------------------------------------------------------------
# JSON IO


def _node_to_json(n: Node) -> dict:
    out = {
        "id": n.id,
        "state_dim": n.state_dim,
        "input_dim": n.input_dim,
        "safe_set": {"A": n.safe_set.A.tolist(), "b": n.safe_set.b.tolist()},
        "input_set": "unconstrained" if n.input_set is None else
                     {"lower": n.input_set.lower.tolist(), "upper": n.input_set.upper.tolist()},
    }
    if n.interior_point is not None:
        out["interior_point"] = n.interior_point.tolist()
    return out


def _node_from_json(obj: dict) -> Node:
    try:
        nid = obj["id"]
        state_dim = int(obj["state_dim"])
        input_dim = int(obj["input_dim"])
        ss = obj["safe_set"]
    except KeyError as exc:
        raise ParseError(f"node entry missing field {exc}") from exc
    safe = Polytope(A=_arr(ss.get("A", []), f"node {nid} safe_set.A", 2)
                    if ss.get("A") else np.zeros((0, state_dim)),
                    b=_arr(ss.get("b", []), f"node {nid} safe_set.b", 1)
                    if ss.get("b") else np.zeros(0))
    iset = obj.get("input_set", "unconstrained")
    if iset == "unconstrained":
        input_set = None
    else:
        input_set = Box(lower=_arr(iset["lower"], f"node {nid} input_set.lower", 1),
                        upper=_arr(iset["upper"], f"node {nid} input_set.upper", 1))
    h = obj.get("interior_point")
    return Node(id=nid, state_dim=state_dim, input_dim=input_dim, safe_set=safe,
                input_set=input_set,
                interior_point=None if h is None else _arr(h, f"node {nid} interior_point", 1))


def system_to_json(sys: HybridControlSystem) -> dict:
    return {
        "nodes": [_node_to_json(sys.nodes[k]) for k in sorted(sys.nodes)],
        "transitions": [
            {"from": t.source, "to": t.target, "label": t.label,
             "A": t.A.tolist(), "B": t.B.tolist(), "c": t.c.tolist()}
            for t in sys.transitions
        ],
    }


def system_from_json(obj: dict) -> HybridControlSystem:
    if not isinstance(obj, dict) or "nodes" not in obj:
        raise ParseError("problem file must be an object with a 'nodes' field")
    nodes = {}
    for entry in obj["nodes"]:
        n = _node_from_json(entry)
        if n.id in nodes:
            raise ValidationError(f"duplicate node id '{n.id}'")
        nodes[n.id] = n
    transitions = []
    for i, entry in enumerate(obj.get("transitions", [])):
        try:
            src, tgt = entry["from"], entry["to"]
            ndst = nodes.get(tgt)
            B = entry["B"]
            # B from a zero-input source serializes as a list of empty rows.
            if B == [] or all(row == [] for row in B):
                Bmat = np.zeros((len(B) if B else (ndst.state_dim if ndst else 0), 0))
            else:
                Bmat = _arr(B, f"transition {i} B", 2)
            transitions.append(Transition(
                source=src, target=tgt, label=entry["label"],
                A=_arr(entry["A"], f"transition {i} A", 2),
                B=Bmat, c=_arr(entry["c"], f"transition {i} c", 1)))
        except KeyError as exc:
            raise ParseError(f"transition {i} missing field {exc}") from exc
    return HybridControlSystem(nodes=nodes, transitions=transitions)


def load_problem(path) -> HybridControlSystem:
    with open(path) as f:
        try:
            obj = json.load(f)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return system_from_json(obj)


def save_problem(path, sys: HybridControlSystem) -> None:
    with open(path, "w") as f:
        json.dump(system_to_json(sys), f, indent=1)
        f.write("\n")


def save_sets(path, sets: dict[str, EllipsoidCQ], node_dims: dict[str, int] | None = None) -> None:
    """Write per-node ellipsoids {x : (x-c)^T Q (x-c) <= 1} as JSON."""
    if node_dims is not None:
        for nid, e in sets.items():
            if nid in node_dims and e.dim != node_dims[nid]:
                raise ValidationError(
                    f"set for node {nid} has dimension {e.dim}, node has {node_dims[nid]}")
    obj = {"sets": [{"node": nid, "Q": sets[nid].Q.tolist(), "c": sets[nid].c.tolist()}
                    for nid in sorted(sets)]}
    with open(path, "w") as f:
        json.dump(obj, f, indent=1)
        f.write("\n")


def load_sets(path) -> dict[str, EllipsoidCQ]:
    with open(path) as f:
        try:
            obj = json.load(f)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if "sets" not in obj:
        raise ParseError("sets file must contain a 'sets' field")
    out = {}
    for entry in obj["sets"]:
        out[entry["node"]] = EllipsoidCQ(Q=_arr(entry["Q"], "Q", 2), c=_arr(entry["c"], "c", 1))
    return out
