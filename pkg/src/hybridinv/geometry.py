"""Ellipsoid algebra and the cone-duality machinery.

Ellipsoids come in two representations: center/shape (Q, c) and quadratic
(D, d, delta).  The invariance machinery works with the dual cone of the
lifted ellipsoid, represented by a symmetric (n+1)x(n+1) matrix whose
0-sublevel set (on the half containing the lifted interior direction) is
that cone.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray


class GeometryError(Exception):
    pass


class NotAnEllipsoid(GeometryError):
    """The quadratic sublevel set is empty, degenerate or unbounded."""


class SignatureError(GeometryError):
    """A cone matrix does not have exactly one negative eigenvalue."""


class DegenerateError(GeometryError):
    """Primal recovery produced a degenerate set."""


class InteriorPointError(GeometryError):
    """A supposed interior point is not strictly inside the set."""


SYM_TOL = 1e-12


def _check_symmetric(A: NDArray, name: str, tol: float = SYM_TOL) -> NDArray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise GeometryError(f"{name} must be a square matrix, got shape {A.shape}")
    scale = max(1.0, float(np.abs(A).max()))
    if np.abs(A - A.T).max() > tol * scale:
        raise GeometryError(f"{name} is not symmetric to {tol}")
    return 0.5 * (A + A.T)


@dataclass(frozen=True)
class EllipsoidCQ:
    """Solid ellipsoid {x : (x - c)^T Q (x - c) <= 1} with Q positive definite."""

    Q: NDArray
    c: NDArray

    def __post_init__(self):
        Q = _check_symmetric(self.Q, "Q")
        c = np.asarray(self.c, dtype=float).reshape(-1)
        if c.shape[0] != Q.shape[0]:
            raise GeometryError("center dimension does not match Q")
        if np.linalg.eigvalsh(Q)[0] <= 0:
            raise NotAnEllipsoid("Q must be positive definite")
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "c", c)

    @property
    def dim(self) -> int:
        return self.c.shape[0]

    def cholesky(self) -> NDArray:
        """Lower-triangular L with Q = L L^T."""
        return np.linalg.cholesky(self.Q)

    def value(self, x: NDArray) -> float:
        r = np.asarray(x, dtype=float) - self.c
        return float(r @ self.Q @ r)

    def contains(self, x: NDArray, tol: float = 0.0) -> bool:
        return self.value(x) <= 1.0 + tol

    def support(self, a: NDArray) -> float:
        """max of a.x over the ellipsoid: a.c + sqrt(a^T Q^{-1} a)."""
        a = np.asarray(a, dtype=float)
        return float(a @ self.c + np.sqrt(max(0.0, a @ np.linalg.solve(self.Q, a))))

    def boundary_points(self, count: int, seed: int = 0) -> NDArray:
        """Deterministic boundary samples: normalized Gaussian directions
        mapped through the inverse Cholesky factor and shifted by the center."""
        rng = np.random.default_rng(seed)
        dirs = rng.standard_normal((count, self.dim))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        L = self.cholesky()
        return self.c + np.linalg.solve(L.T, dirs.T).T


@dataclass(frozen=True)
class EllipsoidQuad:
    """Quadratic sublevel set {x : x^T D x + 2 d^T x + delta <= 0}."""

    D: NDArray
    d: NDArray
    delta: float

    def __post_init__(self):
        D = _check_symmetric(self.D, "D")
        d = np.asarray(self.d, dtype=float).reshape(-1)
        if d.shape[0] != D.shape[0]:
            raise GeometryError("d dimension does not match D")
        object.__setattr__(self, "D", D)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "delta", float(self.delta))

    @property
    def dim(self) -> int:
        return self.d.shape[0]

    def value(self, x: NDArray) -> float:
        x = np.asarray(x, dtype=float)
        return float(x @ self.D @ x + 2.0 * self.d @ x + self.delta)


@dataclass(frozen=True)
class DualQuadraticCone:
    """Cone {y : y^T M y <= 0} restricted to the half containing the lifted
    interior direction.  For a solid cone, M has exactly one nonpositive
    eigenvalue."""

    M: NDArray
    check_signature: bool = field(default=True, repr=False)

    def __post_init__(self):
        M = _check_symmetric(self.M, "M")
        object.__setattr__(self, "M", M)
        if self.check_signature:
            _require_signature(M)

    @property
    def dim(self) -> int:
        """Ambient dimension of the underlying (unlifted) space."""
        return self.M.shape[0] - 1

    def contains(self, y: NDArray, tol: float = 0.0) -> bool:
        y = np.asarray(y, dtype=float)
        return float(y @ self.M @ y) <= tol * max(1.0, float(y @ y))


def _require_signature(M: NDArray, rel_tol: float = 1e-9) -> None:
    """Exactly one negative eigenvalue, none within tolerance of zero."""
    w = np.linalg.eigvalsh(M)
    scale = max(np.abs(w).max(), 1e-300)
    if np.any(np.abs(w) <= rel_tol * scale):
        raise SignatureError(f"cone matrix is singular to working precision: eigenvalues {w}")
    if int(np.sum(w < 0)) != 1:
        raise SignatureError(f"cone matrix must have exactly one negative eigenvalue, got {w}")


def quad_to_cq(e: EllipsoidQuad) -> tuple[EllipsoidCQ, float]:
    """Convert a quadratic-form ellipsoid to center/shape form.

    Returns the equivalent (Q, c) ellipsoid and the positive scale factor
    lam = d^T D^{-1} d - delta with Q = D / lam, c = -D^{-1} d.
    """
    w = np.linalg.eigvalsh(e.D)
    if w[0] <= 0:
        raise NotAnEllipsoid("D must be positive definite")
    Dinv_d = np.linalg.solve(e.D, e.d)
    lam = float(e.d @ Dinv_d - e.delta)
    if lam <= 0:
        raise NotAnEllipsoid(f"empty or degenerate sublevel set (lambda = {lam})")
    return EllipsoidCQ(Q=e.D / lam, c=-Dinv_d), lam


def cq_to_quad(e: EllipsoidCQ, lam: float) -> EllipsoidQuad:
    """Inverse of :func:`quad_to_cq` at a chosen positive scale lam."""
    if lam <= 0:
        raise GeometryError("lam must be positive")
    D = lam * e.Q
    d = -lam * (e.Q @ e.c)
    delta = lam * float(e.c @ e.Q @ e.c) - lam
    return EllipsoidQuad(D=D, d=d, delta=delta)


def homogenize(A: NDArray, c: NDArray) -> NDArray:
    """Block matrix [[A, c], [0, 1]] mapping (x, 1) to (A x + c, 1)."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    c = np.asarray(c, dtype=float).reshape(-1)
    m, n = A.shape
    if c.shape[0] != m:
        raise GeometryError(f"offset length {c.shape[0]} does not match {m} rows")
    out = np.zeros((m + 1, n + 1))
    out[:m, :n] = A
    out[:m, n] = c
    out[m, n] = 1.0
    return out


def householder(h: NDArray) -> NDArray:
    """Symmetric orthogonal (n+1)x(n+1) reflection sending the lifted point
    (h, 1) onto the last coordinate axis."""
    h = np.asarray(h, dtype=float).reshape(-1)
    n = h.shape[0]
    v = np.append(h, 1.0)
    u = v.copy()
    u[n] -= np.linalg.norm(v)
    nu = np.linalg.norm(u)
    if nu <= 1e-12:
        return np.eye(n + 1)
    u /= nu
    return np.eye(n + 1) - 2.0 * np.outer(u, u)


def lifted_cone_matrix(e: EllipsoidCQ) -> NDArray:
    """Quadratic form N with {v : v^T N v <= 0, z >= 0} equal to the conic
    hull of e x {1}:  N = [[Q, -Qc], [-(Qc)^T, c^T Q c - 1]]."""
    Qc = e.Q @ e.c
    n = e.dim
    N = np.zeros((n + 1, n + 1))
    N[:n, :n] = e.Q
    N[:n, n] = -Qc
    N[n, :n] = -Qc
    N[n, n] = float(e.c @ Qc) - 1.0
    return N


def dual_quadratic(e: EllipsoidCQ, h: NDArray) -> tuple[DualQuadraticCone, tuple[NDArray, NDArray, float]]:
    """Quadratic description of the dual cone of the lifted ellipsoid.

    Returns the cone matrix M (in the original coordinates, normalized so the
    reflected top-left block has unit spectral norm) together with the
    (D, d, delta) coordinates of the reflected quadratic
    M = House(h) [[D, d], [d^T, delta]] House(h).

    A vector (-a, beta) belongs to the cone exactly when the half-space
    a.x <= beta contains the ellipsoid.
    """
    h = np.asarray(h, dtype=float).reshape(-1)
    if e.value(h) >= 1.0:
        raise InteriorPointError("h is not strictly inside the ellipsoid")
    N = lifted_cone_matrix(e)
    M = np.linalg.inv(N)
    M = 0.5 * (M + M.T)
    H = householder(h)
    B = H @ M @ H
    n = e.dim
    scale = np.linalg.norm(B[:n, :n], 2)
    M /= scale
    B /= scale
    cone = DualQuadraticCone(M=M)
    return cone, (0.5 * (B[:n, :n] + B[:n, :n].T), B[:n, n].copy(), float(B[n, n]))


def recover_primal(cone: DualQuadraticCone) -> EllipsoidCQ:
    """Ellipsoid whose lifted dual cone is the given quadratic cone.

    The dual of a solid quadratic cone with matrix M (one negative
    eigenvalue) is the quadratic cone with matrix M^{-1}; slicing it at
    z = 1 gives the primal ellipsoid.
    """
    _require_signature(cone.M)
    W = np.linalg.inv(cone.M)
    W = 0.5 * (W + W.T)
    n = cone.dim
    quad = EllipsoidQuad(D=W[:n, :n], d=W[:n, n], delta=float(W[n, n]))
    try:
        e, _ = quad_to_cq(quad)
    except NotAnEllipsoid as exc:
        raise DegenerateError(str(exc)) from exc
    return e


def image_membership(E: NDArray, target: EllipsoidCQ, point: NDArray,
                     tol: float = 1e-9) -> tuple[bool, float]:
    """Does `point` belong to E * target?

    Solves the equality-constrained minimum of (y - c)^T Q (y - c) over
    E y = point in closed form and compares the value against 1.  Returns
    the membership flag and the minimum value.
    """
    E = np.atleast_2d(np.asarray(E, dtype=float))
    m = E.shape[0]
    point = np.asarray(point, dtype=float).reshape(-1)
    if E.shape[1] != target.dim:
        raise GeometryError("E column count does not match the target dimension")
    if point.shape[0] != m:
        raise GeometryError("point dimension does not match the rows of E")
    if m == 0:
        return True, 0.0
    G = E @ np.linalg.solve(target.Q, E.T)
    r = point - E @ target.c
    value = float(r @ np.linalg.solve(G, r))
    return value <= 1.0 + tol, value


def project(e: EllipsoidCQ, coords) -> EllipsoidCQ:
    """Orthogonal shadow of the ellipsoid onto the listed coordinates.

    The projection of {(x-c)^T Q (x-c) <= 1} is the ellipsoid with shape
    matrix inv(Q^{-1}[coords, coords]) centered at c[coords]."""
    coords = list(coords)
    Sigma = np.linalg.inv(e.Q)
    sub = Sigma[np.ix_(coords, coords)]
    return EllipsoidCQ(Q=np.linalg.inv(sub), c=e.c[coords])
