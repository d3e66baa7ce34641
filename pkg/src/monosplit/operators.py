"""Dense vectors and a catalog of maximal monotone operators.

Points of the ambient space are plain 1-d ``numpy.float64`` arrays; the
space is R^n with the standard inner product. :func:`as_vector` enforces
the vector invariants (fixed dimension >= 1, all entries finite) at
construction boundaries, and solvers re-check finiteness after every
update they perform.

Every operator in the catalog is maximal monotone by construction and
exposes a capability set: single-valued evaluation (``EVAL``), exact
resolvent evaluation (``RESOLVENT``), and reproducible graph sampling
(``GRAPH_SAMPLE``). Operators are immutable after construction and all
operations are pure, so they are safe to share across threads.
"""

from __future__ import annotations

from enum import Flag, auto

import numpy as np

from .errors import CapabilityError, DimensionError, SingularSolveError, ValidationError

# Absolute tolerance for monotonicity / eigenvalue validation checks.
TOL_MONO = 1e-10


def as_vector(x, dim: int | None = None, name: str = "x") -> np.ndarray:
    """Validate and return ``x`` as a finite 1-d float64 array."""
    v = np.asarray(x, dtype=float)
    if v.ndim == 0:
        v = v.reshape(1)
    if v.ndim != 1 or v.size < 1:
        raise ValidationError(f"{name} must be a 1-d vector with dimension >= 1")
    if not np.all(np.isfinite(v)):
        raise ValidationError(f"{name} has non-finite entries")
    if dim is not None and v.size != dim:
        raise DimensionError(f"{name} has dimension {v.size}, expected {dim}")
    return v


def as_matrix(M, name: str = "M") -> np.ndarray:
    """Validate and return ``M`` as a finite square float64 matrix."""
    A = np.asarray(M, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 1:
        raise ValidationError(f"{name} must be a square matrix")
    if not np.all(np.isfinite(A)):
        raise ValidationError(f"{name} has non-finite entries")
    return A


def soft_threshold(x: np.ndarray, thresh) -> np.ndarray:
    """Coordinatewise shrinkage: sign(x) * max(|x| - thresh, 0)."""
    return np.sign(x) * np.maximum(np.abs(x) - thresh, 0.0)


class Capability(Flag):
    EVAL = auto()
    RESOLVENT = auto()
    GRAPH_SAMPLE = auto()


class MonotoneOp:
    """Base class for catalog operators.

    Subclasses set ``kind``, ``dim``, ``capabilities`` and the optional
    moduli ``alpha`` (cocoercivity) and ``lip`` (Lipschitz constant).
    ``eval`` and ``resolvent`` accept a single point of shape ``(n,)`` or
    a stack of points of shape ``(m, n)`` and operate row-wise.
    """

    kind: str = "abstract"

    def __init__(self, dim: int):
        self.dim = int(dim)
        self.capabilities = Capability(0)
        self.alpha: float | None = None
        self.lip: float | None = None

    def _check_point(self, x, name="x") -> np.ndarray:
        X = np.asarray(x, dtype=float)
        if X.ndim == 0:
            X = X.reshape(1)
        if X.shape[-1] != self.dim:
            raise DimensionError(
                f"{name} has dimension {X.shape[-1]}, operator expects {self.dim}"
            )
        if not np.all(np.isfinite(X)):
            raise ValidationError(f"{name} has non-finite entries")
        return X

    def eval(self, x: np.ndarray) -> np.ndarray:
        raise CapabilityError(f"{self.kind} operator is not single-valued (no EVAL)")

    def resolvent(self, lam: float, x: np.ndarray) -> np.ndarray:
        raise CapabilityError(f"{self.kind} operator has no resolvent capability")

    def __repr__(self):
        return f"<{type(self).__name__} dim={self.dim} caps={self.capabilities}>"


def _require_lambda(lam: float) -> float:
    lam = float(lam)
    if not (lam > 0.0) or not np.isfinite(lam):
        raise ValidationError(f"resolvent parameter must be positive, got {lam}")
    return lam


class Affine(MonotoneOp):
    """x -> M x + q with M + M^T positive semidefinite."""

    kind = "affine"

    def __init__(self, M, q):
        M = as_matrix(M)
        super().__init__(M.shape[0])
        q = as_vector(q, dim=self.dim, name="q")
        sym_eigs = np.linalg.eigvalsh(0.5 * (M + M.T))
        if sym_eigs.min() < -TOL_MONO:
            raise ValidationError(
                f"affine map is not monotone: min eigenvalue of symmetric part "
                f"is {sym_eigs.min():.3e}"
            )
        self.M = M
        self.q = q
        self.capabilities = Capability.EVAL | Capability.RESOLVENT | Capability.GRAPH_SAMPLE
        self.lip = float(np.linalg.norm(M, 2))

    def eval(self, x):
        X = self._check_point(x)
        return X @ self.M.T + self.q

    def resolvent(self, lam, x):
        lam = _require_lambda(lam)
        X = self._check_point(x)
        A = np.eye(self.dim) + lam * self.M
        rhs = X - lam * self.q
        try:
            if rhs.ndim == 1:
                return np.linalg.solve(A, rhs)
            return np.linalg.solve(A, rhs.T).T
        except np.linalg.LinAlgError as exc:  # pragma: no cover - monotone M
            raise SingularSolveError(f"I + lam*M singular at lam={lam}") from exc


class GradQuadratic(Affine):
    """Gradient map x -> Q x - b of the quadratic (1/2) x'Qx - b'x, Q sym. PSD."""

    kind = "grad_quadratic"

    def __init__(self, Q, b):
        Q = as_matrix(Q, name="Q")
        if np.max(np.abs(Q - Q.T)) > TOL_MONO * (1.0 + np.max(np.abs(Q))):
            raise ValidationError("Q must be symmetric")
        b = as_vector(b, dim=Q.shape[0], name="b")
        super().__init__(Q, -b)
        eigs = np.linalg.eigvalsh(0.5 * (Q + Q.T))
        lam_max = float(max(eigs.max(), 0.0))
        self.lip = lam_max
        self.alpha = np.inf if lam_max == 0.0 else 1.0 / lam_max


class SubdiffL1(MonotoneOp):
    """Subdifferential of the weighted l1 norm x -> sum_i w_i |x_i|."""

    kind = "subdiff_l1"

    def __init__(self, weights):
        w = as_vector(weights, name="weights")
        if np.any(w < 0.0):
            raise ValidationError("l1 weights must be nonnegative")
        super().__init__(w.size)
        self.weights = w
        self.capabilities = Capability.RESOLVENT | Capability.GRAPH_SAMPLE

    def resolvent(self, lam, x):
        lam = _require_lambda(lam)
        X = self._check_point(x)
        return soft_threshold(X, lam * self.weights)


class NormalConeBox(MonotoneOp):
    """Normal cone of the box {lo <= x <= hi}; resolvent is the projection."""

    kind = "normal_cone_box"

    def __init__(self, lo, hi):
        lo = as_vector(lo, name="lo")
        hi = as_vector(hi, dim=lo.size, name="hi")
        if np.any(lo > hi):
            raise ValidationError("box requires lo <= hi coordinatewise")
        super().__init__(lo.size)
        self.lo = lo
        self.hi = hi
        self.capabilities = Capability.RESOLVENT | Capability.GRAPH_SAMPLE

    def resolvent(self, lam, x):
        _require_lambda(lam)
        X = self._check_point(x)
        # Projection: independent of lam.
        return np.clip(X, self.lo, self.hi)


class NormalConeBall(MonotoneOp):
    """Normal cone of the origin-centered euclidean ball of given radius."""

    kind = "normal_cone_ball"

    def __init__(self, radius, dim):
        radius = float(radius)
        if not (radius > 0.0):
            raise ValidationError("ball radius must be positive")
        super().__init__(dim)
        self.radius = radius
        self.capabilities = Capability.RESOLVENT | Capability.GRAPH_SAMPLE

    def resolvent(self, lam, x):
        _require_lambda(lam)
        X = self._check_point(x)
        norms = np.linalg.norm(X, axis=-1, keepdims=X.ndim > 1)
        if X.ndim == 1:
            norms = float(norms)
            return X if norms <= self.radius else X * (self.radius / norms)
        factor = np.minimum(1.0, self.radius / np.maximum(norms, 1e-300))
        return X * factor


class Scaled(MonotoneOp):
    """lam_scale * T for an inner operator T and lam_scale > 0."""

    kind = "scaled"

    def __init__(self, lam_scale, inner: MonotoneOp):
        lam_scale = float(lam_scale)
        if not (lam_scale > 0.0):
            raise ValidationError("scaling factor must be positive")
        super().__init__(inner.dim)
        self.lam_scale = lam_scale
        self.inner = inner
        self.capabilities = inner.capabilities
        if inner.alpha is not None:
            self.alpha = inner.alpha / lam_scale
        if inner.lip is not None:
            self.lip = lam_scale * inner.lip

    def eval(self, x):
        if Capability.EVAL not in self.inner.capabilities:
            raise CapabilityError("scaled operator: inner operator has no EVAL")
        return self.lam_scale * self.inner.eval(x)

    def resolvent(self, lam, x):
        lam = _require_lambda(lam)
        # (I + lam * (s*T))^-1 = (I + (lam*s) * T)^-1.
        return self.inner.resolvent(lam * self.lam_scale, x)


class Sum(MonotoneOp):
    """left + right. Never claims a resolvent: splitting methods exist to
    approximate it."""

    kind = "sum"

    def __init__(self, left: MonotoneOp, right: MonotoneOp):
        if left.dim != right.dim:
            raise DimensionError(
                f"sum children have dimensions {left.dim} and {right.dim}"
            )
        super().__init__(left.dim)
        self.left = left
        self.right = right
        caps = Capability(0)
        if Capability.EVAL in left.capabilities and Capability.EVAL in right.capabilities:
            caps |= Capability.EVAL
        if caps & Capability.EVAL or _sum_sample_children(self) is not None:
            caps |= Capability.GRAPH_SAMPLE
        self.capabilities = caps
        if left.lip is not None and right.lip is not None:
            self.lip = left.lip + right.lip

    def eval(self, x):
        if Capability.EVAL not in self.capabilities:
            raise CapabilityError("sum operator: some child is not single-valued")
        return self.left.eval(x) + self.right.eval(x)


def _sum_sample_children(op: Sum):
    """Pair (eval_child, resolvent_child) when the sum graph is samplable
    through one exact resolvent plus one single-valued evaluation."""
    pairs = [(op.left, op.right), (op.right, op.left)]
    for ev, res in pairs:
        if Capability.EVAL in ev.capabilities and Capability.RESOLVENT in res.capabilities:
            return ev, res
    return None


def make_operator(spec: dict) -> MonotoneOp:
    """Build a validated operator from a plain-dict description.

    Accepted kinds: affine {M, q}, grad_quadratic {Q, b}, subdiff_l1
    {weights}, normal_cone_box {lo, hi}, normal_cone_ball {radius, dim},
    scaled {lam, inner}, sum {left, right}.
    """
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ValidationError("operator spec must be a dict with a 'kind' key")
    kind = spec["kind"]
    try:
        if kind == "affine":
            return Affine(spec["M"], spec["q"])
        if kind == "grad_quadratic":
            return GradQuadratic(spec["Q"], spec["b"])
        if kind == "subdiff_l1":
            return SubdiffL1(spec["weights"])
        if kind == "normal_cone_box":
            return NormalConeBox(spec["lo"], spec["hi"])
        if kind == "normal_cone_ball":
            return NormalConeBall(spec["radius"], spec["dim"])
        if kind == "scaled":
            return Scaled(spec["lam"], make_operator(spec["inner"]))
        if kind == "sum":
            return Sum(make_operator(spec["left"]), make_operator(spec["right"]))
    except KeyError as exc:
        raise ValidationError(f"operator spec for kind '{kind}' misses field {exc}")
    raise ValidationError(f"unknown operator kind '{kind}'")


def sample_graph_arrays(op, lam, rng, m, center=None, scale=1.0):
    """Draw ``m`` exact graph pairs of ``op`` as arrays (Z, U) of shape (m, n).

    Resolvent-capable operators are probed through the resolvent: for a
    random w, z = J_lam(w) and u = (w - z)/lam lies in T(z) exactly.
    Single-valued operators are evaluated at random points. A sum of one
    single-valued and one resolvent-capable child is probed through the
    resolvent child, then the evaluation is added, which again yields
    exact graph points of the sum.
    """
    lam = _require_lambda(lam)
    m = int(m)
    if m < 0:
        raise ValidationError("number of samples must be >= 0")
    n = op.dim
    if center is None:
        center = np.zeros(n)
    center = as_vector(center, dim=n, name="center")
    scale = float(scale)
    if m == 0:
        return np.empty((0, n)), np.empty((0, n))

    if isinstance(op, Scaled):
        # Delegate so that the z-cloud matches the inner operator's cloud
        # for the same seed and the images scale by lam_scale.
        Z, U = sample_graph_arrays(op.inner, lam, rng, m, center=center, scale=scale)
        return Z, op.lam_scale * U

    caps = op.capabilities
    if Capability.RESOLVENT in caps:
        W = center + scale * rng.standard_normal((m, n))
        Z = op.resolvent(lam, W)
        return Z, (W - Z) / lam
    if Capability.EVAL in caps:
        Z = center + scale * rng.standard_normal((m, n))
        return Z, op.eval(Z)
    if isinstance(op, Sum):
        children = _sum_sample_children(op)
        if children is not None:
            ev, res = children
            W = center + scale * rng.standard_normal((m, n))
            Z = res.resolvent(lam, W)
            return Z, (W - Z) / lam + ev.eval(Z)
    raise CapabilityError(f"{op.kind} operator supports no graph sampling strategy")


def graph_sample(op, lam, seed, m, center=None, scale=1.0):
    """Sample ``m`` pairs (z, u) with u in T(z) exactly, deterministic in seed."""
    rng = np.random.default_rng(seed)
    Z, U = sample_graph_arrays(op, lam, rng, m, center=center, scale=scale)
    return [(Z[i].copy(), U[i].copy()) for i in range(Z.shape[0])]
