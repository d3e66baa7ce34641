"""Test problems with independently derived reference solutions.

Every problem pairs a single-valued A with a resolvent-capable B and
carries a reference solution whose provenance is either a closed form or
the brute-force active-set oracle below -- never the output of a solver
under test. References are re-verified at construction through the
residual test: u = -A(x*) must be realizable in B(x*), checked via
resolvent(B, 1, x* + u) = x*.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import OracleError, ValidationError
from .operators import (
    Affine,
    GradQuadratic,
    MonotoneOp,
    NormalConeBox,
    SubdiffL1,
    as_matrix,
    as_vector,
    soft_threshold,
)

REFERENCE_RESIDUAL_TOL = 1e-8

# The 3^n pattern enumeration is only meant for desk-scale instances.
MAX_ORACLE_DIM = 8


@dataclass
class Problem:
    """An inclusion instance with operators, moduli and a vetted reference."""

    name: str
    A: MonotoneOp
    B: MonotoneOp
    x_star: np.ndarray
    x_star_provenance: str
    methods: tuple[str, ...]
    lambda_range: dict[str, tuple[float, float]]
    x0_default: np.ndarray
    alpha: float | None = None
    L: float | None = None
    exact_resolvent: Callable[[float, np.ndarray], np.ndarray] | None = None
    dim: int = field(init=False)

    def __post_init__(self):
        self.dim = self.A.dim
        if self.alpha is None:
            self.alpha = self.A.alpha
        if self.L is None:
            self.L = self.A.lip
        self.x_star = as_vector(self.x_star, dim=self.dim, name="x_star")
        self.x0_default = as_vector(self.x0_default, dim=self.dim, name="x0_default")
        residual = reference_residual(self)
        if residual > REFERENCE_RESIDUAL_TOL:
            raise OracleError(
                f"problem '{self.name}': reference solution fails the residual "
                f"test ({residual:.3e} > {REFERENCE_RESIDUAL_TOL})"
            )


def reference_residual(problem: Problem) -> float:
    """Residual of the inclusion at the reference: with u = -A(x*),
    membership u in B(x*) is checked through B's resolvent."""
    u = -problem.A.eval(problem.x_star)
    back = problem.B.resolvent(1.0, problem.x_star + u)
    return float(np.linalg.norm(back - problem.x_star))


def make_quadratic_l1(b, w: float) -> Problem:
    """Inclusion 0 in (x - b) + d(w*||.||_1)(x); solution soft_threshold(b, w).

    A is 1-cocoercive and 1-Lipschitz, so both the cocoercive and the
    Lipschitz step rules apply. The full sum also has a closed-form
    resolvent (shrink after an averaged shift), exposed for exact
    proximal runs.
    """
    b = as_vector(b, name="b")
    w = float(w)
    if not (w > 0.0):
        raise ValidationError(f"l1 weight must be positive, got {w}")
    n = b.size
    A = GradQuadratic(np.eye(n), b)
    B = SubdiffL1(np.full(n, w))
    x_star = soft_threshold(b, w)

    def exact_resolvent(lam, x):
        return soft_threshold(x + lam * b, lam * w) / (1.0 + lam)

    return Problem(
        name="quadratic_l1",
        A=A,
        B=B,
        x_star=x_star,
        x_star_provenance="closed-form",
        methods=("fb", "tseng", "hpe_exact"),
        lambda_range={"fb": (1e-6, 2.0), "tseng": (1e-6, 1.0), "hpe_exact": (1e-6, np.inf)},
        x0_default=np.zeros(n),
        exact_resolvent=exact_resolvent,
    )


def make_rotation_vi() -> Problem:
    """Rotation field on the box [-1, 1]^2; unique solution at the origin.

    The field is monotone and 1-Lipschitz but not cocoercive, so the
    forward-backward preconditions reject this instance.
    """
    A = Affine(np.array([[0.0, 1.0], [-1.0, 0.0]]), np.zeros(2))
    B = NormalConeBox(np.array([-1.0, -1.0]), np.array([1.0, 1.0]))
    return Problem(
        name="rotation_vi",
        A=A,
        B=B,
        x_star=np.zeros(2),
        x_star_provenance="closed-form",
        methods=("tseng", "korpelevich"),
        lambda_range={"tseng": (1e-6, 1.0), "korpelevich": (1e-6, 1.0)},
        x0_default=np.array([1.0, 0.0]),
    )


def solve_box_vi_active_set(M, q, lo, hi, tol: float = 1e-9) -> np.ndarray:
    """Brute-force reference for 0 in (Mx + q) + N_box(x).

    Enumerates all 3^n active-set patterns (each coordinate at its lower
    bound, upper bound, or free), solves the reduced linear system and
    verifies box containment plus the sign conditions on the residual
    g = Mx + q (g_i >= 0 where the lower bound binds, g_i <= 0 where the
    upper bound binds, g_i = 0 on free coordinates). Returns the first
    verified pattern's point.
    """
    M = as_matrix(M)
    q = as_vector(q, dim=M.shape[0], name="q")
    lo = as_vector(lo, dim=q.size, name="lo")
    hi = as_vector(hi, dim=q.size, name="hi")
    if np.any(lo > hi):
        raise ValidationError("box requires lo <= hi")
    n = q.size
    if n > MAX_ORACLE_DIM:
        raise ValidationError(f"active-set oracle supports dimension <= {MAX_ORACLE_DIM}")
    scale = 1.0 + float(np.abs(M).sum(axis=1).max()) * max(
        float(np.abs(lo).max()), float(np.abs(hi).max()), 1.0
    ) + float(np.abs(q).max())
    g_tol = tol * scale
    for pattern in itertools.product((0, 1, 2), repeat=n):
        pat = np.array(pattern)
        free = np.where(pat == 0)[0]
        fixed = np.where(pat != 0)[0]
        x = np.where(pat == 1, lo, hi).astype(float)
        if free.size:
            rhs = -q[free]
            if fixed.size:
                rhs = rhs - M[np.ix_(free, fixed)] @ x[fixed]
            Mff = M[np.ix_(free, free)]
            try:
                x[free] = np.linalg.solve(Mff, rhs)
            except np.linalg.LinAlgError:
                x[free] = np.linalg.lstsq(Mff, rhs, rcond=None)[0]
            if np.any(x[free] < lo[free] - tol) or np.any(x[free] > hi[free] + tol):
                continue
        g = M @ x + q
        if free.size and np.max(np.abs(g[free])) > g_tol:
            continue
        lo_set = np.where(pat == 1)[0]
        hi_set = np.where(pat == 2)[0]
        if lo_set.size and np.min(g[lo_set]) < -g_tol:
            continue
        if hi_set.size and np.max(g[hi_set]) > g_tol:
            continue
        return np.clip(x, lo, hi)
    raise OracleError("no active-set pattern satisfies the optimality conditions")


def make_affine_box_vi(M, q, lo, hi) -> Problem:
    """Affine variational inequality over a box, reference from the
    active-set oracle."""
    A = Affine(M, q)
    B = NormalConeBox(lo, hi)
    x_star = solve_box_vi_active_set(M, q, lo, hi)
    return Problem(
        name="affine_box_vi",
        A=A,
        B=B,
        x_star=x_star,
        x_star_provenance="active-set-oracle",
        methods=("tseng", "korpelevich"),
        lambda_range={
            "tseng": (1e-6, 1.0 / A.lip if A.lip > 0 else np.inf),
            "korpelevich": (1e-6, 1.0 / A.lip if A.lip > 0 else np.inf),
        },
        x0_default=0.5 * (B.lo + B.hi),
    )


_PROBLEM_FIELDS = {
    "quadratic_l1": {"b", "w"},
    "rotation_vi": set(),
    "affine_box_vi": {"M", "q", "lo", "hi"},
}


def get_problem(spec) -> Problem:
    """Resolve a problem from its name or an inline dict description."""
    if isinstance(spec, str):
        spec = {"name": spec}
    if not isinstance(spec, dict) or "name" not in spec:
        raise ValidationError("problem spec must be a name or a dict with 'name'")
    spec = dict(spec)
    name = spec.pop("name")
    if name not in _PROBLEM_FIELDS:
        raise ValidationError(f"unknown problem '{name}'")
    extra = set(spec) - _PROBLEM_FIELDS[name]
    if extra:
        raise ValidationError(f"unknown fields for problem '{name}': {sorted(extra)}")
    if name == "quadratic_l1":
        return make_quadratic_l1(spec.get("b", [3.0]), spec.get("w", 1.0))
    if name == "rotation_vi":
        return make_rotation_vi()
    missing = _PROBLEM_FIELDS["affine_box_vi"] - set(spec)
    if missing:
        raise ValidationError(f"problem 'affine_box_vi' misses fields {sorted(missing)}")
    return make_affine_box_vi(spec["M"], spec["q"], spec["lo"], spec["hi"])
