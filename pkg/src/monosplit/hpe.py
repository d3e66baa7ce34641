"""Relative-error proximal iteration with per-step certificate checks.

The driver accepts, at each iteration, a certificate (y, v, eps) for an
inexact proximal step at the current point x with step size lam, verifies
the acceptance inequality

    ||lam*v + y - x||^2 + 2*lam*eps <= sigma^2 * ||y - x||^2

online, and then updates x <- x - lam*v (plus an optional injected error
with prescribed summable norms). With sigma = 0 this reproduces the exact
proximal point method; the splitting methods in :mod:`monosplit.splittings`
plug in as certificate oracles.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .enlargement import Certificate
from .errors import CapabilityError, CertificateRejected, ValidationError
from .operators import Capability, MonotoneOp, as_vector


def inequality_tol(step_norm: float) -> float:
    """Relative tolerance for the acceptance inequality; both sides are
    quadratic in the step length."""
    return 1e-9 * (1.0 + step_norm**2)


@dataclass(frozen=True, eq=False)
class SigmaReport:
    """Evaluation of the acceptance inequality for one certificate."""

    lhs: float
    rhs: float
    satisfied: bool
    z: np.ndarray
    step_norm: float
    bound_v_ok: bool
    bound_zy_ok: bool
    tol: float


@dataclass(frozen=True, eq=False)
class StepRecord:
    """Audit record of one accepted iteration."""

    k: int
    lam: float
    cert: Certificate
    x_prev: np.ndarray
    x_next: np.ndarray
    injected_error: np.ndarray
    sigma_report: SigmaReport


@dataclass(frozen=True)
class ErrorSchedule:
    """Injected error sequence with ||r_k|| = c * k**(-p).

    Directions are seeded pseudo-random unit vectors, a pure function of
    (seed, k). The sequence is summable iff p > 1.
    """

    c: float
    p: float
    seed: int

    def __post_init__(self):
        if not (self.c >= 0.0) or not np.isfinite(self.c):
            raise ValidationError(f"error amplitude c must be >= 0, got {self.c}")
        if not (self.p > 0.0) or not np.isfinite(self.p):
            raise ValidationError(f"error exponent p must be > 0, got {self.p}")

    @property
    def summable(self) -> bool:
        return self.p > 1.0

    def norm_at(self, k: int) -> float:
        return self.c * float(k) ** (-self.p)

    def vector_at(self, k: int, dim: int) -> np.ndarray:
        if self.c == 0.0:
            return np.zeros(dim)
        rng = np.random.default_rng([self.seed, int(k)])
        g = rng.standard_normal(dim)
        norm = np.linalg.norm(g)
        if norm < 1e-300:  # pragma: no cover - probability zero
            g = np.zeros(dim)
            g[0] = 1.0
            norm = 1.0
        return (self.norm_at(k) / norm) * g

    def partial_sum(self, up_to: int) -> float:
        ks = np.arange(1, up_to + 1, dtype=float)
        return float(self.c * np.sum(ks**-self.p))


def make_error_schedule(c: float, p: float, seed: int) -> ErrorSchedule:
    """Build a validated error schedule with norms c * k**(-p)."""
    return ErrorSchedule(c=float(c), p=float(p), seed=int(seed))


@dataclass
class HpeConfig:
    """Solver parameters.

    ``lambdas`` is either a constant step size or a per-iteration list;
    a list shorter than ``max_iters`` repeats its last entry. All step
    sizes must be positive and sigma must lie in [0, 1).
    """

    sigma: float
    lambdas: float | list[float]
    max_iters: int
    stop_tol: float
    error_schedule: ErrorSchedule | None = None
    policy: str = "strict"

    def __post_init__(self):
        self.sigma = float(self.sigma)
        if not (0.0 <= self.sigma < 1.0):
            raise ValidationError(f"sigma must lie in [0, 1), got {self.sigma}")
        if isinstance(self.lambdas, (int, float)):
            self.lambdas = [float(self.lambdas)]
        else:
            self.lambdas = [float(l) for l in self.lambdas]
        if not self.lambdas or any(not (l > 0.0) or not np.isfinite(l) for l in self.lambdas):
            raise ValidationError("all step sizes must be positive and finite")
        self.max_iters = int(self.max_iters)
        if self.max_iters < 1:
            raise ValidationError("max_iters must be >= 1")
        self.stop_tol = float(self.stop_tol)
        if not (self.stop_tol > 0.0):
            raise ValidationError("stop_tol must be positive")
        if self.policy not in ("strict", "warn"):
            raise ValidationError(f"unknown rejection policy '{self.policy}'")

    @property
    def lam_lo(self) -> float:
        return min(self.lambdas)

    @property
    def lam_hi(self) -> float:
        return max(self.lambdas)

    def lambda_at(self, k: int) -> float:
        return self.lambdas[min(k - 1, len(self.lambdas) - 1)]


@dataclass
class SolveTrace:
    """Full run history: accepted step records plus termination reason."""

    records: list[StepRecord] = field(default_factory=list)
    reason: str = "max_iters"
    x_final: np.ndarray | None = None

    @property
    def iterations(self) -> int:
        return len(self.records)

    @property
    def final_residual(self) -> float:
        if not self.records:
            return float("nan")
        return step_residual(self.records[-1].cert, self.records[-1].x_prev)

    def distances_to(self, x_star: np.ndarray) -> np.ndarray:
        """Distances [d_0, d_1, ..., d_K] of the iterates to x_star."""
        if not self.records:
            return np.array([])
        pts = [self.records[0].x_prev] + [r.x_next for r in self.records]
        return np.array([np.linalg.norm(x_star - p) for p in pts])


def step_residual(cert: Certificate, x_prev: np.ndarray) -> float:
    """Stopping quantity max(||v||, eps, ||y - x_prev||)."""
    return max(
        float(np.linalg.norm(cert.v)),
        float(cert.eps),
        float(np.linalg.norm(cert.y - x_prev)),
    )


def check_sigma_resolvent(x, lam: float, sigma: float, cert: Certificate) -> SigmaReport:
    """Evaluate the acceptance inequality and the induced step bounds.

    When satisfied, z = x - lam*v is an admissible inexact proximal point
    for step size lam and relative error sigma; the report also checks
    ||lam*v|| <= (1+sigma)||y-x|| and ||z-y|| <= sigma||y-x||, which every
    accepted step implies.
    """
    lam = float(lam)
    if not (lam > 0.0):
        raise ValidationError(f"step size must be positive, got {lam}")
    x = as_vector(x, dim=cert.dim, name="x")
    step = cert.y - x
    step_norm = float(np.linalg.norm(step))
    lhs = float(np.linalg.norm(lam * cert.v + step) ** 2 + 2.0 * lam * cert.eps)
    rhs = float(sigma**2 * step_norm**2)
    tol = inequality_tol(step_norm)
    z = x - lam * cert.v
    return SigmaReport(
        lhs=lhs,
        rhs=rhs,
        satisfied=bool(lhs <= rhs + tol),
        z=z,
        step_norm=step_norm,
        bound_v_ok=bool(lam * np.linalg.norm(cert.v) <= (1.0 + sigma) * step_norm + tol),
        bound_zy_ok=bool(np.linalg.norm(z - cert.y) <= sigma * step_norm + tol),
        tol=tol,
    )


def exact_prox_oracle(op: MonotoneOp):
    """Certificate oracle computing the exact resolvent (eps = 0 always)."""
    if Capability.RESOLVENT not in op.capabilities:
        raise CapabilityError(f"{op.kind} operator has no resolvent capability")

    def oracle(x, lam):
        y = op.resolvent(lam, x)
        return Certificate(y=y, v=(x - y) / lam, eps=0.0)

    return oracle


def hpe_solve(oracle, x0, config: HpeConfig, monitors=()) -> SolveTrace:
    """Run the relative-error proximal iteration from x0.

    ``oracle(x, lam)`` must return a :class:`Certificate` for an inexact
    proximal step at x. Each certificate is validated against
    config.sigma before the update x <- x - lam*v (+ injected error); a
    failing certificate aborts under the strict policy and only warns
    under "warn". Iteration stops once
    max(||v||, eps, ||y - x||) <= stop_tol, which certifies an
    approximate zero at y, or after max_iters steps.
    """
    x = as_vector(x0, name="x0")
    schedule = config.error_schedule
    if schedule is not None and not schedule.summable:
        warnings.warn(
            f"error schedule with p={schedule.p} <= 1 is not summable; "
            "convergence is no longer guaranteed",
            RuntimeWarning,
            stacklevel=2,
        )
    trace = SolveTrace(records=[], reason="max_iters", x_final=x)
    for k in range(1, config.max_iters + 1):
        lam = config.lambda_at(k)
        cert = oracle(x, lam)
        report = check_sigma_resolvent(x, lam, config.sigma, cert)
        if not report.satisfied:
            if config.policy == "strict":
                raise CertificateRejected(
                    f"step {k}: certificate violates the acceptance inequality "
                    f"(lhs={report.lhs:.6e} > rhs={report.rhs:.6e} + tol)",
                    k=k,
                    report=report,
                    records=trace.records,
                )
            warnings.warn(
                f"step {k}: certificate rejected (lhs={report.lhs:.3e}, "
                f"rhs={report.rhs:.3e}); continuing under policy='warn'",
                RuntimeWarning,
                stacklevel=2,
            )
        r = (
            schedule.vector_at(k, x.size)
            if schedule is not None
            else np.zeros(x.size)
        )
        x_next = x - lam * cert.v + r
        if not np.all(np.isfinite(x_next)):
            raise ValidationError(f"iterate became non-finite at step {k}")
        record = StepRecord(
            k=k,
            lam=lam,
            cert=cert,
            x_prev=x,
            x_next=x_next,
            injected_error=r,
            sigma_report=report,
        )
        trace.records.append(record)
        for monitor in monitors:
            monitor(record)
        x = x_next
        trace.x_final = x
        if step_residual(cert, record.x_prev) <= config.stop_tol:
            trace.reason = "converged"
            break
    return trace
