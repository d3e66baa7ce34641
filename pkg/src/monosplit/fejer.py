"""Runtime monitors for distance-monotone convergence.

A run is Fejer monotone toward a reference solution when the distance to
it never increases; it is quasi-Fejer monotone when the increase at step
k is covered by a summable perturbation sequence rho_k. The monitors
here verify the per-step inequalities on a recorded trace. The
asymptotic companion property (vanishing per-step progress forces limit
points into the solution set) cannot be certified from finitely many
iterates; this module instead ships an explicit one-dimensional map that
is Fejer convergent yet violates that property, as a boundary fixture.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, ValidationError
from .operators import as_vector

DEFAULT_SLACK_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class FejerReport:
    """Per-step slack audit of a run against a reference solution.

    slack_k = (d_{k-1} + rho_k) - d_k with d_k the distance of iterate k
    to the reference. Verdicts: "fejer" (all slacks >= -tol with rho = 0),
    "quasi_fejer" (all slacks >= -tol with nonzero rho), "violated".
    """

    slacks: np.ndarray
    min_slack: float
    rho_partial_sum: float
    verdict: str
    tol: float


def p1_monitor(trace, x_star, tol: float = DEFAULT_SLACK_TOL) -> FejerReport:
    """Classify a recorded run as fejer / quasi_fejer / violated.

    rho_k is the norm of the error injected at step k; an empty trace is
    vacuously "fejer".
    """
    if not trace.records:
        return FejerReport(
            slacks=np.array([]),
            min_slack=float("inf"),
            rho_partial_sum=0.0,
            verdict="fejer",
            tol=tol,
        )
    x_star = as_vector(x_star, name="x_star")
    if x_star.size != trace.records[0].x_prev.size:
        raise DimensionError(
            f"reference has dimension {x_star.size}, trace has "
            f"{trace.records[0].x_prev.size}"
        )
    d = trace.distances_to(x_star)
    rho = np.array([np.linalg.norm(r.injected_error) for r in trace.records])
    slacks = d[:-1] + rho - d[1:]
    min_slack = float(slacks.min())
    if min_slack < -tol:
        verdict = "violated"
    elif np.all(rho == 0.0):
        verdict = "fejer"
    else:
        verdict = "quasi_fejer"
    return FejerReport(
        slacks=slacks,
        min_slack=min_slack,
        rho_partial_sum=float(rho.sum()),
        verdict=verdict,
        tol=tol,
    )


def quasi_fejer_check(distances, rhos, p: float = 1.0, tol: float = 1e-12) -> bool:
    """True iff d_n**p <= d_{n-1}**p + rho_n (+ tol) holds for every n."""
    d = np.asarray(distances, dtype=float)
    rho = np.asarray(rhos, dtype=float)
    if d.ndim != 1 or rho.ndim != 1 or rho.size != d.size - 1:
        raise ValidationError("need len(rhos) == len(distances) - 1")
    if np.any(d < 0.0) or np.any(rho < 0.0):
        raise ValidationError("distances and perturbations must be nonnegative")
    if not (p > 0.0):
        raise ValidationError(f"exponent p must be positive, got {p}")
    dp = d**p
    return bool(np.all(dp[1:] <= dp[:-1] + rho + tol))


@dataclass(frozen=True)
class BoundaryFixture:
    """A scalar map that is Fejer convergent to {0} but whose constant
    iteration-map sequence does not force limit points into {0}.

    The witness sequence z_k = 1 maps to -1 at every index: the per-step
    progress |0 - z_k| - |0 - F(z_k)| is identically zero while the
    (constant) limit 1 is not a solution.
    """

    witness_z: float = 1.0
    omega: tuple[float, ...] = (0.0,)

    @staticmethod
    def map(x: float) -> float:
        return -x if x > 0 else 0.5 * x

    def iterates(self, x0: float, n: int) -> np.ndarray:
        xs = [float(x0)]
        for _ in range(n):
            xs.append(self.map(xs[-1]))
        return np.array(xs)

    @property
    def witness_image(self) -> float:
        return self.map(self.witness_z)

    def witness_progress(self, n: int) -> np.ndarray:
        """Progress |0 - z_k| - |0 - F(z_k)| of the witness, identically 0."""
        z, fz = self.witness_z, self.witness_image
        return np.full(n, abs(0.0 - z) - abs(0.0 - fz))

    @property
    def witness_limit_in_omega(self) -> bool:
        return self.witness_z in self.omega


def p2_counterexample() -> BoundaryFixture:
    """The boundary fixture exhibiting Fejer convergence without the
    asymptotic progress property."""
    return BoundaryFixture()
