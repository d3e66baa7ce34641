"""Splitting methods as certificate-producing inexact proximal steps.

Each step solves one iteration of 0 in (A + B)(x) and emits a
:class:`~monosplit.enlargement.Certificate` for the full sum operator:

* forward-backward: A cocoercive with modulus alpha, any maximal
  monotone B with computable resolvent, step sizes below 2*alpha; the
  certificate satisfies the acceptance inequality with
  sigma = sqrt(lam / (2*alpha)), with equality of both sides.
* modified forward-backward with correction (Tseng): A monotone and
  L-Lipschitz, step sizes below 1/L; certificates are exact (eps = 0)
  and satisfy the inequality with sigma = lam * L.
* extragradient projection (Korpelevich): B the normal cone of a closed
  convex set, same step-size rule and sigma = lam * L; eps is the inner
  product <nu, z - y> >= 0 of the second projection's normal component.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .enlargement import Certificate
from .errors import ValidationError
from .operators import Capability, MonotoneOp, NormalConeBall, NormalConeBox, as_vector

METHODS = ("fb", "tseng", "korpelevich")

# sigma = lam_hi * L must stay strictly below 1.
SIGMA_MARGIN = 1e-12


def _is_normal_cone(op: MonotoneOp) -> bool:
    return isinstance(op, (NormalConeBox, NormalConeBall))


@dataclass
class SplitProblem:
    """An inclusion 0 in (A + B)(x) prepared for one splitting method.

    A must be single-valued; B must expose its resolvent. The moduli
    default to the operators' own (alpha for fb, L for the other two)
    and the step-size bounds are validated against them.
    """

    A: MonotoneOp
    B: MonotoneOp
    method: str
    lam_lo: float
    lam_hi: float
    alpha: float | None = None
    L: float | None = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValidationError(f"unknown splitting method '{self.method}'")
        if Capability.EVAL not in self.A.capabilities:
            raise ValidationError("A must be single-valued (EVAL capability)")
        if Capability.RESOLVENT not in self.B.capabilities:
            raise ValidationError("B must expose a resolvent")
        if self.A.dim != self.B.dim:
            raise ValidationError("A and B must share the ambient dimension")
        self.lam_lo = float(self.lam_lo)
        self.lam_hi = float(self.lam_hi)
        if not (0.0 < self.lam_lo <= self.lam_hi):
            raise ValidationError("step bounds must satisfy 0 < lam_lo <= lam_hi")
        if self.alpha is None:
            self.alpha = self.A.alpha
        if self.L is None:
            self.L = self.A.lip
        if self.method == "fb":
            if self.alpha is None:
                raise ValidationError("forward-backward needs a cocoercivity modulus")
            if not (self.lam_hi < 2.0 * self.alpha):
                raise ValidationError(
                    f"forward-backward requires lam_hi < 2*alpha = {2.0 * self.alpha}"
                )
        else:
            if self.L is None or not (self.L > 0.0):
                raise ValidationError(f"{self.method} needs a Lipschitz constant L > 0")
            if not (self.lam_hi * self.L < 1.0 - SIGMA_MARGIN):
                raise ValidationError(
                    f"{self.method} requires lam_hi * L < 1, got {self.lam_hi * self.L}"
                )
            if self.method == "korpelevich" and not _is_normal_cone(self.B):
                raise ValidationError(
                    "korpelevich requires B to be a normal cone (projection resolvent)"
                )

    @property
    def dim(self) -> int:
        return self.A.dim


def default_sigma(prob: SplitProblem) -> float:
    """Relative-error level guaranteed by the method at its largest step."""
    if prob.method == "fb":
        if np.isinf(prob.alpha):
            return 0.0
        return float(np.sqrt(prob.lam_hi / (2.0 * prob.alpha)))
    return float(prob.lam_hi * prob.L)


def _check_fb_lambda(prob: SplitProblem, lam: float) -> float:
    lam = float(lam)
    if prob.alpha is None:
        raise ValidationError("forward-backward needs a cocoercivity modulus")
    if not (0.0 < lam < 2.0 * prob.alpha):
        raise ValidationError(f"forward-backward step requires 0 < lam < 2*alpha, got {lam}")
    return lam


def _check_lipschitz_lambda(prob: SplitProblem, lam: float) -> float:
    lam = float(lam)
    if prob.L is None or not (prob.L > 0.0):
        raise ValidationError("method needs a Lipschitz constant L > 0")
    if not (0.0 < lam < 1.0 / prob.L):
        raise ValidationError(f"step requires 0 < lam < 1/L = {1.0 / prob.L}, got {lam}")
    return lam


def fb_step(prob: SplitProblem, lam: float, x):
    """One forward-backward step: resolvent of B after an explicit A step.

    The emitted certificate carries v = (x - x_next)/lam and
    eps = ||x_next - x||^2 / (4*alpha); cocoercivity transports A(x) to
    the new point, so v is a valid enlargement element for A + B there.
    """
    lam = _check_fb_lambda(prob, lam)
    x = as_vector(x, dim=prob.dim, name="x")
    x_next = prob.B.resolvent(lam, x - lam * prob.A.eval(x))
    v = (x - x_next) / lam
    eps = float(np.linalg.norm(x_next - x) ** 2 / (4.0 * prob.alpha))
    return x_next, Certificate(y=x_next, v=v, eps=eps)


def tseng_step(prob: SplitProblem, lam: float, x):
    """One modified forward-backward step with the Lipschitz correction.

    v = (x - lam*A(x) - y)/lam + A(y) lies in (A + B)(y) exactly, so the
    certificate has eps = 0 and x_next = x - lam*v.
    """
    lam = _check_lipschitz_lambda(prob, lam)
    x = as_vector(x, dim=prob.dim, name="x")
    ax = prob.A.eval(x)
    fwd = x - lam * ax
    y = prob.B.resolvent(lam, fwd)
    ay = prob.A.eval(y)
    v = (fwd - y) / lam + ay
    x_next = y - lam * (ay - ax)
    return x_next, Certificate(y=y, v=v, eps=0.0)


def korpelevich_step(prob: SplitProblem, lam: float, x):
    """One extragradient step: two projections with A re-evaluated in between.

    With nu the normal component of the second projection,
    v = nu + A(y) and eps = <nu, z - y>, which is nonnegative up to
    rounding since y also lies in the constraint set.
    """
    lam = _check_lipschitz_lambda(prob, lam)
    if not _is_normal_cone(prob.B):
        raise ValidationError("korpelevich requires B to be a normal cone")
    x = as_vector(x, dim=prob.dim, name="x")
    y = prob.B.resolvent(lam, x - lam * prob.A.eval(x))
    ay = prob.A.eval(y)
    z = prob.B.resolvent(lam, x - lam * ay)
    nu = (x - lam * ay - z) / lam
    eps = float(nu @ (z - y))
    return z, Certificate(y=y, v=nu + ay, eps=eps)


def staged_step_with_errors(method: str, prob: SplitProblem, lam: float, x, u_err, r_err):
    """Two-stage step with stage-wise error injection and its deviation bound.

    The first stage maps x to the pair (x, y) with y the resolvent of the
    forward point; ``u_err`` (dimension 2n) perturbs that pair, ``r_err``
    (dimension n) perturbs the second-stage output. Returns the perturbed
    next iterate together with the bound L_G * ||u_err|| + ||r_err|| on
    its deviation from the exact composition, where L_G is the Lipschitz
    constant of the second stage: 1 + 2*lam_hi*L for tseng,
    1 + lam_hi*L for korpelevich.
    """
    if method not in ("tseng", "korpelevich"):
        raise ValidationError(f"staged step supports tseng/korpelevich, got '{method}'")
    lam = _check_lipschitz_lambda(prob, lam)
    if method == "korpelevich" and not _is_normal_cone(prob.B):
        raise ValidationError("korpelevich requires B to be a normal cone")
    x = as_vector(x, dim=prob.dim, name="x")
    n = prob.dim
    u_err = as_vector(u_err, dim=2 * n, name="u_err")
    r_err = as_vector(r_err, dim=n, name="r_err")

    y = prob.B.resolvent(lam, x - lam * prob.A.eval(x))
    x_stage, y_stage = x + u_err[:n], y + u_err[n:]
    if method == "tseng":
        out = y_stage - lam * (prob.A.eval(y_stage) - prob.A.eval(x_stage))
        lip_g = 1.0 + 2.0 * prob.lam_hi * prob.L
    else:
        out = prob.B.resolvent(lam, x_stage - lam * prob.A.eval(y_stage))
        lip_g = 1.0 + prob.lam_hi * prob.L
    x_next = out + r_err
    bound = lip_g * float(np.linalg.norm(u_err)) + float(np.linalg.norm(r_err))
    return x_next, bound


_STEPS = {"fb": fb_step, "tseng": tseng_step, "korpelevich": korpelevich_step}


def make_oracle(prob: SplitProblem):
    """Expose the problem's step as a certificate oracle for the driver."""
    step = _STEPS[prob.method]

    def oracle(x, lam):
        _, cert = step(prob, lam, x)
        return cert

    return oracle
