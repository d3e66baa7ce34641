"""Enlargement certificates and their sampling-based falsifier.

A certificate (y, v, eps) claims that v belongs to the eps-enlargement of
an operator T at y, i.e. <y - z, v - u> >= -eps against every graph pair
(z, u) of T. The falsifier samples graph pairs and reports the worst
violation: a *fail* disproves the membership (up to a rounding
tolerance), while a *pass* is only necessary evidence, since the
membership quantifies over the whole graph.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BasePointMismatch, CapabilityError, ValidationError
from .operators import Capability, MonotoneOp, as_vector, sample_graph_arrays

# Rounding floor for the nonnegativity of eps. Projection-based steps
# produce eps as an inner product that is nonnegative in exact arithmetic
# but may round to a tiny negative float.
EPS_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class Certificate:
    """Inexact-step evidence: point y, enlargement element v, tolerance eps."""

    y: np.ndarray
    v: np.ndarray
    eps: float

    def __post_init__(self):
        y = as_vector(self.y, name="y")
        v = as_vector(self.v, dim=y.size, name="v")
        eps = float(self.eps)
        if not np.isfinite(eps) or eps < -EPS_FLOOR:
            raise ValidationError(f"certificate eps must be >= 0, got {eps}")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "eps", eps)

    @property
    def dim(self) -> int:
        return self.y.size


@dataclass(frozen=True, eq=False)
class ProbeVerdict:
    """Outcome of a falsification run.

    ``worst_gap`` is the most negative value of <y - z, v - u> + eps over
    the probes; ``passed`` holds iff worst_gap >= -tol_gap. Passing does
    not prove membership (the probes cover finitely many graph points);
    failing disproves it up to tol_gap.
    """

    passed: bool
    worst_gap: float
    witness: tuple[np.ndarray, np.ndarray] | None
    tol_gap: float
    n_probes: int


def check_certificate(
    op: MonotoneOp,
    cert: Certificate,
    lam_probe: float = 1.0,
    seed: int = 0,
    m: int = 128,
) -> ProbeVerdict:
    """Probe the membership claim of ``cert`` against sampled graph pairs.

    Probes are drawn around the certificate's base point (isotropic
    Gaussian inputs centered at cert.y with scale 1 + ||cert.y||), plus
    the deterministic probe z = cert.y whenever the operator is
    single-valued there.
    """
    if m < 1:
        raise ValidationError("falsifier needs at least one probe")
    rng = np.random.default_rng(seed)
    scale = 1.0 + float(np.linalg.norm(cert.y))
    Z, U = sample_graph_arrays(op, lam_probe, rng, m, center=cert.y, scale=scale)
    if Capability.EVAL in op.capabilities:
        Z = np.vstack([Z, cert.y])
        U = np.vstack([U, op.eval(cert.y)])

    gaps = (cert.y - Z) @ cert.v - np.einsum("ij,ij->i", cert.y - Z, U) + cert.eps
    worst = int(np.argmin(gaps))
    worst_gap = float(gaps[worst])

    centroid = Z.mean(axis=0)
    diam = 2.0 * float(np.max(np.linalg.norm(Z - centroid, axis=1)))
    tol_gap = 1e-9 * (1.0 + float(np.linalg.norm(cert.v)) * diam)

    return ProbeVerdict(
        passed=bool(worst_gap >= -tol_gap),
        worst_gap=worst_gap,
        witness=(Z[worst].copy(), U[worst].copy()),
        tol_gap=tol_gap,
        n_probes=Z.shape[0],
    )


def transport_cocoercive(A: MonotoneOp, x, z) -> Certificate:
    """Certify A(z) as an enlargement element of a cocoercive A at x.

    For an alpha-cocoercive A the value carried over from z is valid at x
    with eps = ||x - z||^2 / (4*alpha).
    """
    if Capability.EVAL not in A.capabilities:
        raise CapabilityError("transport requires a single-valued operator")
    if A.alpha is None:
        raise CapabilityError("transport requires a cocoercivity modulus alpha")
    x = as_vector(x, dim=A.dim, name="x")
    z = as_vector(z, dim=A.dim, name="z")
    eps = float(np.linalg.norm(x - z) ** 2 / (4.0 * A.alpha))
    return Certificate(y=x, v=A.eval(z), eps=eps)


def combine_sum(cert_a: Certificate, cert_b: Certificate) -> Certificate:
    """Add two certificates sharing the same base point.

    Valid for the sum operator whenever each input is valid for its own
    operator; the tolerances add.
    """
    if cert_a.dim != cert_b.dim or not np.array_equal(cert_a.y, cert_b.y):
        raise BasePointMismatch("certificates have different base points")
    return Certificate(
        y=cert_a.y, v=cert_a.v + cert_b.v, eps=cert_a.eps + cert_b.eps
    )


def scale_certificate(cert: Certificate, lam: float) -> Certificate:
    """Rescale a certificate: valid for lam*T with element lam*v and eps lam*eps."""
    lam = float(lam)
    if not (lam > 0.0):
        raise ValidationError(f"scaling factor must be positive, got {lam}")
    return Certificate(y=cert.y, v=lam * cert.v, eps=lam * cert.eps)
