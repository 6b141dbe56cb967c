"""Post-hoc analysis of solver runs.

Convergence-order estimation from step norms, null/range error decomposition
against ground truth, optimization-gain histories, and safeguard-behavior
summaries.  All functions here are pure over immutable reports and safe for
concurrent use.
"""

from dataclasses import dataclass

import numpy as np

__all__ = [
    "OrderUndefined",
    "MissingGroundTruth",
    "ConvergenceReport",
    "estimate_order",
    "decompose_errors",
    "gain_history",
    "quasi_restart_count",
    "null_space_gamma",
]

# sigma_k = |P_R e| / |P_N e| is reported as inf below this denominator
_SIGMA_FLOOR = 1e-30


class OrderUndefined(Exception):
    """Too few eligible step norms to estimate a convergence order."""


class MissingGroundTruth(Exception):
    """The requested diagnostic needs ground-truth data the problem lacks."""


@dataclass(frozen=True)
class ConvergenceReport:
    """Full history of a solve plus its termination status.

    ``status`` is one of ``converged``, ``diverged``, ``singular_jacobian``
    or ``max_iter``.  ``records`` holds one IterationRecord per step taken;
    ``x_final`` is the iterate at termination (the approximate root when
    ``status == "converged"``).  Reports are immutable once returned.
    """

    records: tuple
    status: str
    iterations: int
    x_final: np.ndarray | None = None
    error_decomposition: np.ndarray | None = None

    @property
    def residual_norms(self):
        return np.array([rec.residual_norm for rec in self.records])

    @property
    def step_norms(self):
        return np.array([rec.step_norm for rec in self.records])

    @property
    def r_history(self):
        """Adaptive safeguard parameter r per safeguarded iteration."""
        return np.array(
            [rec.r_used for rec in self.records if rec.r_used is not None]
        )

    @property
    def q_term(self):
        """Terminal convergence-order estimate, or None when undefined."""
        norms = [sn for sn in self.step_norms if sn > 0.0]
        try:
            return estimate_order(norms)[1]
        except (OrderUndefined, ValueError):
            return None


def estimate_order(step_norms):
    """Per-step convergence-order estimates q and the terminal order q_term.

    For consecutive step norms a, b with both below 1 the estimate is
    ``q = log(b) / log(a)``; pairs straddling 1 are skipped since the
    log-ratio is meaningless there.  ``q_term`` is the median of the last
    three eligible q values (fewer when the run is short).

    Raises OrderUndefined when fewer than 3 step norms below 1 are
    available.
    """
    norms = np.asarray(step_norms, dtype=float)
    if norms.ndim != 1:
        raise ValueError("step_norms must be a 1-D sequence")
    if np.any(norms <= 0.0):
        raise ValueError("step norms must be positive")
    qs = []
    for a, b in zip(norms[:-1], norms[1:]):
        if a < 1.0 and b < 1.0:
            qs.append(np.log(b) / np.log(a))
    if np.count_nonzero(norms < 1.0) < 3 or not qs:
        raise OrderUndefined(
            f"need at least 3 step norms below 1, have {np.count_nonzero(norms < 1.0)}"
        )
    qs = np.asarray(qs)
    return qs, float(np.median(qs[-3:]))


def decompose_errors(report, truth):
    """Split the error at every iterate into null and range components.

    With a one-dimensional null space spanned by the unit vector phi the
    orthogonal projections are P_N = phi phi^T and P_R = I - phi phi^T.
    Returns an array of shape (iterations, 3) with columns
    ``(|P_N e_k|, |P_R e_k|, sigma_k)`` where ``sigma_k`` is their ratio
    (inf when the null component is below 1e-30).
    """
    if truth is None or truth.root is None or truth.null_vector is None:
        raise MissingGroundTruth("need both a root and a null vector")
    xstar = np.asarray(truth.root, dtype=float)
    phi = np.asarray(truth.null_vector, dtype=float)
    out = np.empty((len(report.records), 3))
    for i, rec in enumerate(report.records):
        e = rec.x - xstar
        a = float(phi @ e)
        pn = abs(a)
        pr = float(np.linalg.norm(e - a * phi))
        out[i] = (pn, pr, pr / pn if pn >= _SIGMA_FLOOR else np.inf)
    return out


def gain_history(report):
    """Optimization gains per mixing step: (theta, theta_lambda).

    ``theta`` measures how much the unconstrained mixing coefficient shrinks
    the Newton step; ``theta_lambda`` is the same ratio for the safeguarded
    (lambda-scaled) coefficient, and equals ``theta`` on unsafeguarded steps.
    """
    pairs = [
        (rec.theta, rec.theta_lambda)
        for rec in report.records
        if rec.theta is not None
    ]
    if not pairs:
        raise ValueError("the run contains no Anderson-mixing steps")
    theta = np.array([t for t, _ in pairs])
    theta_lambda = np.array([tl for _, tl in pairs])
    return theta, theta_lambda


def quasi_restart_count(report, r_hat):
    """Number of safeguarded iterations with r < r_hat before the terminal decay.

    The terminal decay is the maximal strictly-decreasing suffix of the
    r history; iterations inside it are the expected asymptotic behavior,
    while earlier dips below r_hat mark transient quasi-restarts.  Runs
    without safeguarded iterations count zero.
    """
    r = [rec.r_used for rec in report.records if rec.r_used is not None]
    if not r:
        return 0
    start = len(r) - 1
    while start > 0 and r[start] < r[start - 1]:
        start -= 1
    return int(sum(1 for v in r[:start] if v < r_hat))


def null_space_gamma(report, truth):
    """Mixing coefficient restricted to the null space, per mixing step.

    For consecutive steps w_next, w_prev and unit null vector phi this is

        (P_N w_next)^T (P_N w_next - P_N w_prev) / |P_N w_next - P_N w_prev|^2

    which reduces to a/(a - b) with a = phi.w_next and b = phi.w_prev.
    Computable only with ground truth; entries are NaN where the projected
    steps coincide.  Returned array aligns with ``report.records[1:]``.
    """
    if truth is None or truth.null_vector is None:
        raise MissingGroundTruth("need a null vector")
    phi = np.asarray(truth.null_vector, dtype=float)
    proj = [float(phi @ rec.w) for rec in report.records]
    out = np.full(max(len(proj) - 1, 0), np.nan)
    for i in range(1, len(proj)):
        a, b = proj[i], proj[i - 1]
        d = a - b
        if abs(d) > _SIGMA_FLOOR:
            out[i - 1] = a / d
    return out
