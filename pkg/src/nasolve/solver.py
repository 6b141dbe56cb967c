"""Stepping engines: Newton, Newton-Anderson, and safeguarded variants.

Four methods are provided through one ``solve`` entry point:

* ``newton``   -- plain Newton iteration.
* ``na``       -- depth-m Anderson-accelerated Newton.  Each step mixes the
  last m+1 Newton steps through a small least-squares problem; for m = 1 the
  mixing coefficient has the scalar closed form implemented in
  ``anderson_gamma_1``.
* ``gna``      -- Newton-Anderson(1) with fixed safeguarding: the Anderson
  correction is scaled by lambda in [0, 1] so the combined step stays within
  a gate beta = r * |w_next| / |w_prev| of a pure Newton step.
* ``agna``     -- the adaptive variant: r is replaced per iteration by
  r_used = min(eta, r_hat) with eta = |w_next| / |w_prev|, so safeguarding
  tightens automatically as the solve converges and quadratic convergence is
  recovered on nonsingular problems.

Safeguarding is only defined for depth m = 1.  ``switch_to_m1_at`` supports
the hybrid strategy of running NA(m) in the preasymptotic phase and dropping
to adaptively safeguarded depth 1 once steps become small.

A solve is strictly sequential; solver state is confined to one run, so
multiple solves over shared (immutable) problems may run concurrently.
"""

from dataclasses import dataclass

import numpy as np

from .diagnostics import ConvergenceReport
from .linalg import SingularMatrix, least_squares, solve_linear

__all__ = [
    "METHODS",
    "ACTIVATIONS",
    "ArmijoConfig",
    "SolverConfig",
    "SafeguardDecision",
    "IterationRecord",
    "newton_step",
    "anderson_gamma_1",
    "na_update",
    "na_m_update",
    "gamma_safeguard",
    "adaptive_gamma_safeguard",
    "armijo_backtrack",
    "solve",
]

_EPS = float(np.finfo(float).eps)

METHODS = ("newton", "na", "gna", "agna")
ACTIVATIONS = ("always", "preasymptotic", "asymptotic")


@dataclass(frozen=True)
class ArmijoConfig:
    """Backtracking linesearch on the merit function 0.5*|f|^2."""

    c1: float = 1e-4
    shrink: float = 0.5
    max_backtracks: int = 30

    def __post_init__(self):
        if not 0.0 < self.c1 < 1.0:
            raise ValueError(f"c1 must lie in (0, 1), got {self.c1}")
        if not 0.0 < self.shrink < 1.0:
            raise ValueError(f"shrink must lie in (0, 1), got {self.shrink}")
        if self.max_backtracks < 1:
            raise ValueError("max_backtracks must be at least 1")


@dataclass(frozen=True)
class SolverConfig:
    """Method selection and stopping control for ``solve``.

    ``activation`` controls when safeguarding applies for gna/agna:
    ``always`` (synonym ``preasymptotic``) safeguards every mixing step,
    ``asymptotic`` runs plain NA(1) until the step norm first drops below
    ``threshold`` and safeguards from then on.  ``switch_to_m1_at`` applies
    to method ``na`` only: NA(m) runs until the step norm drops below the
    given value, after which the solve continues as adaptively safeguarded
    depth-1 Newton-Anderson with parameter ``r_hat``.

    ``norm_weight`` optionally replaces the Euclidean norm by the weighted
    norm ``|v| = sqrt(v^T W v)`` for a symmetric positive-definite W; it
    affects step/residual norms, the safeguard ratios, and the mixing
    coefficient, and defaults to the identity.
    """

    method: str = "newton"
    m: int = 1
    r: float = 0.5
    r_hat: float = 0.5
    activation: str = "always"
    threshold: float = 1e-1
    switch_to_m1_at: float | None = None
    tol: float = 1e-10
    max_iter: int = 200
    divergence_cap: float = 1e12
    linesearch: ArmijoConfig | None = None
    norm_weight: np.ndarray | None = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; choose from {METHODS}")
        if self.m < 1:
            raise ValueError("depth m must be a positive integer")
        if self.method in ("gna", "agna") and self.m != 1:
            raise ValueError("safeguarding is only defined for depth m = 1")
        if not 0.0 < self.r < 1.0:
            raise ValueError(f"r must lie in (0, 1), got {self.r}")
        if not 0.0 < self.r_hat < 1.0:
            raise ValueError(f"r_hat must lie in (0, 1), got {self.r_hat}")
        if self.activation not in ACTIVATIONS:
            raise ValueError(
                f"unknown activation {self.activation!r}; choose from {ACTIVATIONS}"
            )
        if not self.threshold > 0.0:
            raise ValueError("activation threshold must be positive")
        if self.switch_to_m1_at is not None:
            if self.method != "na":
                raise ValueError("switch_to_m1_at applies to method 'na' only")
            if not self.switch_to_m1_at > 0.0:
                raise ValueError("switch_to_m1_at must be positive")
        if not self.tol > 0.0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if not self.divergence_cap > 0.0:
            raise ValueError("divergence_cap must be positive")


@dataclass(frozen=True)
class SafeguardDecision:
    """Which safeguard case fired and the resulting scaling lambda.

    Cases: ``not_applied`` (no safeguard evaluated this step),
    ``gamma_zero_or_ge_one`` (lambda = 0, pure Newton step),
    ``ratio_exceeded`` (lambda scaled so |lambda*gamma| hits the gate), and
    ``pass_through`` (lambda = 1, full Anderson step).
    """

    case: str
    lambda_value: float
    eta: float | None = None
    r_used: float | None = None
    beta: float | None = None

    def __post_init__(self):
        if self.case == "gamma_zero_or_ge_one" and self.lambda_value != 0.0:
            raise ValueError("case gamma_zero_or_ge_one requires lambda = 0")
        if self.case == "pass_through" and self.lambda_value != 1.0:
            raise ValueError("case pass_through requires lambda = 1")
        if not 0.0 <= self.lambda_value <= 1.0:
            raise ValueError(f"lambda must lie in [0, 1], got {self.lambda_value}")


@dataclass(frozen=True)
class IterationRecord:
    """One step of a solve: the iterate x_k, the Newton step w_{k+1}, and
    the mixing/safeguard quantities when the method produced them (None
    otherwise, e.g. on pure Newton steps)."""

    k: int
    x: np.ndarray
    w: np.ndarray
    residual_norm: float
    step_norm: float
    gamma: float | np.ndarray | None = None
    lam: float | None = None
    eta: float | None = None
    r_used: float | None = None
    beta: float | None = None
    theta: float | None = None
    theta_lambda: float | None = None
    decision: SafeguardDecision | None = None
    ls_t: float | None = None
    ls_ok: bool = True

    def __post_init__(self):
        if self.lam is not None and not 0.0 <= self.lam <= 1.0:
            raise ValueError(f"lambda must lie in [0, 1], got {self.lam}")


def newton_step(p, x):
    """Newton step w solving f'(x) w = -f(x), plus the residual norm |f(x)|.

    Propagates SingularMatrix when the Jacobian is numerically singular at
    x (the iterate left the domain of invertibility).
    """
    x = np.asarray(x, dtype=float)
    f = np.asarray(p.residual(x), dtype=float)
    J = np.asarray(p.jacobian(x), dtype=float)
    w = solve_linear(J, -f)
    return w, float(np.linalg.norm(f))


def anderson_gamma_1(w_next, w_prev):
    """Scalar depth-1 mixing coefficient (w_next - w_prev).w_next / |w_next - w_prev|^2.

    This is the unconstrained minimizer of |w_next - gamma*(w_next - w_prev)|.
    When the denominator is degenerate (steps equal to machine precision) the
    coefficient is defined as 0, i.e. a pure Newton step.
    """
    w_next = np.asarray(w_next, dtype=float)
    w_prev = np.asarray(w_prev, dtype=float)
    d = w_next - w_prev
    dd = float(d @ d)
    if np.sqrt(dd) <= _EPS * (
        float(np.linalg.norm(w_next)) + float(np.linalg.norm(w_prev))
    ):
        return 0.0
    return float((d @ w_next) / dd)


def na_update(x_k, x_km1, w_next, w_prev, gamma, lam):
    """Depth-1 Anderson update of the iterate with safeguard scaling lam.

    Returns ``x_k + w_next - lam*gamma*((x_k + w_next) - (x_km1 + w_prev))``.
    The algebraic form guarantees that lam*gamma == 0 reproduces the Newton
    iterate x_k + w_next bitwise.
    """
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda must lie in [0, 1], got {lam}")
    x_k = np.asarray(x_k, dtype=float)
    xn = x_k + np.asarray(w_next, dtype=float)
    xn_prev = np.asarray(x_km1, dtype=float) + np.asarray(w_prev, dtype=float)
    return xn - (lam * gamma) * (xn - xn_prev)


def na_m_update(iterates, steps, m):
    """Depth-m Anderson update from iterate/step histories.

    ``iterates`` holds x_{k-j}, ..., x_k (most recent last) and ``steps``
    holds the corresponding Newton steps up to w_{k+1}.  The window is
    clamped to m_k = min(k, m) columns: difference matrices F (steps) and
    E (iterates) are assembled newest-first, gamma solves the least-squares
    problem min |w_{k+1} - F gamma|, and the update is
    x_k + w_{k+1} - (E + F) gamma.

    Returns ``(next iterate, gamma vector, theta)`` where theta is the
    optimization gain |w_{k+1} - F gamma| / |w_{k+1}|.
    """
    return _na_m_update(iterates, steps, m, None, np.linalg.norm)


def _na_m_update(iterates, steps, m, lt, nrm):
    if m < 1:
        raise ValueError("depth m must be a positive integer")
    if len(steps) < 2 or len(iterates) < 2:
        raise ValueError("need at least one prior iterate and step")
    m_k = min(m, len(steps) - 1, len(iterates) - 1)
    w_next = np.asarray(steps[-1], dtype=float)
    F = np.column_stack(
        [np.asarray(steps[-1 - j]) - np.asarray(steps[-2 - j]) for j in range(m_k)]
    )
    E = np.column_stack(
        [np.asarray(iterates[-1 - j]) - np.asarray(iterates[-2 - j]) for j in range(m_k)]
    )
    if lt is None:
        gamma = least_squares(F, w_next)
    else:
        gamma = least_squares(lt @ F, lt @ w_next)
    wn = nrm(w_next)
    theta = float(nrm(w_next - F @ gamma) / wn) if wn > 0.0 else 0.0
    x_next = np.asarray(iterates[-1], dtype=float) + w_next - (E + F) @ gamma
    return x_next, gamma, theta


def _safeguard_case(gamma, beta):
    # Branch order follows the safeguarding scheme literally: the
    # gamma == 0 / gamma >= 1 test comes first, so sign(gamma) below is
    # only ever taken for gamma != 0.
    if gamma == 0.0 or gamma >= 1.0:
        return "gamma_zero_or_ge_one", 0.0
    if abs(gamma) / abs(1.0 - gamma) > beta:
        sign = 1.0 if gamma > 0.0 else -1.0
        return "ratio_exceeded", beta / (gamma * (beta + sign))
    return "pass_through", 1.0


def gamma_safeguard(w_next, w_prev, gamma, r, norm=np.linalg.norm):
    """Fixed-parameter safeguard with gate beta = r * |w_next| / |w_prev|.

    Scales the mixing coefficient by lambda: lambda = 0 when gamma is 0 or
    at least 1; lambda = beta / (gamma * (beta + sign(gamma))) when
    |gamma| / |1 - gamma| exceeds beta; lambda = 1 otherwise.
    """
    if not 0.0 < r < 1.0:
        raise ValueError(f"r must lie in (0, 1), got {r}")
    wp = float(norm(np.asarray(w_prev, dtype=float)))
    if wp <= 0.0:
        raise ValueError("previous step norm must be positive")
    eta = float(norm(np.asarray(w_next, dtype=float))) / wp
    beta = r * eta
    case, lam = _safeguard_case(gamma, beta)
    return SafeguardDecision(case=case, lambda_value=lam, eta=eta, r_used=r, beta=beta)


def adaptive_gamma_safeguard(w_next, w_prev, gamma, r_hat, norm=np.linalg.norm):
    """Adaptive safeguard with r_used = min(eta, r_hat) and beta = r_used * eta.

    Identical branch structure to ``gamma_safeguard``; only the gate
    adapts.  Since r_used <= r_hat this safeguards at least as strictly as
    the fixed scheme at equal eta.
    """
    if not 0.0 < r_hat < 1.0:
        raise ValueError(f"r_hat must lie in (0, 1), got {r_hat}")
    wp = float(norm(np.asarray(w_prev, dtype=float)))
    if wp <= 0.0:
        raise ValueError("previous step norm must be positive")
    eta = float(norm(np.asarray(w_next, dtype=float))) / wp
    r_used = min(eta, r_hat)
    beta = r_used * eta
    case, lam = _safeguard_case(gamma, beta)
    return SafeguardDecision(
        case=case, lambda_value=lam, eta=eta, r_used=r_used, beta=beta
    )


def armijo_backtrack(p, x, direction, c1, shrink, max_backtracks):
    """Backtracking linesearch on 0.5*|f|^2 along ``direction``.

    Tries t = 1, shrink, shrink^2, ... (at most ``max_backtracks`` trials)
    and returns ``(t, accepted)`` for the first t satisfying
    0.5*|f(x + t d)|^2 <= 0.5*|f(x)|^2 - c1 * t * |f(x)|^2.  When no trial
    is accepted the last trial t is returned with ``accepted = False`` so
    the caller can flag the record.
    """
    d = np.asarray(direction, dtype=float)
    if not np.all(np.isfinite(d)) or not np.any(d):
        raise ValueError("direction must be finite and nonzero")
    x = np.asarray(x, dtype=float)
    fn2 = float(np.linalg.norm(p.residual(x))) ** 2
    t = 1.0
    last = t
    for _ in range(max_backtracks):
        with np.errstate(over="ignore", invalid="ignore"):
            ft = np.asarray(p.residual(x + t * d), dtype=float)
        trial = float(ft @ ft) if np.all(np.isfinite(ft)) else np.inf
        if 0.5 * trial <= 0.5 * fn2 - c1 * t * fn2:
            return t, True
        last = t
        t *= shrink
    return last, False


def _make_norm(weight, dimension):
    """Norm callable and the transform whose Euclidean norm realizes it."""
    if weight is None:
        return np.linalg.norm, None
    W = np.asarray(weight, dtype=float)
    if W.shape != (dimension, dimension):
        raise ValueError(f"norm weight must be {dimension}x{dimension}")
    if not np.allclose(W, W.T, rtol=0.0, atol=1e-12):
        raise ValueError("norm weight must be symmetric")
    try:
        lt = np.linalg.cholesky(W).T
    except np.linalg.LinAlgError as exc:
        raise ValueError("norm weight must be positive definite") from exc

    def nrm(v):
        return float(np.linalg.norm(lt @ v))

    return nrm, lt


def _gamma1(w_next, w_prev, lt):
    if lt is None:
        return anderson_gamma_1(w_next, w_prev)
    return anderson_gamma_1(lt @ w_next, lt @ w_prev)


def _gain(w_next, w_prev, coef, step_norm, nrm):
    return float(nrm(w_next - coef * (w_next - w_prev)) / step_norm)


def solve(p, x0, cfg):
    """Iterate on problem ``p`` from ``x0`` according to ``cfg``.

    The first iterate is always a pure Newton step; mixing starts at the
    second step.  The residual norm is checked before stepping, so the
    report's records hold exactly the steps taken.  Numerical failures are
    reported through ``ConvergenceReport.status`` (``converged``,
    ``diverged``, ``singular_jacobian``, ``max_iter``); only malformed
    inputs raise.
    """
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (p.dimension,):
        raise ValueError(
            f"x0 has shape {x0.shape}, problem dimension is {p.dimension}"
        )
    nrm, lt = _make_norm(cfg.norm_weight, p.dimension)

    records = []
    xs = [x0.copy()]  # iterate history x_0, x_1, ...
    ws = []           # step history w_1, w_2, ...
    prev_step_norm = None
    # gna/agna safeguard every mixing step unless activation is asymptotic,
    # in which case plain NA(1) runs until the step norm drops below the
    # threshold (latched: all subsequent steps are safeguarded).
    safeguarded = cfg.method in ("gna", "agna") and cfg.activation != "asymptotic"
    m1_switched = False
    status = "max_iter"
    x = xs[0]
    k = 0

    while True:
        with np.errstate(over="ignore", invalid="ignore"):
            f = np.asarray(p.residual(x), dtype=float)
        rnorm = nrm(f) if np.all(np.isfinite(f)) else np.inf
        if not np.all(np.isfinite(x)) or not np.isfinite(rnorm) or rnorm >= cfg.divergence_cap:
            status = "diverged"
            break
        if rnorm <= cfg.tol:
            status = "converged"
            break
        if k >= cfg.max_iter:
            status = "max_iter"
            break
        with np.errstate(over="ignore", invalid="ignore"):
            J = np.asarray(p.jacobian(x), dtype=float)
        if not np.all(np.isfinite(J)):
            status = "diverged"
            break
        try:
            w = solve_linear(J, -f)
        except SingularMatrix:
            status = "singular_jacobian"
            break
        step_norm = nrm(w)
        if step_norm == 0.0:
            # zero step with nonzero residual: solved to machine level
            status = "converged"
            break

        if not safeguarded and cfg.method in ("gna", "agna") and step_norm < cfg.threshold:
            safeguarded = True
        if (
            cfg.method == "na"
            and cfg.switch_to_m1_at is not None
            and not m1_switched
            and step_norm < cfg.switch_to_m1_at
        ):
            m1_switched = True

        gamma = lam = r_used = beta = theta = theta_lam = None
        decision = None
        eta = step_norm / prev_step_norm if prev_step_norm is not None else None

        if k == 0 or cfg.method == "newton":
            x_next = x + w
        elif cfg.method == "na" and not m1_switched and cfg.m > 1:
            x_next, gamma, theta = _na_m_update(xs, ws + [w], cfg.m, lt, nrm)
            theta_lam = theta
            decision = SafeguardDecision(case="not_applied", lambda_value=1.0)
        else:
            gamma = _gamma1(w, ws[-1], lt)
            if cfg.method == "gna" and safeguarded:
                decision = gamma_safeguard(w, ws[-1], gamma, cfg.r, norm=nrm)
            elif (cfg.method == "agna" and safeguarded) or (
                cfg.method == "na" and m1_switched
            ):
                decision = adaptive_gamma_safeguard(w, ws[-1], gamma, cfg.r_hat, norm=nrm)
            else:
                decision = SafeguardDecision(case="not_applied", lambda_value=1.0)
            lam_used = decision.lambda_value
            x_next = na_update(x, xs[-2], w, ws[-1], gamma, lam_used)
            theta = _gain(w, ws[-1], gamma, step_norm, nrm)
            theta_lam = _gain(w, ws[-1], lam_used * gamma, step_norm, nrm)
            if decision.case != "not_applied":
                lam = lam_used
                r_used = decision.r_used
                beta = decision.beta

        ls_t = None
        ls_ok = True
        if cfg.linesearch is not None:
            d = x_next - x
            if np.any(d):
                ls = cfg.linesearch
                ls_t, ls_ok = armijo_backtrack(
                    p, x, d, ls.c1, ls.shrink, ls.max_backtracks
                )
                x_next = x + ls_t * d

        records.append(
            IterationRecord(
                k=k,
                x=x.copy(),
                w=w.copy(),
                residual_norm=float(rnorm),
                step_norm=float(step_norm),
                gamma=gamma,
                lam=lam,
                eta=eta,
                r_used=r_used,
                beta=beta,
                theta=theta,
                theta_lambda=theta_lam,
                decision=decision,
                ls_t=ls_t,
                ls_ok=ls_ok,
            )
        )
        xs.append(x_next)
        ws.append(w)
        prev_step_norm = step_norm
        x = x_next
        k += 1

    return ConvergenceReport(
        records=tuple(records),
        status=status,
        iterations=len(records),
        x_final=np.asarray(x, dtype=float).copy(),
    )
