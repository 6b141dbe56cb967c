"""Independent brute-force verifiers used by the tests and the CLI.

Everything here is deliberately written as a separate code path from the
solver fast paths (no shared helpers for the safeguard formula), so
differential tests catch transcription errors in the case logic.
"""

import numpy as np

from .problem import make_bratu_1d
from .solver import SolverConfig, solve

__all__ = ["gamma_grid_oracle", "safeguard_case_oracle", "fold_sweep"]


def gamma_grid_oracle(w_next, w_prev, lo, hi, step):
    """Grid-search minimizer of |w_next - gamma*(w_next - w_prev)|.

    Evaluates the objective at lo, lo+step, ... and returns the best grid
    point.  Exact ties (e.g. w_prev == w_next, where every gamma ties) are
    broken toward the smallest |gamma|.
    """
    if not lo < hi:
        raise ValueError("need lo < hi")
    if not step > 0.0:
        raise ValueError("grid step must be positive")
    w_next = np.asarray(w_next, dtype=float)
    w_prev = np.asarray(w_prev, dtype=float)
    npts = int(np.floor((hi - lo) / step + 1e-9)) + 1
    grid = lo + step * np.arange(npts)
    d = w_next - w_prev
    vals = np.linalg.norm(w_next[None, :] - grid[:, None] * d[None, :], axis=1)
    best = vals.min()
    tied = vals == best
    idx = int(np.argmin(np.where(tied, np.abs(grid), np.inf)))
    return float(grid[idx])


def safeguard_case_oracle(gamma, beta):
    """Safeguard scaling lambda by literal case enumeration.

    Re-implemented independently of ``solver.gamma_safeguard`` for
    differential testing: given the gate beta > 0, returns 0 when gamma is
    0 or at least 1, the ratio-branch value when |gamma|/|1-gamma| exceeds
    beta, and 1 otherwise.
    """
    if not beta > 0.0:
        raise ValueError("beta must be positive")
    if gamma == 0.0 or gamma >= 1.0:
        return 0.0
    if abs(gamma) / abs(1.0 - gamma) > beta:
        if gamma > 0.0:
            return beta / (gamma * (beta + 1.0))
        return beta / (gamma * (beta - 1.0))
    return 1.0


def fold_sweep(n, lam_start, lam_end, lam_step, tol=1e-10, max_iter=50):
    """Natural-parameter continuation locating the Bratu fold.

    Sweeps lambda upward from ``lam_start`` in steps of ``lam_step``,
    warm-starting each Newton solve from the previous solution (the first
    solve starts from the problem's default iterate).  Returns the last
    lambda at which Newton converged within ``max_iter`` iterations, or
    None when no solve converged.
    """
    if not lam_step > 0.0:
        raise ValueError("lambda step must be positive")
    cfg = SolverConfig(method="newton", tol=tol, max_iter=max_iter)
    npts = int(np.floor((lam_end - lam_start) / lam_step + 1e-9)) + 1
    u = None
    last = None
    for i in range(npts):
        lam = lam_start + i * lam_step
        prob = make_bratu_1d(lam, n)
        if u is None:
            u = prob.default_start
        report = solve(prob, u, cfg)
        if report.status != "converged":
            break
        last = float(lam)
        u = report.x_final
    return last
