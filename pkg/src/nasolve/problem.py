"""Benchmark nonlinear systems f(x) = 0 for the solver and its diagnostics.

Three built-ins cover the regimes of interest:

* ``singular_quadratic`` -- f(x1, x2) = (x1^2, x2).  Truly singular root at
  the origin with a one-dimensional null space spanned by (1, 0); the second
  derivative along the null direction is nondegenerate, so Newton converges
  linearly from generic starting points.
* ``chandrasekhar`` -- midpoint-rule discretization of the Chandrasekhar
  H-equation with scattering parameter c.  The Jacobian at the physical
  solution becomes singular as c -> 1, giving a classical near-singular
  integral-equation benchmark.
* ``bratu1d`` -- standard three-point finite differences for the boundary
  value problem u'' + lambda*exp(u) = 0, u(0) = u(1) = 0.  The lower solution
  branch folds back near lambda ~ 3.5138, where the Jacobian at the solution
  is close to singular.

Problem objects are immutable after construction and safe to share across
concurrent solver runs; ``residual`` and ``jacobian`` must be re-entrant.
"""

from collections.abc import Callable
from dataclasses import dataclass

import numpy as np

__all__ = [
    "GroundTruth",
    "NonlinearProblem",
    "make_singular_quadratic",
    "make_chandrasekhar",
    "make_bratu_1d",
    "check_jacobian",
    "finite_difference_jacobian",
    "problem_from_id",
    "PROBLEM_IDS",
]

_SQRT_EPS = float(np.sqrt(np.finfo(float).eps))


@dataclass(frozen=True)
class GroundTruth:
    """Known facts about a problem's root, consumed by the diagnostics.

    ``root`` and ``null_vector`` are optional: they are only present where
    they are known in closed form.  ``null_vector`` must be a unit vector
    spanning the null space of the Jacobian at the root.
    """

    is_singular: bool = False
    root: np.ndarray | None = None
    null_vector: np.ndarray | None = None
    parameter: tuple[str, float] | None = None


@dataclass(frozen=True)
class NonlinearProblem:
    """A square nonlinear system with residual and Jacobian callables.

    ``residual`` and ``jacobian`` accept any x of length ``dimension`` and
    return a length-n vector and an n-by-n matrix respectively.  If
    ``jacobian`` is None a forward-difference fallback with step
    ``sqrt(eps) * (1 + ||x||)`` is installed; the built-in problems all
    supply analytic Jacobians.

    ``default_start`` is the documented initial iterate used when callers
    (for example the CLI) do not provide one.
    """

    name: str
    dimension: int
    residual: Callable[[np.ndarray], np.ndarray]
    jacobian: Callable[[np.ndarray], np.ndarray] | None
    default_start: np.ndarray
    metadata: GroundTruth | None = None

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError("dimension must be a positive integer")
        if self.jacobian is None:
            object.__setattr__(
                self,
                "jacobian",
                finite_difference_jacobian(self.residual, self.dimension),
            )
        start = np.asarray(self.default_start, dtype=float)
        if start.shape != (self.dimension,):
            raise ValueError("default_start length does not match dimension")
        object.__setattr__(self, "default_start", start)
        self._check_metadata()

    def _check_metadata(self):
        truth = self.metadata
        if truth is None:
            return
        if truth.root is not None:
            root = np.asarray(truth.root, dtype=float)
            fnorm = float(np.linalg.norm(self.residual(root)))
            if fnorm > 1e-10 * (1.0 + float(np.linalg.norm(root))):
                raise ValueError(f"declared root has residual norm {fnorm:.3e}")
            if truth.null_vector is not None:
                phi = np.asarray(truth.null_vector, dtype=float)
                if abs(np.linalg.norm(phi) - 1.0) > 1e-12:
                    raise ValueError("null_vector is not unit length")
                jnorm = float(np.linalg.norm(self.jacobian(root) @ phi))
                if jnorm > 1e-8:
                    raise ValueError(
                        f"null_vector is not in the Jacobian kernel: |J phi| = {jnorm:.3e}"
                    )


def finite_difference_jacobian(residual, dimension):
    """Forward-difference Jacobian fallback with step sqrt(eps)*(1 + ||x||)."""

    def jacobian(x):
        x = np.asarray(x, dtype=float)
        h = _SQRT_EPS * (1.0 + float(np.linalg.norm(x)))
        f0 = np.asarray(residual(x), dtype=float)
        J = np.empty((dimension, dimension))
        for j in range(dimension):
            xp = x.copy()
            xp[j] += h
            J[:, j] = (np.asarray(residual(xp), dtype=float) - f0) / h
        return J

    return jacobian


def make_singular_quadratic():
    """2-D problem f(x1, x2) = (x1^2, x2) with a singular root at the origin.

    The Jacobian at the root is diag(0, 1): rank 1, null space spanned by
    (1, 0).  Newton iterates from (1, 1) halve the first component exactly
    at every step.  Default initial iterate: (1, 1).
    """

    def residual(x):
        x = np.asarray(x, dtype=float)
        return np.array([x[0] ** 2, x[1]])

    def jacobian(x):
        x = np.asarray(x, dtype=float)
        return np.array([[2.0 * x[0], 0.0], [0.0, 1.0]])

    truth = GroundTruth(
        is_singular=True,
        root=np.zeros(2),
        null_vector=np.array([1.0, 0.0]),
    )
    return NonlinearProblem(
        name="singular_quadratic",
        dimension=2,
        residual=residual,
        jacobian=jacobian,
        default_start=np.array([1.0, 1.0]),
        metadata=truth,
    )


def make_chandrasekhar(c, n):
    """Discretized Chandrasekhar H-equation with scattering parameter c.

    Midpoint nodes mu_i = (i - 1/2)/n for i = 1..n and

        F(H)_i = H_i - (1 - (c/2n) sum_j mu_i H_j / (mu_i + mu_j))^-1.

    The Jacobian at the physical solution is singular exactly at c = 1.
    Default initial iterate: the all-ones vector.
    """
    c = float(c)
    n = int(n)
    if not 0.0 < c <= 1.0:
        raise ValueError(f"c must lie in (0, 1], got {c}")
    if n < 2:
        raise ValueError(f"grid size must be at least 2, got {n}")
    mu = (np.arange(1, n + 1) - 0.5) / n
    A = (c / (2.0 * n)) * mu[:, None] / (mu[:, None] + mu[None, :])

    def residual(H):
        H = np.asarray(H, dtype=float)
        return H - 1.0 / (1.0 - A @ H)

    def jacobian(H):
        H = np.asarray(H, dtype=float)
        d = 1.0 / (1.0 - A @ H)
        return np.eye(n) - (d * d)[:, None] * A

    truth = GroundTruth(is_singular=(c == 1.0), parameter=("c", c))
    return NonlinearProblem(
        name="chandrasekhar",
        dimension=n,
        residual=residual,
        jacobian=jacobian,
        default_start=np.ones(n),
        metadata=truth,
    )


def make_bratu_1d(lam, n):
    """1-D Bratu problem u'' + lambda*exp(u) = 0 on n interior grid points.

    Three-point Laplacian with mesh width h = 1/(n+1) and homogeneous
    Dirichlet boundary values.  For lambda = 0 the root is the zero vector;
    the lower branch folds near lambda ~ 3.5138.  Default initial iterate:
    the zero vector.
    """
    lam = float(lam)
    n = int(n)
    if n < 3:
        raise ValueError(f"need at least 3 interior points, got {n}")
    if lam < 0.0:
        raise ValueError(f"lambda must be nonnegative, got {lam}")
    h2 = (1.0 / (n + 1)) ** 2

    def residual(u):
        u = np.asarray(u, dtype=float)
        r = -2.0 * u
        r[:-1] += u[1:]
        r[1:] += u[:-1]
        return r / h2 + lam * np.exp(u)

    def jacobian(u):
        u = np.asarray(u, dtype=float)
        off = np.full(n - 1, 1.0 / h2)
        return (
            np.diag(-2.0 / h2 + lam * np.exp(u))
            + np.diag(off, 1)
            + np.diag(off, -1)
        )

    truth = GroundTruth(
        is_singular=False,
        root=np.zeros(n) if lam == 0.0 else None,
        parameter=("lambda", lam),
    )
    return NonlinearProblem(
        name="bratu1d",
        dimension=n,
        residual=residual,
        jacobian=jacobian,
        default_start=np.zeros(n),
        metadata=truth,
    )


def check_jacobian(p, x, h):
    """Max column-wise discrepancy between analytic and central-difference Jacobian.

    Returns ``max_j || (f(x + h e_j) - f(x - h e_j)) / 2h - f'(x) e_j ||_inf``.
    """
    if h <= 0.0:
        raise ValueError("step h must be positive")
    x = np.asarray(x, dtype=float)
    J = np.asarray(p.jacobian(x), dtype=float)
    worst = 0.0
    for j in range(p.dimension):
        xp = x.copy()
        xm = x.copy()
        xp[j] += h
        xm[j] -= h
        fd = (np.asarray(p.residual(xp)) - np.asarray(p.residual(xm))) / (2.0 * h)
        worst = max(worst, float(np.max(np.abs(fd - J[:, j]))))
    return worst


PROBLEM_IDS = ("singular_quadratic", "chandrasekhar", "bratu1d")


def problem_from_id(problem_id, params=None):
    """Build a built-in problem from its string id and a parameter map.

    Recognized ids: ``singular_quadratic`` (no parameters),
    ``chandrasekhar`` (``c`` in (0, 1], grid size ``n``), and ``bratu1d``
    (``lambda`` >= 0, interior points ``n``).
    """
    params = dict(params or {})
    if problem_id == "singular_quadratic":
        pass
    elif problem_id == "chandrasekhar":
        c = float(params.pop("c", 0.5))
        n = int(params.pop("n", 100))
    elif problem_id == "bratu1d":
        lam = float(params.pop("lambda", 1.0))
        n = int(params.pop("n", 100))
    else:
        raise ValueError(f"unknown problem id {problem_id!r}; choose from {PROBLEM_IDS}")
    if params:
        raise ValueError(f"unknown parameters for {problem_id}: {sorted(params)}")
    if problem_id == "singular_quadratic":
        return make_singular_quadratic()
    if problem_id == "chandrasekhar":
        return make_chandrasekhar(c, n)
    return make_bratu_1d(lam, n)
