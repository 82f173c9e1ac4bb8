"""Two-point BVP solver: three-stage Lobatto IIIa collocation.

Solves first-order systems u' = rhs(t, u) on [a, b] with general boundary
conditions bc(u(a), u(b)) = 0. The discretization is the three-stage
Lobatto IIIa implicit Runge-Kutta formula (abscissae 0, 1/2, 1), which is
equivalent to collocation with C^1 piecewise cubics and carries classical
order 4. Eliminating the interior stage leaves, per subinterval of width h,

    y_mid    = (y_k + y_{k+1}) / 2 - (h/8) * (f_{k+1} - f_k),
    y_{k+1}  = y_k + (h/6) * (f_k + 4 f(t_mid, y_mid) + f_{k+1}),

so the unknowns are the mesh-node values only. The resulting nonlinear
system (all interval closures plus the boundary residual) is solved by a
damped Newton iteration on a sparse block-bidiagonal-plus-corner Jacobian,
factored directly. The mesh is refined by halving subintervals whose
scaled ODE residual exceeds the tolerance, and the returned solution
carries the collocation cubic as a continuous interpolant.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.sparse import csc_matrix
from scipy.sparse.linalg import splu


class CollocationError(Exception):
    """Base class for solver failures."""


class NewtonDivergence(CollocationError):
    """Newton iteration failed to contract; bad problem or initial guess."""


class MeshOverflow(CollocationError):
    """Residual tolerance unreachable within the mesh-point budget."""


@dataclass(frozen=True)
class FirstOrderBvp:
    """A first-order two-point boundary value problem u' = rhs(t, u).

    Attributes:
        dim: number of unknowns.
        rhs: right-hand side; with ``vectorized`` False it maps a scalar t
            and a (dim,) state to a (dim,) derivative, with True it maps a
            (m,) time array and (m, dim) states to (m, dim) derivatives.
        bc: boundary residual bc(u(a), u(b)), zero at a solution, exactly
            dim components.
        interval: (a, b) with a < b. For boundary-layer problems this is
            the stretched domain.
        rhs_jac: optional analytic Jacobian d rhs / d u. Same vectorization
            convention as rhs, returning (dim, dim) or (m, dim, dim).
            Finite differences are used when absent.
    """

    dim: int
    rhs: Callable
    bc: Callable[[np.ndarray, np.ndarray], np.ndarray]
    interval: tuple[float, float]
    vectorized: bool = False
    rhs_jac: Callable | None = None

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise ValueError("dim must be positive")
        a, b = self.interval
        if not a < b:
            raise ValueError("interval must satisfy a < b")


@dataclass(frozen=True)
class Mesh:
    """Strictly increasing mesh nodes spanning the problem interval."""

    nodes: np.ndarray

    def __post_init__(self) -> None:
        if self.nodes.ndim != 1 or self.nodes.size < 2:
            raise ValueError("mesh needs at least two nodes")
        if np.any(np.diff(self.nodes) <= 0.0):
            raise ValueError("mesh nodes must be strictly increasing")

    @property
    def a(self) -> float:
        return float(self.nodes[0])

    @property
    def b(self) -> float:
        return float(self.nodes[-1])

    @property
    def n_intervals(self) -> int:
        return self.nodes.size - 1


@dataclass(frozen=True)
class SolverConfig:
    """Tolerances and limits for :func:`solve`.

    ``initial_guess`` maps t to a (dim,) state; the default is the constant
    ones vector. ``adaptive`` False runs a single pass on the initial mesh
    and reports the residual without refining (no MeshOverflow possible);
    useful for mesh-convergence studies.
    """

    residual_tol: float = 1e-6
    newton_tol: float = 1e-10
    max_newton: int = 50
    max_mesh_points: int = 100000
    initial_mesh_points: int = 1000
    initial_guess: Callable[[float], np.ndarray] | None = None
    adaptive: bool = True

    def __post_init__(self) -> None:
        if min(self.residual_tol, self.newton_tol) <= 0.0:
            raise ValueError("tolerances must be positive")
        if min(self.max_newton, self.max_mesh_points) <= 0:
            raise ValueError("iteration and mesh limits must be positive")
        if self.initial_mesh_points < 2:
            raise ValueError("initial mesh needs at least two points")


@dataclass(frozen=True)
class CollocationSolution:
    """Converged collocation solution with its continuous interpolant.

    ``interpolant`` evaluates the per-subinterval collocation cubic; it
    reproduces ``node_values`` exactly at the mesh nodes and is C^1 across
    them. ``max_residual`` is the largest scaled ODE residual over all
    subintervals at termination; ``newton_iterations`` counts Newton steps
    summed over all refinement passes.
    """

    mesh: Mesh
    node_values: np.ndarray  # (N+1, dim)
    node_slopes: np.ndarray  # (N+1, dim), rhs at the nodes
    max_residual: float
    newton_iterations: int

    @property
    def dim(self) -> int:
        return self.node_values.shape[1]

    def interpolant(self, t) -> np.ndarray:
        """Evaluate the collocation polynomial at scalar or 1-D t."""
        scalar = np.isscalar(t) or np.ndim(t) == 0
        out = _interp_eval(self, np.atleast_1d(np.asarray(t, dtype=float)))
        return out[0] if scalar else out

    def interpolant_derivative(self, t) -> np.ndarray:
        """Derivative of the collocation polynomial at scalar or 1-D t."""
        scalar = np.isscalar(t) or np.ndim(t) == 0
        out = _interp_eval(self, np.atleast_1d(np.asarray(t, dtype=float)), deriv=True)
        return out[0] if scalar else out


# ---------------------------------------------------------------------------
# cubic Hermite basis (the collocation polynomial in value/slope form)
# ---------------------------------------------------------------------------

def _hermite(y0, y1, s0, s1, h, tau, deriv=False):
    """Evaluate the Hermite cubic (or its derivative) at local tau in [0, 1].

    Shapes broadcast: y0/y1/s0/s1 are (..., dim), h and tau are (...,).
    """
    h = h[..., None]
    tau = tau[..., None]
    t2 = tau * tau
    t3 = t2 * tau
    if not deriv:
        return (
            y0 * (1.0 - 3.0 * t2 + 2.0 * t3)
            + y1 * (3.0 * t2 - 2.0 * t3)
            + h * s0 * (tau - 2.0 * t2 + t3)
            + h * s1 * (t3 - t2)
        )
    return (
        y0 * (6.0 * t2 - 6.0 * tau)
        + y1 * (6.0 * tau - 6.0 * t2)
        + h * s0 * (1.0 - 4.0 * tau + 3.0 * t2)
        + h * s1 * (3.0 * t2 - 2.0 * tau)
    ) / h


def _interp_arrays(
    nodes: np.ndarray,
    values: np.ndarray,
    slopes: np.ndarray,
    ts: np.ndarray,
    deriv: bool = False,
) -> np.ndarray:
    a, b = nodes[0], nodes[-1]
    slack = 1e-10 * max(1.0, abs(b - a))
    if np.any(ts < a - slack) or np.any(ts > b + slack):
        raise ValueError(f"evaluation point outside [{a}, {b}]")
    ts = np.clip(ts, a, b)
    k = np.clip(np.searchsorted(nodes, ts, side="right") - 1, 0, nodes.size - 2)
    h = nodes[k + 1] - nodes[k]
    tau = (ts - nodes[k]) / h
    return _hermite(
        values[k], values[k + 1], slopes[k], slopes[k + 1], h, tau, deriv=deriv
    )


def _interp_eval(sol: CollocationSolution, ts: np.ndarray, deriv: bool = False) -> np.ndarray:
    return _interp_arrays(
        sol.mesh.nodes, sol.node_values, sol.node_slopes, ts, deriv=deriv
    )


def evaluate(sol: CollocationSolution, points: Sequence[float] | np.ndarray) -> np.ndarray:
    """Interpolant values at the given points, shape (len(points), dim).

    Between nodes this is the collocation cubic itself, so accuracy is
    fourth order everywhere, not just at the mesh nodes. Points must lie
    in the solution interval.
    """
    return _interp_eval(sol, np.asarray(points, dtype=float))


# ---------------------------------------------------------------------------
# rhs / Jacobian evaluation helpers
# ---------------------------------------------------------------------------

def _rhs_all(bvp: FirstOrderBvp, ts: np.ndarray, U: np.ndarray) -> np.ndarray:
    """rhs at many points; ts (m,), U (m, dim) -> (m, dim)."""
    if bvp.vectorized:
        return np.asarray(bvp.rhs(ts, U), dtype=float).reshape(U.shape)
    out = np.empty_like(U)
    for i in range(ts.size):
        out[i] = np.asarray(bvp.rhs(float(ts[i]), U[i]), dtype=float).reshape(bvp.dim)
    return out


def _jac_all(bvp: FirstOrderBvp, ts: np.ndarray, U: np.ndarray, F: np.ndarray) -> np.ndarray:
    """d rhs / d u at many points; returns (m, dim, dim).

    Uses the analytic Jacobian when provided, otherwise one-sided finite
    differences reusing the already-computed rhs values F.
    """
    m, dim = U.shape
    if bvp.rhs_jac is not None:
        if bvp.vectorized:
            return np.asarray(bvp.rhs_jac(ts, U), dtype=float).reshape(m, dim, dim)
        out = np.empty((m, dim, dim))
        for i in range(m):
            out[i] = np.asarray(bvp.rhs_jac(float(ts[i]), U[i]), dtype=float).reshape(dim, dim)
        return out
    out = np.empty((m, dim, dim))
    step = np.sqrt(np.finfo(float).eps)
    for j in range(dim):
        dU = U.copy()
        dj = step * (1.0 + np.abs(U[:, j]))
        dU[:, j] += dj
        out[:, :, j] = (_rhs_all(bvp, ts, dU) - F) / dj[:, None]
    return out


def _bc_jacobians(bvp: FirstOrderBvp, ua: np.ndarray, ub: np.ndarray, r0: np.ndarray):
    """Finite-difference Jacobians of bc with respect to both endpoints."""
    dim = bvp.dim
    Ba = np.empty((dim, dim))
    Bb = np.empty((dim, dim))
    step = np.sqrt(np.finfo(float).eps)
    for j in range(dim):
        dj = step * (1.0 + abs(ua[j]))
        ua_p = ua.copy()
        ua_p[j] += dj
        Ba[:, j] = (np.asarray(bvp.bc(ua_p, ub), dtype=float) - r0) / dj
        dj = step * (1.0 + abs(ub[j]))
        ub_p = ub.copy()
        ub_p[j] += dj
        Bb[:, j] = (np.asarray(bvp.bc(ua, ub_p), dtype=float) - r0) / dj
    return Ba, Bb


# ---------------------------------------------------------------------------
# collocation residual and Newton iteration
# ---------------------------------------------------------------------------

def _collocation_system(bvp: FirstOrderBvp, nodes: np.ndarray, Y: np.ndarray):
    """Residual of the Lobatto IIIa equations plus boundary conditions.

    Returns (F_flat, data) where data carries the pieces the Jacobian
    assembly reuses.
    """
    h = np.diff(nodes)
    t_mid = nodes[:-1] + 0.5 * h
    f_nodes = _rhs_all(bvp, nodes, Y)
    y_mid = 0.5 * (Y[:-1] + Y[1:]) - (h / 8.0)[:, None] * (f_nodes[1:] - f_nodes[:-1])
    f_mid = _rhs_all(bvp, t_mid, y_mid)
    phi = Y[1:] - Y[:-1] - (h / 6.0)[:, None] * (f_nodes[:-1] + 4.0 * f_mid + f_nodes[1:])
    bc_res = np.asarray(bvp.bc(Y[0].copy(), Y[-1].copy()), dtype=float).reshape(bvp.dim)
    F = np.concatenate([bc_res, phi.ravel()])
    return F, (h, t_mid, f_nodes, y_mid, f_mid, bc_res)


def _assemble_jacobian(bvp: FirstOrderBvp, nodes: np.ndarray, Y: np.ndarray, data) -> csc_matrix:
    h, t_mid, f_nodes, y_mid, f_mid, bc_res = data
    n_int = nodes.size - 1
    dim = bvp.dim
    eye = np.eye(dim)

    J_nodes = _jac_all(bvp, nodes, Y, f_nodes)
    J_mid = _jac_all(bvp, t_mid, y_mid, f_mid)

    h6 = (h / 6.0)[:, None, None]
    h3 = (h / 3.0)[:, None, None]
    h212 = (h * h / 12.0)[:, None, None]
    JmJk = np.einsum("kij,kjl->kil", J_mid, J_nodes[:-1])
    JmJk1 = np.einsum("kij,kjl->kil", J_mid, J_nodes[1:])
    L = -eye[None] - h6 * J_nodes[:-1] - h3 * J_mid - h212 * JmJk
    R = eye[None] - h6 * J_nodes[1:] - h3 * J_mid + h212 * JmJk1

    Ba, Bb = _bc_jacobians(bvp, Y[0].copy(), Y[-1].copy(), bc_res)

    ii, jj = np.meshgrid(np.arange(dim), np.arange(dim), indexing="ij")
    ii, jj = ii.ravel(), jj.ravel()

    def block(r, c):
        return r * dim + ii, c * dim + jj

    rows, cols, vals = [], [], []
    for col, data_block in ((0, Ba), (n_int, Bb)):
        r, c = block(0, col)
        rows.append(r)
        cols.append(c)
        vals.append(data_block.ravel())
    k = np.arange(n_int)
    for col_off, blocks in ((0, L), (1, R)):
        rows.append(((k[:, None] + 1) * dim + ii[None, :]).ravel())
        cols.append(((k[:, None] + col_off) * dim + jj[None, :]).ravel())
        vals.append(blocks.reshape(n_int, -1).ravel())

    size = (n_int + 1) * dim
    return csc_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(size, size),
    )


def _newton(bvp: FirstOrderBvp, nodes: np.ndarray, Y: np.ndarray, cfg: SolverConfig):
    """Damped Newton on the collocation equations. Returns (Y, iterations)."""
    for it in range(1, cfg.max_newton + 1):
        F, data = _collocation_system(bvp, nodes, Y)
        J = _assemble_jacobian(bvp, nodes, Y, data)
        try:
            d = splu(J).solve(-F)
        except RuntimeError as exc:  # singular factorization
            raise NewtonDivergence(f"collocation Jacobian is singular: {exc}") from exc
        d = d.reshape(Y.shape)
        step = float(np.max(np.abs(d) / (1.0 + np.abs(Y))))
        if step <= cfg.newton_tol:
            return Y + d, it
        norm0 = float(np.linalg.norm(F))
        floor = 1e-13 * np.sqrt(F.size)
        alpha = 1.0
        for _ in range(11):  # full step plus up to 10 halvings
            Y_try = Y + alpha * d
            F_try, _ = _collocation_system(bvp, nodes, Y_try)
            norm_try = float(np.linalg.norm(F_try))
            if norm_try <= (1.0 - 1e-4 * alpha) * norm0 or norm_try <= floor:
                break
            alpha *= 0.5
        else:
            raise NewtonDivergence(
                f"no residual decrease after 10 step halvings (iteration {it})"
            )
        Y = Y_try
    raise NewtonDivergence(f"Newton did not converge in {cfg.max_newton} iterations")


# ---------------------------------------------------------------------------
# residual estimation and adaptive refinement
# ---------------------------------------------------------------------------

_GAUSS_X, _GAUSS_W = leggauss(5)


def _residual_per_interval(
    bvp: FirstOrderBvp,
    nodes: np.ndarray,
    values: np.ndarray,
    slopes: np.ndarray,
) -> np.ndarray:
    h = np.diff(nodes)
    tau = 0.5 * (_GAUSS_X + 1.0)  # Gauss points mapped to [0, 1]
    tq = nodes[:-1, None] + h[:, None] * tau[None, :]
    y0 = values[:-1, None, :]
    y1 = values[1:, None, :]
    s0 = slopes[:-1, None, :]
    s1 = slopes[1:, None, :]
    hq = np.broadcast_to(h[:, None], tq.shape)
    tb = np.broadcast_to(tau[None, :], tq.shape)
    S = _hermite(y0, y1, s0, s1, hq, tb)
    Sp = _hermite(y0, y1, s0, s1, hq, tb, deriv=True)
    flat_t = tq.ravel()
    flat_S = S.reshape(-1, bvp.dim)
    fq = _rhs_all(bvp, flat_t, flat_S).reshape(S.shape)
    g = np.max(np.abs(Sp - fq) / (1.0 + np.abs(fq)), axis=2)  # (N, 5)
    return np.sqrt(np.sum((_GAUSS_W / 2.0)[None, :] * g * g, axis=1))


def estimate_residual(bvp: FirstOrderBvp, sol: CollocationSolution) -> np.ndarray:
    """Scaled ODE residual per subinterval, by 5-point Gauss quadrature.

    Each entry is the root-mean-square over the subinterval of the
    componentwise-scaled defect max_i |u'_i(t) - rhs_i(t, u(t))| / (1 +
    |rhs_i|); the maximum over subintervals is the solution's
    ``max_residual``.
    """
    return _residual_per_interval(bvp, sol.mesh.nodes, sol.node_values, sol.node_slopes)


def _initial_values(bvp: FirstOrderBvp, nodes: np.ndarray, cfg: SolverConfig) -> np.ndarray:
    if cfg.initial_guess is None:
        return np.ones((nodes.size, bvp.dim))
    rows = [np.asarray(cfg.initial_guess(float(t)), dtype=float).reshape(bvp.dim) for t in nodes]
    return np.array(rows)


def solve(bvp: FirstOrderBvp, cfg: SolverConfig | None = None) -> CollocationSolution:
    """Solve the BVP by Lobatto IIIa collocation with residual refinement.

    Newton solves the collocation equations on the current mesh to the
    step tolerance, then subintervals whose scaled residual exceeds
    ``cfg.residual_tol`` are halved and the solve repeats from the
    interpolated previous solution. Raises NewtonDivergence when the
    iteration fails to contract and MeshOverflow when the tolerance is
    unreachable within ``cfg.max_mesh_points`` (adaptive mode only).
    """
    cfg = cfg or SolverConfig()
    a, b = bvp.interval
    nodes = np.linspace(a, b, cfg.initial_mesh_points)
    Y = _initial_values(bvp, nodes, cfg)

    total_newton = 0
    while True:
        Y, iters = _newton(bvp, nodes, Y, cfg)
        total_newton += iters
        slopes = _rhs_all(bvp, nodes, Y)
        res = _residual_per_interval(bvp, nodes, Y, slopes)
        max_res = float(np.max(res))
        if not cfg.adaptive or max_res <= cfg.residual_tol:
            return CollocationSolution(
                mesh=Mesh(nodes),
                node_values=Y,
                node_slopes=slopes,
                max_residual=max_res,
                newton_iterations=total_newton,
            )
        bad = res > cfg.residual_tol
        mids = nodes[:-1][bad] + 0.5 * np.diff(nodes)[bad]
        new_nodes = np.sort(np.concatenate([nodes, mids]))
        if new_nodes.size > cfg.max_mesh_points:
            raise MeshOverflow(
                f"residual {max_res:.3e} > {cfg.residual_tol:.3e} still needs "
                f"refinement but {new_nodes.size} points would exceed the "
                f"budget of {cfg.max_mesh_points}"
            )
        Y = _interp_arrays(nodes, Y, slopes, new_nodes)
        nodes = new_nodes
