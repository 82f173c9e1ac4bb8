"""Continuous problem definition for coupled reaction-diffusion systems.

A system is n >= 2 second-order equations on [0, 1],

    -eps_i * y_i'' + sum_j a_ij(x) y_j = f_i(x),    y_i(0), y_i(1) prescribed,

with small positive diffusion parameters eps_i. This module holds the
problem container plus runtime verifiers for the structural conditions
(strict diagonal dominance, non-positive off-diagonal coupling) that make
the problem stable and monotone, and the a-posteriori maximum-principle
and stability-bound checks built on them.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np

from .analysis import GridFunction

ScalarFieldLike = Union[int, float, "ScalarField", Callable[[float], float]]


@dataclass(frozen=True)
class ScalarField:
    """A real-valued coefficient or forcing term on [0, 1].

    Wraps a deterministic callable; constants are accepted and lifted.
    ``sample`` evaluates on a whole grid, using the callable's own
    vectorization when it supports numpy arrays.
    """

    fn: Callable[[float], float]

    def __call__(self, x: float) -> float:
        return float(self.fn(x))

    def sample(self, xs: np.ndarray) -> np.ndarray:
        xs = np.asarray(xs, dtype=float)
        try:
            out = np.asarray(self.fn(xs), dtype=float)
            if out.shape == xs.shape:
                return out
        except (TypeError, ValueError):
            pass
        return np.array([float(self.fn(x)) for x in xs.ravel()]).reshape(xs.shape)


def as_scalar_field(value: ScalarFieldLike) -> ScalarField:
    """Lift a constant or callable to a ScalarField."""
    if isinstance(value, ScalarField):
        return value
    if callable(value):
        return ScalarField(value)
    c = float(value)
    return ScalarField(lambda x, _c=c: _c + 0.0 * np.asarray(x))


@dataclass(frozen=True)
class ReactionDiffusionSystem:
    """A singularly perturbed reaction-diffusion two-point BVP on [0, 1].

    Attributes:
        coeff: n x n reaction matrix A(x), entries as ScalarFields.
        forcing: length-n forcing vector f(x).
        diffusion: per-component positive diffusion parameters. All entries
            equal means every component carries a boundary layer; entries
            equal to exactly 1.0 alongside a smaller common value mark
            components without layers.
        left_bc, right_bc: prescribed boundary values y(0), y(1).
    """

    coeff: tuple[tuple[ScalarField, ...], ...]
    forcing: tuple[ScalarField, ...]
    diffusion: tuple[float, ...]
    left_bc: np.ndarray
    right_bc: np.ndarray

    #: the fixed domain; rescale affinely before constructing if needed
    domain = (0.0, 1.0)

    def __post_init__(self) -> None:
        n = len(self.forcing)
        if n < 2:
            raise ValueError("system must have at least 2 components")
        if len(self.coeff) != n or any(len(row) != n for row in self.coeff):
            raise ValueError("coeff must be an n x n grid matching forcing length")
        if len(self.diffusion) != n:
            raise ValueError("diffusion must have one entry per component")
        if any(d <= 0.0 for d in self.diffusion):
            raise ValueError("diffusion parameters must be positive")
        if self.left_bc.shape != (n,) or self.right_bc.shape != (n,):
            raise ValueError("boundary vectors must have length n")

    @property
    def n(self) -> int:
        return len(self.forcing)

    def coeff_matrix(self, xs: np.ndarray) -> np.ndarray:
        """Sample A(x) on a grid; returns shape (len(xs), n, n)."""
        xs = np.asarray(xs, dtype=float)
        n = self.n
        out = np.empty((xs.size, n, n))
        for i in range(n):
            for j in range(n):
                out[:, i, j] = self.coeff[i][j].sample(xs.ravel())
        return out

    def forcing_vector(self, xs: np.ndarray) -> np.ndarray:
        """Sample f(x) on a grid; returns shape (len(xs), n)."""
        xs = np.asarray(xs, dtype=float)
        out = np.empty((xs.size, self.n))
        for i in range(self.n):
            out[:, i] = self.forcing[i].sample(xs.ravel())
        return out


def make_system(
    coeff: Sequence[Sequence[ScalarFieldLike]],
    forcing: Sequence[ScalarFieldLike],
    diffusion: Sequence[float],
    left_bc: Sequence[float] | None = None,
    right_bc: Sequence[float] | None = None,
) -> ReactionDiffusionSystem:
    """Build a system from constants and/or callables, with zero default BCs."""
    n = len(forcing)
    lb = np.zeros(n) if left_bc is None else np.asarray(left_bc, dtype=float)
    rb = np.zeros(n) if right_bc is None else np.asarray(right_bc, dtype=float)
    return ReactionDiffusionSystem(
        coeff=tuple(tuple(as_scalar_field(a) for a in row) for row in coeff),
        forcing=tuple(as_scalar_field(f) for f in forcing),
        diffusion=tuple(float(d) for d in diffusion),
        left_bc=lb,
        right_bc=rb,
    )


@dataclass(frozen=True)
class AssumptionReport:
    """Result of checking the structural conditions on a sample grid.

    ``delta`` is the minimum over the grid of the per-row coefficient sums
    min_i sum_j a_ij(x); with strict dominance and non-positive
    off-diagonals it is necessarily positive and feeds the stability bound.
    """

    diagonally_dominant: bool
    offdiag_nonpositive: bool
    delta: float
    sample_count: int

    @property
    def passed(self) -> bool:
        return self.diagonally_dominant and self.offdiag_nonpositive


def validate_assumptions(sys: ReactionDiffusionSystem, samples: int = 1001) -> AssumptionReport:
    """Check strict diagonal dominance and off-diagonal sign on a uniform grid.

    Both conditions are pointwise; they are tested at ``samples`` equally
    spaced points including the endpoints. Validation outcome is returned
    as data, never raised.
    """
    if samples < 2:
        raise ValueError("samples must be at least 2")
    xs = np.linspace(0.0, 1.0, samples)
    A = sys.coeff_matrix(xs)  # (samples, n, n)
    diag = np.einsum("kii->ki", A)
    abs_off = np.sum(np.abs(A), axis=2) - np.abs(diag)
    dominant = bool(np.all(diag > abs_off))

    off = A.copy()
    np.einsum("kii->ki", off)[...] = 0.0
    nonpositive = bool(np.all(off <= 0.0))

    row_sums = np.sum(A, axis=2)
    delta = float(np.min(row_sums))
    return AssumptionReport(
        diagonally_dominant=dominant,
        offdiag_nonpositive=nonpositive,
        delta=delta,
        sample_count=samples,
    )


def forcing_max_norm(sys: ReactionDiffusionSystem, samples: int = 1001) -> float:
    """Max norm of the forcing over a uniform sample grid: max_i sup |f_i|."""
    xs = np.linspace(0.0, 1.0, samples)
    return float(np.max(np.abs(sys.forcing_vector(xs))))


def stability_bound(
    sys: ReactionDiffusionSystem,
    report: AssumptionReport,
    sample_f_norm: float,
) -> float:
    """A-priori ceiling on the solution max norm.

    Returns (1/delta) * ||f|| + ||y(0)|| + ||y(1)|| in max norms. Any
    computed solution exceeding this is wrong; used as a sanity check on
    solver output.
    """
    if report.delta <= 0.0:
        raise ValueError("stability bound requires delta > 0")
    return (
        sample_f_norm / report.delta
        + float(np.max(np.abs(sys.left_bc)))
        + float(np.max(np.abs(sys.right_bc)))
    )


def check_max_principle(
    sys: ReactionDiffusionSystem,
    candidate: GridFunction,
    tol: float,
) -> bool:
    """Discrete maximum-principle check for a grid function.

    If the candidate's boundary values are >= -tol and the discrete
    operator value -eps_i y_i'' + (A y)_i (second derivative by central
    differences on the candidate's own grid) is >= -tol at every interior
    grid point, the candidate must be >= -tol everywhere. Returns True
    vacuously when the hypothesis fails.
    """
    grid = candidate.grid
    vals = candidate.values
    if grid.size < 3:
        raise ValueError("candidate grid needs at least 3 points")

    if np.any(vals[0] < -tol) or np.any(vals[-1] < -tol):
        return True  # hypothesis fails at the boundary

    # nonuniform 3-point second difference at interior points
    hm = grid[1:-1] - grid[:-2]
    hp = grid[2:] - grid[1:-1]
    d2 = 2.0 * (
        vals[:-2] / (hm * (hm + hp))[:, None]
        - vals[1:-1] / (hm * hp)[:, None]
        + vals[2:] / (hp * (hm + hp))[:, None]
    )
    A = sys.coeff_matrix(grid[1:-1])
    eps = np.asarray(sys.diffusion)
    op = -eps[None, :] * d2 + np.einsum("kij,kj->ki", A, vals[1:-1])
    if np.any(op < -tol):
        return True  # hypothesis fails in the interior

    return bool(np.all(vals >= -tol))
