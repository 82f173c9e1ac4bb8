"""Problem configuration files and run manifests for the CLI.

Configs are JSON objects with the fields of :class:`ProblemConfig`;
coefficient and forcing entries are expression strings in x (see
``expressions``), diffusion entries are numbers or the literal marker
``"eps"`` for the swept parameter. The two benchmark systems ship as
built-in configs so table reproduction needs no authoring.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .expressions import ExpressionError, compile_expression
from .system import ReactionDiffusionSystem, make_system

#: diffusion-entry marker standing for the swept perturbation parameter
EPS_MARKER = "eps"

#: evaluation abscissae used by the published solution tables
PAPER_GRID = (
    0.000, 0.001, 0.003, 0.070, 0.090, 0.100, 0.300, 0.500,
    0.700, 0.900, 0.910, 0.930, 0.997, 0.999, 1.000,
)


class ConfigError(ValueError):
    """Malformed or inconsistent problem configuration."""


@dataclass(frozen=True)
class ProblemConfig:
    """Declarative description of a reaction-diffusion system."""

    name: str
    n: int
    coeff: tuple[tuple[str, ...], ...]
    forcing: tuple[str, ...]
    diffusion: tuple[float | str, ...]
    bc_left: tuple[float, ...]
    bc_right: tuple[float, ...]

    def __post_init__(self) -> None:
        if self.n < 2:
            raise ConfigError("n must be at least 2")
        if len(self.coeff) != self.n or any(len(r) != self.n for r in self.coeff):
            raise ConfigError("coeff must be an n x n array of expressions")
        for name, seq in (("forcing", self.forcing), ("diffusion", self.diffusion),
                          ("bc_left", self.bc_left), ("bc_right", self.bc_right)):
            if len(seq) != self.n:
                raise ConfigError(f"{name} must have {self.n} entries")
        for entry in self.diffusion:
            if isinstance(entry, str):
                if entry != EPS_MARKER:
                    raise ConfigError(
                        f"diffusion entries must be numbers or {EPS_MARKER!r}, got {entry!r}"
                    )
            elif float(entry) <= 0.0:
                raise ConfigError("numeric diffusion entries must be positive")

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "n": self.n,
            "coeff": [list(row) for row in self.coeff],
            "forcing": list(self.forcing),
            "diffusion": list(self.diffusion),
            "bc_left": list(self.bc_left),
            "bc_right": list(self.bc_right),
        }

    def build_system(self, eps: float) -> ReactionDiffusionSystem:
        """Compile expressions and instantiate the system at the given eps."""
        try:
            coeff = [[compile_expression(e) for e in row] for row in self.coeff]
            forcing = [compile_expression(e) for e in self.forcing]
        except ExpressionError as exc:
            raise ConfigError(str(exc)) from exc
        diffusion = [eps if d == EPS_MARKER else float(d) for d in self.diffusion]
        sys = make_system(coeff, forcing, diffusion, self.bc_left, self.bc_right)
        probe = np.linspace(0.0, 1.0, 101)
        if not (np.all(np.isfinite(sys.coeff_matrix(probe)))
                and np.all(np.isfinite(sys.forcing_vector(probe)))):
            raise ConfigError(f"coefficients of {self.name!r} are not finite on [0, 1]")
        return sys


BUILTIN_PROBLEMS: dict[str, ProblemConfig] = {
    "example1": ProblemConfig(
        name="example1",
        n=2,
        coeff=(("4", "-2"), ("-1", "3")),
        forcing=("1", "2"),
        diffusion=(EPS_MARKER, EPS_MARKER),
        bc_left=(0.0, 0.0),
        bc_right=(0.0, 0.0),
    ),
    "example2": ProblemConfig(
        name="example2",
        n=3,
        coeff=(("3", "-1", "-1"), ("-1", "3", "-1"), ("0", "-1", "3")),
        forcing=("0", "1", "x"),
        diffusion=(EPS_MARKER, EPS_MARKER, EPS_MARKER),
        bc_left=(0.0, 0.0, 0.0),
        bc_right=(0.0, 0.0, 0.0),
    ),
}


def _as_expr_str(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (int, float)):
        return repr(value)
    raise ConfigError(f"expected an expression string or number, got {value!r}")


def config_from_dict(data: dict) -> ProblemConfig:
    try:
        return ProblemConfig(
            name=str(data["name"]),
            n=int(data["n"]),
            coeff=tuple(tuple(_as_expr_str(e) for e in row) for row in data["coeff"]),
            forcing=tuple(_as_expr_str(e) for e in data["forcing"]),
            diffusion=tuple(
                d if isinstance(d, str) else float(d) for d in data["diffusion"]
            ),
            bc_left=tuple(float(v) for v in data["bc_left"]),
            bc_right=tuple(float(v) for v in data["bc_right"]),
        )
    except KeyError as exc:
        raise ConfigError(f"config is missing field {exc.args[0]!r}") from exc
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def load_problem(spec: str) -> ProblemConfig:
    """Resolve a --problem argument: a builtin name or a JSON config path."""
    if spec in BUILTIN_PROBLEMS:
        return BUILTIN_PROBLEMS[spec]
    path = Path(spec)
    if not path.exists():
        raise ConfigError(
            f"unknown problem {spec!r}: not a builtin "
            f"({', '.join(sorted(BUILTIN_PROBLEMS))}) and no such file"
        )
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    return config_from_dict(data)


def dump_config(config: ProblemConfig) -> str:
    """Serialize a config to canonical JSON (round-trips via load_problem)."""
    return json.dumps(config.to_dict(), indent=2, sort_keys=True) + "\n"


@dataclass(frozen=True)
class RunManifest:
    """Everything one CLI invocation needs: problem, sweeps, output layout."""

    problem: ProblemConfig
    eps_list: tuple[float, ...]
    n_list: tuple[int, ...]
    output_dir: Path
    eval_grid: tuple[float, ...] | int = 2001
    adaptive: bool = True
    jobs: int = 1

    def __post_init__(self) -> None:
        if not self.eps_list:
            raise ConfigError("eps list must be nonempty")
        if any(e <= 0.0 for e in self.eps_list):
            raise ConfigError("eps values must be positive")
        for a, b in zip(self.n_list, self.n_list[1:]):
            if b != 2 * a:
                raise ConfigError(f"n list must double at each step, got {a} -> {b}")
        if self.jobs < 1:
            raise ConfigError("jobs must be at least 1")

    def grid(self) -> np.ndarray:
        if isinstance(self.eval_grid, int):
            return np.linspace(0.0, 1.0, self.eval_grid)
        return np.asarray(self.eval_grid, dtype=float)


def parse_eps_token(token: str) -> float:
    """Parse an eps value: a float literal or a power form like 2^-8."""
    token = token.strip()
    for sep in ("^", "**"):
        if sep in token:
            base, exp = token.split(sep, 1)
            try:
                return float(base) ** float(exp)
            except ValueError as exc:
                raise ConfigError(f"bad eps token {token!r}") from exc
    try:
        return float(token)
    except ValueError as exc:
        raise ConfigError(f"bad eps token {token!r}") from exc


def parse_eps_list(text: str) -> tuple[float, ...]:
    return tuple(parse_eps_token(tok) for tok in text.split(",") if tok.strip())


def parse_n_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(tok) for tok in text.split(",") if tok.strip())
    except ValueError as exc:
        raise ConfigError(f"bad N list {text!r}") from exc
