"""Built-in benchmark systems used by the CLI and the test suite."""

from __future__ import annotations

from .system import ReactionDiffusionSystem, make_system


def example1(eps: float) -> ReactionDiffusionSystem:
    """Two-component constant-coefficient system with layers at both ends.

    -eps y1'' + 4 y1 - 2 y2 = 1,  -eps y2'' - y1 + 3 y2 = 2, zero BCs.
    Reduced solution (0.7, 0.9).
    """
    return make_system(
        coeff=[[4.0, -2.0], [-1.0, 3.0]],
        forcing=[1.0, 2.0],
        diffusion=[eps, eps],
    )


def example2(eps: float) -> ReactionDiffusionSystem:
    """Three-component system with the linear forcing (0, 1, x), zero BCs.

    Reduced solution (0.2x + 0.2, 0.2x + 0.45, 0.4x + 0.15).
    """
    return make_system(
        coeff=[[3.0, -1.0, -1.0], [-1.0, 3.0, -1.0], [0.0, -1.0, 3.0]],
        forcing=[0.0, 1.0, lambda x: x],
        diffusion=[eps, eps, eps],
    )
