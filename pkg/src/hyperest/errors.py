"""Exception types shared across the package."""


class HyperestError(Exception):
    """Base class for all package errors."""


class InvalidMeshError(HyperestError, ValueError):
    """Mesh nodes are not strictly increasing or otherwise unusable."""


class StateSpaceError(HyperestError, RuntimeError):
    """A state left the admissible set. Carries the offending location."""

    def __init__(self, message, t=None, x=None, cell=None):
        self.t = t
        self.x = x
        self.cell = cell
        where = []
        if t is not None:
            where.append(f"t={t:.6g}")
        if x is not None:
            where.append(f"x={x:.6g}")
        if cell is not None:
            where.append(f"cell={cell}")
        if where:
            message = f"{message} [{', '.join(where)}]"
        super().__init__(message)


class ReconstructionError(HyperestError, ValueError):
    """Trajectory too short or reconstruction parameters unsupported."""


class ConditioningError(HyperestError, ValueError):
    """Node spacing too degenerate for a stable interpolation solve."""


class ConvexityError(HyperestError, ValueError):
    """Entropy Hessian failed to be positive definite on the sampled box."""


class ConfigError(HyperestError, ValueError):
    """Run configuration rejected before any compute (CLI exit code 2)."""


class AssumptionViolation(HyperestError, RuntimeError):
    """Bounded-reconstruction assumption failed (CLI exit code 3 without --force)."""
