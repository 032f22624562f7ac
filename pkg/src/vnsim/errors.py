"""Exception types shared across the package."""


class ResourceLimitError(RuntimeError):
    """A requested problem size exceeds the configured hard cap."""


class StructureConsistencyError(RuntimeError):
    """An algebraic identity that must hold exactly was violated numerically."""


class ConfigError(ValueError):
    """A run configuration is malformed or inconsistent."""


class SingularityError(RuntimeError):
    """The evolution-parameter linear system became ill-conditioned.

    Attributes:
        t: time at which the ill-conditioned solve was attempted.
        cond: condition-number estimate that tripped the limit.
        last_valid_time: last time reached before the failure, when known.
    """

    def __init__(self, t: float, cond: float, last_valid_time: float | None = None):
        self.t = t
        self.cond = cond
        self.last_valid_time = last_valid_time
        msg = f"coefficient-frame system ill-conditioned at t={t:.6g} (cond~{cond:.3e})"
        if last_valid_time is not None:
            msg += f"; last completed step at t={last_valid_time:.6g}"
        super().__init__(msg)
