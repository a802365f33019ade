"""Exception types shared across the package."""


class DimensionMismatchError(ValueError):
    """A vector did not match the operator or image dimension it was fed to."""

    def __init__(self, what, expected, actual):
        super().__init__(f"{what}: expected length {expected}, got {actual}")
        self.expected = expected
        self.actual = actual


class DegenerateOperatorError(ValueError):
    """Operator construction was rejected (empty mask, bad kernel, size cap)."""


class UnstableWeightsError(ValueError):
    """A weight setting makes the solve blow up on some singular mode."""

    def __init__(self, mode, s_value, eta1, eta2):
        super().__init__(
            f"unstable weights: (eta1+1)*s^2 + eta2 <= 0 on mode {mode} "
            f"(s={s_value:.6g}, eta1={eta1:.6g}, eta2={eta2:.6g})"
        )
        self.mode = mode


class SolverAbortError(RuntimeError):
    """The reverse loop produced a non-finite state."""

    def __init__(self, step, message="non-finite state"):
        super().__init__(f"solver aborted at step {step}: {message}")
        self.step = step


class ConfigError(ValueError):
    """Experiment configuration failed validation."""
