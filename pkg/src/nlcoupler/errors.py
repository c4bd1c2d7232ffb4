"""Exception types raised by the coupler library."""


class CouplerError(Exception):
    """Base class for all library errors."""


class BranchAmbiguity(CouplerError):
    """Closed-form coefficients fail the commutator-preservation check."""

    def __init__(self, residual: float, tol: float):
        self.residual = residual
        self.tol = tol
        super().__init__(
            f"symplectic residual {residual:.3e} exceeds tolerance {tol:.1e}; "
            "fall back to fock_oracle.ode_coefficients"
        )


class ZeroIntensity(CouplerError):
    """g2 requested for a mode whose mean photon number is (numerically) zero."""


class PNotRepresentable(CouplerError):
    """The Glauber P function is not an ordinary function for this state."""


class UnsupportedClosedForm(CouplerError):
    """No closed form exists for the requested family, selection and ordering."""


class UnsupportedState(CouplerError):
    """The requested operation is not defined for this input-state family."""


class TruncatedTransform(CouplerError):
    """The characteristic function has not decayed at the edge of the quadrature domain."""


class IntegratorFailure(CouplerError):
    """The reference ODE integration did not complete."""


class CutoffExceeded(CouplerError):
    """Too much probability sits in the top Fock levels of a truncated state."""

    def __init__(self, tail_mass: float, threshold: float, cutoff: int):
        self.tail_mass = tail_mass
        self.threshold = threshold
        self.cutoff = cutoff
        super().__init__(
            f"tail mass {tail_mass:.3e} above {threshold:.1e} at cutoff {cutoff}"
        )


class ConfigError(CouplerError):
    """Invalid run configuration."""
