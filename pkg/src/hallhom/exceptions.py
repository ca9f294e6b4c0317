"""Exception types shared across the package."""


class HallhomError(Exception):
    """Base class for all package errors."""


class NotAntisymmetric(HallhomError):
    """Input matrix has a non-negligible symmetric part."""


class SingularZeroOrder(HallhomError):
    """Zeroth-order coefficient of a perturbation series is not invertible."""


class SingularCofactor(HallhomError):
    """Cofactor matrix is singular (zero determinant input)."""


class NoConvergence(HallhomError):
    """Iterative cell solve stalled above the requested residual."""

    def __init__(self, iterations, residual, tol):
        self.iterations = iterations
        self.residual = residual
        self.tol = tol
        super().__init__(
            f"no convergence after {iterations} iterations: "
            f"residual {residual:.3e} > tol {tol:.3e}"
        )


class HallNotZero(HallhomError):
    """Operation requires a zero first-order (Hall) term."""


class GridMismatch(HallhomError):
    """Field and corrector grids have incompatible shapes."""


class NonPeriodicDirection(HallhomError):
    """In-plane field direction is not a (rational) lattice direction."""


class ConditionRViolated(HallhomError):
    """Hall-coefficient integrability condition fails on the sampled grid."""


class ResolutionMismatchWarning(UserWarning):
    """Piecewise-constant interfaces cannot be aligned with voxel boundaries."""
