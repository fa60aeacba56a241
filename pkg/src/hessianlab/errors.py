"""Exception types shared across the package."""


class InputError(ValueError):
    """An argument violates a documented precondition."""


class ConeBreachError(RuntimeError):
    """Eigenvalues left the strict cone where strict ellipticity is required.

    Carries the worst offending grid point and its eigenvalue vector.
    """

    def __init__(self, message, point=None, lam=None):
        super().__init__(message)
        self.point = point
        self.lam = lam


class LinearSolveError(RuntimeError):
    """The Krylov solver hit its iteration cap before reaching tolerance."""

    def __init__(self, message, best=None, relres=None, iterations=0):
        super().__init__(message)
        self.best = best
        self.relres = relres
        self.iterations = iterations
