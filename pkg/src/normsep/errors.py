"""Exception types raised across the package."""


class NormsepError(Exception):
    """Base class for package errors."""


class ShapeError(NormsepError, ValueError):
    pass


class UsageError(NormsepError, ValueError):
    pass


class DomainError(NormsepError, ValueError):
    """Input point lies off the product of unit spheres."""


class NetFormatError(NormsepError, ValueError):
    """Malformed network or dataset file; ``offset`` is the byte position."""

    def __init__(self, message, offset):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


class DegeneracyError(NormsepError, ValueError):
    def __init__(self, message, indices):
        super().__init__(f"{message}: indices {tuple(indices)}")
        self.indices = tuple(indices)


class TrainingError(NormsepError, RuntimeError):
    def __init__(self, message, iteration):
        super().__init__(f"{message} at iteration {iteration}")
        self.iteration = iteration


class InfeasibleError(NormsepError, RuntimeError):
    """No regularization strength in the search bracket reaches the loss threshold."""

    def __init__(self, message, best_loss, best=None):
        super().__init__(f"{message}; best loss found {best_loss:.6g}")
        self.best_loss = best_loss
        self.best = best
