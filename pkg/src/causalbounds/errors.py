"""Exception hierarchy shared by every module of the package."""


class CausalBoundsError(Exception):
    """Base class for all package errors."""


class CycleError(CausalBoundsError):
    def __init__(self, cycle):
        self.cycle = list(cycle)
        super().__init__("edges contain a cycle: " + " -> ".join(map(str, self.cycle)))


class UnknownNodeError(CausalBoundsError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class OverlapError(CausalBoundsError, ValueError):
    pass


class CriterionError(CausalBoundsError):
    """No adjustment set satisfying the back-door or front-door criterion."""


class MissingCptError(CausalBoundsError):
    pass


class ShapeMismatchError(CausalBoundsError, ValueError):
    pass


class ZeroConditionError(CausalBoundsError, ZeroDivisionError):
    pass


class PositivityError(CausalBoundsError, ValueError):
    pass


class InvalidMassError(CausalBoundsError, ValueError):
    pass


class InfeasibleError(CausalBoundsError):
    pass


class NonconvergenceError(CausalBoundsError):
    def __init__(self, message, solution=None):
        super().__init__(message)
        self.solution = solution


class MissingPriorError(CausalBoundsError):
    pass


class EmptyIntersectionError(CausalBoundsError):
    def __init__(self, lb, ub):
        self.lb = lb
        self.ub = ub
        super().__init__(f"ensemble is empty: max lower bound {lb:.6g} > min upper bound {ub:.6g}")


class ScaleError(CausalBoundsError):
    pass
