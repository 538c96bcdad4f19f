class RholabError(Exception):
    pass


class ModulusMismatch(RholabError, ValueError):
    pass


class DegenerateCollision(RholabError, ArithmeticError):
    """Collision whose linear congruence has no unique solution.

    Callers restart from a fresh random start when they see this.
    """


class BudgetExhausted(RholabError, RuntimeError):
    """A walk or evolution hit its step budget without reaching its goal."""


class ConvergenceError(RholabError, RuntimeError):
    pass


class CriterionFailed(RholabError, AssertionError):
    pass
