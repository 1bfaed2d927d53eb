"""Exception hierarchy shared by every module.

Each class corresponds to one error name used in diagnostics and CLI exit
messages; ``EqsrcError.name`` is what the CLI prints.
"""


class EqsrcError(Exception):
    name = "error"


class InvalidArgumentError(EqsrcError, ValueError):
    name = "invalid-argument"


class BracketError(EqsrcError, ValueError):
    name = "bracket-error"


class EvalError(EqsrcError, ArithmeticError):
    name = "eval-error"


class RangeError(EqsrcError, OverflowError):
    name = "range-error"


class DomainError(EqsrcError, ValueError):
    name = "domain-error"


class ConvergenceError(EqsrcError, RuntimeError):
    name = "convergence-error"


class NearCutError(DomainError):
    name = "near-cut-error"


class NearSingularError(DomainError):
    name = "near-singular-error"


class NoSolutionError(EqsrcError, RuntimeError):
    name = "no-solution-error"


class RegularityError(EqsrcError, RuntimeError):
    name = "regularity-error"


class DegeneracyError(EqsrcError, ArithmeticError):
    name = "degeneracy-error"


class CoalescenceError(DomainError):
    name = "coalescence-error"


class SchemaError(EqsrcError, ValueError):
    """Invalid job input; ``pointer`` is the JSON pointer of the offending value."""

    name = "schema-error"

    def __init__(self, message: str, pointer: str = ""):
        super().__init__(message)
        self.pointer = pointer
