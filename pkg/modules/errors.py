"""
Errors raised by the solver modules
The CLI and the HTTP API map these onto exit codes and status codes
"""


class AnnealFemError(Exception):
    """Base class for every solver error"""


class ProblemError(AnnealFemError, ValueError):
    """Invalid problem data: coefficients, mesh, EA, candidate values"""


class ArgumentError(AnnealFemError, ValueError):
    """Inputs of inconsistent size"""


class NumericalError(AnnealFemError, ArithmeticError):
    """A linear system that should be solvable was singular"""


class CapacityError(AnnealFemError, RuntimeError):
    """Graph too large for exhaustive enumeration"""


class SpecError(ProblemError):
    """Problem spec file could not be parsed or validated"""

    def __init__(self, message, field=None, line=None):
        self.field = field
        self.line = line
        location = ''
        if field is not None:
            location = f"'{field}'"
            if line is not None:
                location += f' (line {line})'
            location += ': '
        elif line is not None:
            location = f'line {line}: '
        super().__init__(f'{location}{message}')
