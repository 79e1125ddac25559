"""Exception hierarchy.

Every error carries an ``exit_code`` so the command line front end can map
error classes onto distinct process exit statuses.
"""


class NetheatError(Exception):
    exit_code = 10


# graph_model
class GraphError(NetheatError):
    exit_code = 11


class Disconnected(GraphError):
    exit_code = 12


class IndexOutOfRange(GraphError, IndexError):
    exit_code = 13


class NotDegreeOne(GraphError):
    exit_code = 14


class OutOfUnitInterval(GraphError, ValueError):
    exit_code = 15


# coupling / linear algebra
class NonSquare(NetheatError, ValueError):
    exit_code = 20


class DimensionTooLarge(NetheatError):
    exit_code = 21


class DimensionMismatch(NetheatError, ValueError):
    exit_code = 22


class NotPositiveGenerator(NetheatError):
    exit_code = 23


# discretization
class NonPositiveCoefficient(NetheatError, ValueError):
    exit_code = 30


class DiscontinuousAtVertex(NetheatError, ValueError):
    exit_code = 31


class NonzeroAtDirichlet(NetheatError, ValueError):
    exit_code = 32


class NoDirichlet(NetheatError):
    exit_code = 33


class SingularPencil(NetheatError):
    exit_code = 34


# evolution / analysis
class SingularSystem(NetheatError):
    exit_code = 40


class EigensolverFailure(NetheatError):
    exit_code = 41


class MeshMismatch(NetheatError):
    exit_code = 42


class NotPositive(NetheatError):
    exit_code = 43


class MissingPrerequisite(NetheatError):
    exit_code = 44


class HypothesisViolated(NetheatError):
    exit_code = 45


class FitError(NetheatError):
    exit_code = 46


class WindowTooNarrow(FitError):
    exit_code = 47


class WindowOutOfRegime(WindowTooNarrow):
    # window outside the small-time regime (t ~ h^2 or t ~ 1/|s_h|)
    exit_code = 48


class DegenerateFit(FitError):
    exit_code = 49


# semilinear
class EvaluationOutOfRange(NetheatError, ValueError):
    exit_code = 50


class Blowup(NetheatError):
    exit_code = 51


# configuration
class ParseError(NetheatError):
    exit_code = 3


class ValidationError(NetheatError):
    exit_code = 4

    def __init__(self, key, message, line=None):
        self.key = key
        self.line = line
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"{key}{where}: {message}")
