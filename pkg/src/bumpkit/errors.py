"""Exception types shared across the package."""


class BumpError(Exception):
    pass


class ParseError(BumpError):
    def __init__(self, msg, line=None, col=None):
        self.line = line
        self.col = col
        where = ""
        if line is not None:
            where = f"line {line}"
            if col is not None:
                where += f", col {col}"
            where += ": "
        super().__init__(where + msg)


class RealityViolation(BumpError):
    pass


class ParamError(BumpError):
    pass


class ZeroPolynomial(BumpError):
    pass


class NotHomogeneous(BumpError):
    pass


class NonFiniteLineSet(BumpError):
    pass


class RotationFailed(BumpError):
    pass


class RootHasNoAncestor(BumpError):
    pass


class UnknownNode(BumpError):
    pass


class NodeBudgetExceeded(BumpError):
    pass


class ExponentNotGreaterThanOne(BumpError):
    pass


class DivisionIdentityViolated(BumpError):
    pass


class SingularPoint(BumpError):
    pass


class CoincidentPoints(BumpError):
    pass


class QuadratureDiverged(BumpError):
    pass


class DegenerateDenominator(BumpError):
    pass


class ParameterConstraintViolated(BumpError):
    pass


class DegreeMismatch(BumpError):
    pass
