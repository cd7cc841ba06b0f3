"""Exception hierarchy."""


class VpcError(Exception):
    """Base class for all package errors."""


# linear algebra / LP
class IterationLimit(VpcError):
    pass


class Singular(VpcError):
    pass


class NotBasic(VpcError):
    pass


# model
class ParseError(VpcError):
    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f" (line {line}" + (f", column {column})" if column is not None else ")")
        super().__init__(message + where)


class UnsupportedFeature(VpcError):
    pass


class TooLarge(VpcError):
    pass


# disjunction
class NoFractional(VpcError):
    pass


class AllPruned(VpcError):
    pass


# prlp
class NotSeparable(VpcError):
    pass


# certify
class InvalidCone(VpcError):
    def __init__(self, message, multipliers=None):
        super().__init__(message)
        self.multipliers = multipliers


class DegenerateUnresolved(VpcError):
    pass


# harness / cli
class ZeroGap(VpcError):
    pass


class ConfigError(VpcError):
    pass
