"""Exception hierarchy shared by every behavtypes module."""


class BehaviorError(Exception):
    """Base class for all errors raised by behavtypes."""


# automata core

class KeepNotSubset(BehaviorError, ValueError):
    pass


class AlphabetTooSmall(BehaviorError, ValueError):
    pass


class NotDeterministic(BehaviorError, ValueError):
    pass


class NotComplete(BehaviorError, ValueError):
    pass


class InvalidBehaviorModel(BehaviorError, ValueError):
    """A behavioral type failed validation where a valid one is required."""

    def __init__(self, message, violations=()):
        super().__init__(message)
        self.violations = list(violations)


# composition / synthesis

class StateArityMismatch(BehaviorError, ValueError):
    pass


class UnknownTarget(BehaviorError, KeyError):
    pass


class UnknownComponent(BehaviorError, KeyError):
    pass


class UnknownLabel(BehaviorError, KeyError):
    pass


# OSGi simulator

class InvalidSystemDef(BehaviorError, ValueError):
    pass


class InconsistentState(BehaviorError, ValueError):
    pass


class MissingCallee(BehaviorError, LookupError):
    pass


class DuplicateBundle(BehaviorError, ValueError):
    pass


class DuplicateObject(BehaviorError, ValueError):
    pass


class MissingBundle(BehaviorError, LookupError):
    pass


class MissingObject(BehaviorError, LookupError):
    pass


class ScriptStepDisabled(BehaviorError, ValueError):
    def __init__(self, index, step):
        super().__init__(f"script step {index} is not enabled: {step}")
        self.index = index
        self.step = step


# registry

class UnknownService(BehaviorError, KeyError):
    pass


class NoCompatibleChoice(BehaviorError):
    pass


# model io

class ModelError(BehaviorError, ValueError):
    """Load failure carrying a 1-based line/column position."""

    def __init__(self, message, line=1, column=1):
        super().__init__(f"{line}:{column}: {message}")
        self.message = message
        self.line = line
        self.column = column


class ParseError(ModelError):
    pass


class SchemaError(ModelError):
    pass


class UnsupportedVersion(ModelError):
    pass
