"""Exception hierarchy shared across the package."""


class AWMError(Exception):
    """Base class for all package errors."""


class ParseError(AWMError):
    pass


class UnknownAction(ParseError):
    pass


class ArityError(ParseError):
    pass


class SchemaError(AWMError):
    pass


class HeaderError(ParseError):
    pass


class EmptyBody(ParseError):
    pass


class MinSteps(ParseError):
    pass


class OversizeExperience(AWMError):
    pass


class ModeError(AWMError):
    pass


class NoAction(ParseError):
    pass


class UnboundPlaceholder(AWMError):
    pass


class UnknownTask(AWMError):
    pass


class LmError(AWMError):
    """Any failure of a language-model backend."""

    def __init__(self, message, batch_index=None):
        super().__init__(message)
        self.batch_index = batch_index


class Transport(LmError):
    pass


class RateLimited(LmError):
    pass


class BadResponse(LmError):
    pass


class ScriptExhausted(LmError):
    pass
