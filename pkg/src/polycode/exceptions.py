"""Exception hierarchy shared by every polycode subsystem."""


class PolycodeError(Exception):
    """Base class for all errors raised by polycode."""


# ingestion
class ParseError(PolycodeError):
    pass


class UnsupportedLanguage(PolycodeError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class NoName(PolycodeError):
    """The function has no identifiable name leaf (anonymous)."""


class TooShort(PolycodeError):
    """No eligible position is left to mask."""


class EmptyCorpus(PolycodeError):
    pass


class FormatVersionMismatch(PolycodeError):
    pass


class CorruptFile(PolycodeError):
    pass


# modelling
class PathTooLong(PolycodeError, ValueError):
    pass


class UnknownNodeType(PolycodeError, ValueError):
    pass


class UnknownLanguage(PolycodeError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class DimensionMismatch(PolycodeError, ValueError):
    pass


class AllMasked(PolycodeError, ValueError):
    pass


class SchemeMismatch(PolycodeError, ValueError):
    pass


class BadMaskPosition(PolycodeError, ValueError):
    pass


# orchestration
class ConfigError(PolycodeError, ValueError):
    pass


class DivergenceError(PolycodeError, RuntimeError):
    pass


class VocabMismatch(PolycodeError, ValueError):
    pass
