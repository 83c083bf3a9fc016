"""Exception hierarchy shared by all sagetok modules."""


class SagetokError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(SagetokError):
    """Invalid configuration or arguments (CLI exit code 2)."""


class DataError(SagetokError):
    """Unusable input data: missing files, bad encodings, empty corpora (CLI exit code 3)."""


class VocabError(SagetokError):
    """Vocabulary contract violation, e.g. removing a protected token (CLI exit code 4)."""
