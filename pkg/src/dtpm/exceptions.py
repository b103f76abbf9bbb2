"""Error types shared across the package.

The three subclasses map onto the CLI exit codes (2, 3, 4). Plain
ValueError / IndexError are used for API-contract and math-domain
violations that cannot be reached from well-formed CLI input.
"""


class DtpmError(Exception):
    """Base class for all package errors."""


class ConfigError(DtpmError):
    """Invalid hyperparameter or configuration value. CLI exit code 2."""


class DataError(DtpmError):
    """Malformed, non-finite, or shape-mismatched data. CLI exit code 3."""


class NumericError(DtpmError):
    """Non-finite value where a finite one is required. CLI exit code 4."""
