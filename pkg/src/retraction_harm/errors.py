"""Exception types mapped to CLI exit codes."""

from __future__ import annotations

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_VERIFICATION = 4


class PipelineError(Exception):
    """Base class carrying an exit code and a machine-readable code string."""

    exit_code = 1
    code = "error"


class ConfigError(PipelineError):
    """Invalid manifest, flags, or generator configuration."""

    exit_code = EXIT_CONFIG
    code = "config"


class DataError(PipelineError):
    """Unreadable/unusable input data or missing stage artifacts."""

    exit_code = EXIT_DATA
    code = "data"


class VerificationError(PipelineError):
    """Oracle equivalence check failed."""

    exit_code = EXIT_VERIFICATION
    code = "verification"
