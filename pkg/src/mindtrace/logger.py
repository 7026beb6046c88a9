"""Package-wide logger configuration.

This module exposes a named `logger` instance for consistent logging across the
`mindtrace` package. Import and use `logger` in other modules instead of
creating new loggers to keep formatting and configuration centralized.

Handlers are never installed here, the command line front end configures
logging once on startup.
"""

from logging import Logger, getLogger

logger_name = "mindtrace"
"""The shared logger name used across the package."""

logger: Logger = getLogger(logger_name)
"""The package-level logger instance bound to `logger_name`."""
