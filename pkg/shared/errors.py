"""
shared/errors.py
────────────────
Exception hierarchy shared by every package.

  DomainError         argument outside a documented domain (CLI exit 2)
  ConfigurationError  invalid model / scenario setup (CLI exit 2)
  EmptyDataError      a test is undefined on all-zero data (CLI exit 1)
"""


class MsppError(Exception):
    """Base class for all toolkit errors."""


class DomainError(MsppError, ValueError):
    pass


class ConfigurationError(MsppError, ValueError):
    pass


class EmptyDataError(MsppError, RuntimeError):
    pass
