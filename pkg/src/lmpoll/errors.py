"""Exception hierarchy shared across the package.

The CLI maps these onto process exit codes: bad arguments exit 1, bad data
exits 2, backend trouble exits 3. Library callers just catch the types.
"""

from __future__ import annotations


class LmpollError(Exception):
    """Base class for all package errors."""


class ArgumentError(LmpollError):
    """A caller supplied an invalid argument value or combination."""

    exit_code = 1


class DataError(LmpollError):
    """Input data violates the expected format or is internally inconsistent."""

    exit_code = 2


class BackendError(LmpollError):
    """A generation backend failed to produce completions."""

    exit_code = 3


class StoreBusyError(DataError):
    """The experiment store lock is held by another process."""
