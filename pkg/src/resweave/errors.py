"""Shared exception hierarchy for the toolchain."""


class ResweaveError(Exception):
    """Base class for every error raised by this package."""
