"""Error type shared by every core operation."""

from __future__ import annotations


class SkilldexError(Exception):
    """An operational failure with a stable machine-readable code.

    ``code`` values look like ``E_NOT_INSTALLED`` and are surfaced verbatim
    in ``--json`` output and tool-server error results.
    """

    def __init__(self, code: str, message: str) -> None:
        super().__init__(message)
        self.code = code
        self.message = message

    def to_dict(self) -> dict:
        return {"code": self.code, "message": self.message}

    def __str__(self) -> str:
        return f"{self.code}: {self.message}"
