"""Error type shared by every dkern module.

Each failure carries a stable string ``code`` so that callers (and the CLI)
can branch on it without parsing messages.
"""

from __future__ import annotations

# code -> CLI exit status
CONFIG_CODES = frozenset({"CONFIG_INVALID"})
IO_CODES = frozenset({"IO_ERROR"})


class DkernError(Exception):
    """A numeric, geometric or configuration failure with a stable code."""

    def __init__(self, code: str, message: str = "", **details):
        self.code = code
        self.message = message or code
        self.details = details
        super().__init__(f"{code}: {self.message}")

    def to_dict(self) -> dict:
        out = {"code": self.code, "message": self.message}
        if self.details:
            out["details"] = {k: _jsonable(v) for k, v in self.details.items()}
        return out

    @property
    def exit_status(self) -> int:
        if self.code in CONFIG_CODES:
            return 2
        if self.code in IO_CODES:
            return 4
        return 3


def _jsonable(v):
    if isinstance(v, complex):
        return [v.real, v.imag]
    if isinstance(v, (str, int, float, bool)) or v is None:
        return v
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return str(v)
