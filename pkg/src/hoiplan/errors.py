"""Common base class for every structured error raised by the toolkit.

Each concrete error carries a module-qualified ``code`` so the CLI can emit
machine-readable failure payloads.
"""


class HoiplanError(Exception):
    code = "error"

    def __init__(self, message: str = "", **detail):
        super().__init__(message)
        self.detail = detail

    def payload(self) -> dict:
        return {
            "code": self.code,
            "message": str(self),
            "detail": {k: v for k, v in self.detail.items()},
        }
