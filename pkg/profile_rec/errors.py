from __future__ import annotations

from typing import Any


class ProfileRecError(Exception):
    exit_code = 1

    def __init__(self, detail: str) -> None:
        super().__init__(detail)
        self.detail = detail


class UsageError(ProfileRecError):
    exit_code = 1


class DataError(ProfileRecError):
    exit_code = 2


class NumericError(ProfileRecError):
    exit_code = 3


class ParseError(DataError):
    def __init__(self, detail: str, *, raw_response: str) -> None:
        super().__init__(detail)
        self.raw_response = raw_response


class LlmError(DataError):
    pass


class TransientLlmError(LlmError):
    pass


class TrainingAborted(NumericError):
    def __init__(self, detail: str, *, result: Any) -> None:
        super().__init__(detail)
        self.result = result
