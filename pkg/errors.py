"""
錯誤階層
每個錯誤帶有結束碼 (exit_code)、機器可讀代碼 (code) 與說明 (detail)
"""

from typing import Any, Optional

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VERIFICATION = 2
EXIT_DECODE = 3


class CachingError(Exception):
    exit_code = EXIT_USAGE

    def __init__(self, code: str, detail: str, **context: Any):
        super().__init__(detail)
        self.code = code
        self.detail = detail
        self.context = context

    def to_dict(self) -> dict:
        payload = {
            "error": True,
            "code": self.code,
            "message": self.detail,
            "exit_code": self.exit_code,
        }
        if self.context:
            payload["context"] = {k: _jsonable(v) for k, v in self.context.items()}
        return payload


class InputError(CachingError):
    """輸入格式或範圍錯誤"""
    exit_code = EXIT_USAGE


class SizeError(CachingError):
    """超過頂點預算或窮舉上限"""
    exit_code = EXIT_USAGE


class VerificationError(CachingError):
    """圖或分割不滿足結構不變量"""
    exit_code = EXIT_VERIFICATION

    def __init__(self, code: str, detail: str, matching_index: Optional[int] = None,
                 edge: Optional[tuple] = None, **context: Any):
        super().__init__(code, detail, matching_index=matching_index, edge=edge, **context)
        self.matching_index = matching_index
        self.edge = edge


class DecodeError(CachingError):
    exit_code = EXIT_DECODE


def _jsonable(value: Any) -> Any:
    if isinstance(value, tuple):
        return list(value)
    return value
