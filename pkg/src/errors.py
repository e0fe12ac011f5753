"""
錯誤類別

所有錯誤都繼承 MseEigError，CLI 依 exit_code 決定結束碼：
設定錯誤 2、資料錯誤 3、數值失敗 4。
設定/資料錯誤同時繼承 ValueError，呼叫端原本攔 ValueError 的寫法仍然有效。
"""

from typing import Optional


class MseEigError(Exception):
    exit_code = 1


class ConfigError(MseEigError, ValueError):
    exit_code = 2


class DataError(MseEigError, ValueError):
    exit_code = 3


class NumericError(MseEigError, ArithmeticError):
    exit_code = 4


# 設定 / 呼叫約定
class ContractViolationError(ConfigError):
    pass


class BatchTooSmallError(ConfigError):
    pass


class StaleCacheError(ConfigError):
    pass


# 資料
class ShapeMismatchError(DataError):
    pass


class DegenerateInputError(DataError):
    pass


class DegenerateColumnError(DataError):
    def __init__(self, column: str):
        super().__init__(f"欄位 {column!r} 為常數（max == min），無法正規化")
        self.column = column


class CsvParseError(DataError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class UndefinedAucError(DataError):
    pass


# 數值
class NotPositiveDefiniteError(NumericError):
    pass


class SingularCovarianceError(NumericError):
    def __init__(self, index: int, value: float, threshold: float):
        super().__init__(
            f"covariance is singular: eigenvalue #{index} = {value:.3e} <= {threshold:.3e}"
        )
        self.index = index
        self.value = value


class ConvergenceError(NumericError):
    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual={residual:.3e})")
        self.residual = residual


class DivergenceError(NumericError):
    def __init__(self, epoch: int, total: Optional[float]):
        super().__init__(f"training diverged at epoch {epoch} (loss={total})")
        self.epoch = epoch
        self.total = total
