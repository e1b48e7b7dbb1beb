# uncertainty/exceptions.py
"""數值模組的例外與警告類別。數值程式碼本身不寫 log，只丟例外或 warnings。"""


class LabError(Exception):
    """所有實驗室錯誤的基底類別"""


class RepresentationError(LabError):
    pass


class GridSymmetryError(LabError):
    pass


class ParameterError(LabError):
    pass


class AliasingError(LabError):
    """狀態在網格邊界 5% 區域內的質量超過允許值"""


class ResolutionError(LabError):
    pass


class DegenerateSetError(LabError):
    pass


class NumericalError(LabError):
    pass


class RangeError(LabError):
    pass


class CommensurabilityError(LabError):
    pass


class GridMismatchError(LabError):
    pass


class CostError(LabError):
    """矩陣或張量大小超過桌機規模上限"""


class CoverageError(LabError):
    pass


class ProbeValidityError(LabError):
    pass


class ConditioningError(LabError):
    pass


class UncertaintyViolationError(LabError):
    pass


class ScenarioError(LabError):
    """情境檔或 CLI 參數不合法 (exit code 1)"""

    def __init__(self, message, field=None):
        self.field = field
        super().__init__(f"{field}: {message}" if field else message)


# --- 警告 ---

class AliasingWarning(UserWarning):
    pass


class UntrustedMomentWarning(UserWarning):
    pass


class ConvergenceWarning(UserWarning):
    pass
