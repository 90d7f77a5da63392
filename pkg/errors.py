from typing import Optional, Sequence


class PixelWptError(Exception):
    """Базовая ошибка библиотеки."""


class DimensionMismatch(PixelWptError):
    pass


class SingularLoadedNetwork(PixelWptError):
    def __init__(self, condition: float):
        super().__init__(f"Loaded pixel-port matrix is numerically singular (cond={condition:.3e})")
        self.condition = condition


class ZeroPatternMatrix(PixelWptError):
    pass


class DegenerateRadiator(PixelWptError):
    def __init__(self, message: str, index: Optional[int] = None, side: Optional[str] = None):
        super().__init__(message)
        self.index = index
        self.side = side


class InfeasibleRank(PixelWptError):
    pass


class InvalidAntennaData(PixelWptError):
    pass


class OddOrder(PixelWptError):
    pass


class ObjectiveNonFinite(PixelWptError):
    def __init__(self, point: Sequence, value: float):
        super().__init__(f"Objective returned {value} at {list(point)}")
        self.point = point
        self.value = value


class ZeroChannel(PixelWptError):
    pass


class EmptyCodebook(PixelWptError):
    pass


class ConfigInvalid(PixelWptError):
    def __init__(self, field_path: str, message: str):
        super().__init__(f"{field_path}: {message}")
        self.field_path = field_path


class ExperimentFailed(PixelWptError):
    pass


class InvalidCoder(PixelWptError):
    pass
