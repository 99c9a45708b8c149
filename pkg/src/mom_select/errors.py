from __future__ import annotations


class MomSelectError(ValueError):
    """Base class for every error raised by the package."""


class InvalidPartitionError(MomSelectError):
    pass


class EmptyInputError(MomSelectError):
    pass


class DimensionError(MomSelectError):
    pass


class DeltaTooSmallError(MomSelectError):
    """The confidence level asks for more blocks than the sample allows."""


class DomainError(MomSelectError):
    pass


class IllPosedError(MomSelectError):
    pass


class UnsupportedModelError(MomSelectError):
    pass


class InsufficientBlocksError(MomSelectError):
    pass


class ConstructionError(MomSelectError):
    pass


class DataError(MomSelectError):
    pass


class LayoutError(MomSelectError):
    def __init__(self, message: str, suggested_n: int) -> None:
        super().__init__(message)
        self.suggested_n = suggested_n


class BlockFitError(MomSelectError):
    def __init__(self, message: str, block: int) -> None:
        super().__init__(message)
        self.block = block


class ConditionViolationError(MomSelectError):
    def __init__(self, condition: str, detail: str) -> None:
        super().__init__(f"condition {condition} violated: {detail}")
        self.condition = condition
        self.detail = detail
