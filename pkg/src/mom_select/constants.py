from __future__ import annotations

from dataclasses import dataclass
import math


@dataclass(frozen=True)
class AbsoluteConstants:
    """Absolute constants of the concentration and oracle bounds.

    L6 has no closed form and is reported as ``None``.
    """

    L0: float
    L1: float
    L2: float
    L3: float
    L4: float
    L5: float
    L6: float | None
    L7: float
    L8: float

    @staticmethod
    def compute() -> "AbsoluteConstants":
        l1 = 2.0 * math.sqrt(6.0 * math.e)
        l2 = math.sqrt(2.0) * l1
        return AbsoluteConstants(
            L0=16.0 / math.log(2.0) + 8.0,
            L1=l1,
            L2=l2,
            L3=2.0 * l2,
            L4=9.0 * l1 * l1 / 4.0,
            L5=2.0 * math.sqrt(math.e) + 8.0 * l1 * math.exp(0.25),
            L6=None,
            L7=384.0 + 128.0 * math.sqrt(2.0) * math.e * l1,
            L8=4.0 * math.sqrt(6.0 * math.e),
        )

    def to_dict(self) -> dict[str, float | None]:
        return {
            "L0": self.L0,
            "L1": self.L1,
            "L2": self.L2,
            "L3": self.L3,
            "L4": self.L4,
            "L5": self.L5,
            "L6": self.L6,
            "L7": self.L7,
            "L8": self.L8,
        }


CONSTANTS = AbsoluteConstants.compute()
