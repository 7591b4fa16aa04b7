"""
Exit-code policy for margin evaluations.

- 0: every margin is at or above the safety threshold.
- 2: positive margin (minimum margin below the threshold).
- 1: processing error (set by the CLI error handler, never here).
"""

from __future__ import annotations

from dataclasses import dataclass

EXIT_CLEAR = 0
EXIT_ERROR = 1
EXIT_POSITIVE = 2


@dataclass
class SafetyResult:
    allowed: bool
    reason: str = ""

    @property
    def exit_code(self) -> int:
        return EXIT_CLEAR if self.allowed else EXIT_POSITIVE


def check_margin(min_margin_mm: float, threshold_mm: float) -> SafetyResult:
    """Compare the measured minimum margin against the safety threshold.

    Returns SafetyResult with allowed=True when the margin is clear, or
    allowed=False with a reason naming the shortfall.
    """
    if min_margin_mm < threshold_mm:
        return SafetyResult(
            allowed=False,
            reason=f"Positive margin: minimum {min_margin_mm:.2f} mm "
                   f"is below the {threshold_mm:g} mm safety threshold",
        )
    return SafetyResult(allowed=True)
