"""Exact accounting of training effort in multiply-accumulate operations.

One ledger belongs to one training run.  Counters are plain integers that
only ever grow; they meter the cost of the training *algorithm* (what a
per-element on-device implementation would execute), independent of how the
host happens to evaluate the arrays.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

_U64_LIMIT = 1 << 64

_PHASES = ("forward", "backward", "update")


@dataclass
class EffortLedger:
    forward_macs: int = 0
    backward_macs: int = 0
    update_macs: int = 0
    samples_trained: int = 0
    samples_skipped: int = 0

    def add(self, phase: str, macs: int) -> None:
        """Increase the named phase counter by ``macs``."""
        if phase not in _PHASES:
            raise ValueError(f"unknown effort phase {phase!r}")
        if macs < 0:
            raise ValueError(f"negative MAC count {macs}")
        field = phase + "_macs"
        total = getattr(self, field) + macs
        if total >= _U64_LIMIT:
            raise OverflowError(f"{field} exceeded 64-bit range")
        setattr(self, field, total)

    def count_trained(self) -> None:
        self.samples_trained += 1

    def count_skipped(self) -> None:
        self.samples_skipped += 1

    @property
    def samples_presented(self) -> int:
        return self.samples_trained + self.samples_skipped

    @property
    def training_macs(self) -> int:
        """Backward plus weight-update MACs, the cost that sparsity can save."""
        return self.backward_macs + self.update_macs

    def as_dict(self) -> dict:
        return asdict(self)

    def copy(self) -> "EffortLedger":
        return EffortLedger(**asdict(self))


def effort_ratio(candidate: EffortLedger, baseline: EffortLedger) -> float:
    """Candidate training effort relative to a baseline run.

    The ratio covers backward and weight-update MACs only.  Every strategy,
    including one that skips a sample's backward pass, still runs the full
    forward pass, so the forward cost is common-mode and excluded here; use
    :func:`effort_ratio_incl_forward` for the all-in comparison.
    """
    denom = baseline.training_macs
    if denom <= 0:
        raise ZeroDivisionError("baseline ledger has no backward/update MACs")
    return candidate.training_macs / denom


def effort_ratio_incl_forward(
    candidate: EffortLedger, baseline: EffortLedger
) -> float:
    """Effort ratio with forward-pass MACs included on both sides."""
    denom = baseline.training_macs + baseline.forward_macs
    if denom <= 0:
        raise ZeroDivisionError("baseline ledger has no MACs")
    return (candidate.training_macs + candidate.forward_macs) / denom
