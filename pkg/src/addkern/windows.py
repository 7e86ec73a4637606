"""Feature windows: ordered index subsets that define the sub-kernels.

Feature indices are 1-based throughout (column 1 is the first feature),
matching the on-disk JSON format. Conversion to 0-based numpy columns
happens at the kernel-evaluation boundary.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field


@dataclass(frozen=True)
class WindowSet:
    """A list of feature windows, each an ascending tuple of 1-based indices.

    Every window must have between 1 and ``d_max`` distinct indices. The
    same index may appear in several windows (needed by optimization- and
    sensitivity-driven selection); techniques that forbid repeats enforce
    that themselves.
    """

    windows: tuple[tuple[int, ...], ...]
    d_max: int
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not 1 <= self.d_max <= 3:
            raise ValueError(f"d_max must be in 1..3, got {self.d_max}")
        wins = tuple(tuple(int(i) for i in w) for w in self.windows)
        object.__setattr__(self, "windows", wins)
        if len(wins) < 1:
            raise ValueError("a WindowSet needs at least one window")
        for w in wins:
            if not 1 <= len(w) <= self.d_max:
                raise ValueError(f"window {w} longer than d_max={self.d_max}")
            if any(i < 1 for i in w):
                raise ValueError(f"window {w} has non-positive index")
            if list(w) != sorted(set(w)):
                raise ValueError(f"window {w} must be strictly ascending")

    def __len__(self) -> int:
        return len(self.windows)

    def __iter__(self):
        return iter(self.windows)

    @property
    def n_windows(self) -> int:
        return len(self.windows)

    @property
    def lengths(self) -> tuple[int, ...]:
        return tuple(len(w) for w in self.windows)

    def columns(self, window: tuple[int, ...]):
        """0-based column indices for one window."""
        return [i - 1 for i in window]

    def max_feature(self) -> int:
        return max(max(w) for w in self.windows)

    def to_json(self) -> str:
        return json.dumps(
            {"windows": [list(w) for w in self.windows],
             "d_max": self.d_max,
             "metadata": self.metadata},
            indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "WindowSet":
        obj = json.loads(text)
        return cls(windows=tuple(tuple(w) for w in obj["windows"]),
                   d_max=int(obj["d_max"]),
                   metadata=obj.get("metadata", {}))


def singleton_windows(d: int) -> WindowSet:
    """One window per feature: {1}, {2}, ..., {d}."""
    return WindowSet(tuple((i,) for i in range(1, d + 1)), d_max=1)
