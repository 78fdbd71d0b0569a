"""Partition a keyframe stream into overlapping keyframe groups.

Groups are sliding windows of ``group_size`` keyframes advancing by
``group_size - overlap``, so consecutive groups share exactly ``overlap``
keyframes. A shorter final window is emitted only when it contains at least
one keyframe not already covered, so no keyframe is ever dropped and no
fully redundant group is produced.

With ``group_size=1, overlap=0`` every keyframe becomes its own group, which
is the flat per-keyframe association baseline.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .core import Keyframe
from .errors import InvalidConfigurationError, InvalidInputError


def _validate_window(group_size: int, overlap: int) -> None:
    if group_size < 1:
        raise InvalidConfigurationError(f"group_size must be >= 1, got {group_size}")
    if not 0 <= overlap < group_size:
        raise InvalidConfigurationError(
            f"overlap must satisfy 0 <= overlap < group_size, got {overlap} (size {group_size})"
        )


@dataclass(frozen=True)
class KeyframeGroup:
    """An ordered window of keyframe ids; ``overlap_with_prev`` is 0 for the first group."""

    group_index: int
    keyframe_ids: tuple[int, ...]
    overlap_with_prev: int

    def __post_init__(self):
        ids = tuple(self.keyframe_ids)
        if not ids:
            raise InvalidInputError("a keyframe group cannot be empty")
        if any(b <= a for a, b in zip(ids, ids[1:])):
            raise InvalidInputError(f"group keyframe ids must be strictly increasing: {ids}")
        object.__setattr__(self, "keyframe_ids", ids)

    def __len__(self) -> int:
        return len(self.keyframe_ids)


def form_groups(
    keyframes: Sequence[Keyframe], group_size: int, overlap: int
) -> list[KeyframeGroup]:
    """Batch grouping of an ordered keyframe sequence.

    Window n (1-based) covers input indices
    ``[(n-1)*(group_size-overlap), (n-1)*(group_size-overlap) + group_size)``.
    The final window may be shorter and is kept only if it contributes a
    keyframe no earlier window covered.
    """
    _validate_window(group_size, overlap)
    ids = [kf.keyframe_id for kf in keyframes]
    if any(b <= a for a, b in zip(ids, ids[1:])):
        raise InvalidInputError("keyframes must be sorted by strictly increasing id")

    stride = group_size - overlap
    groups: list[KeyframeGroup] = []
    covered = 0  # number of leading input indices already in some group
    start = 0
    while start < len(ids):
        window = ids[start : start + group_size]
        if start + len(window) <= covered:
            break  # residual window adds nothing new
        groups.append(
            KeyframeGroup(
                group_index=len(groups) + 1,
                keyframe_ids=tuple(window),
                overlap_with_prev=0 if not groups else overlap,
            )
        )
        covered = start + len(window)
        if covered >= len(ids):
            break
        start += stride
    return groups


class StreamingGrouper:
    """Online counterpart of :func:`form_groups`.

    Single-owner mutable state; feed keyframes in id order via :meth:`push`,
    then call :meth:`flush` once at end of stream. The emitted groups are
    identical to the batch output on the same sequence.
    """

    def __init__(self, group_size: int, overlap: int):
        _validate_window(group_size, overlap)
        self.group_size = group_size
        self.overlap = overlap
        self._buffer: list[int] = []
        self._emitted = 0
        self._last_id: Optional[int] = None
        self._flushed = False

    def push(self, keyframe: Keyframe) -> Optional[KeyframeGroup]:
        """Add one keyframe; returns a group exactly when its window fills."""
        if self._flushed:
            raise InvalidInputError("grouper already flushed")
        kf_id = keyframe.keyframe_id
        if self._last_id is not None and kf_id <= self._last_id:
            raise InvalidInputError(
                f"keyframe ids must be strictly increasing: {kf_id} after {self._last_id}"
            )
        self._last_id = kf_id
        self._buffer.append(kf_id)
        if len(self._buffer) == self.group_size:
            group = self._emit(self._buffer)
            self._buffer = self._buffer[self.group_size - self.overlap :]
            return group
        return None

    def flush(self) -> Optional[KeyframeGroup]:
        """Emit the residual group, if it contains any keyframe not yet grouped."""
        if self._flushed:
            return None
        self._flushed = True
        # After a full emission the buffer retains the carried overlap; only a
        # buffer longer than that carries new keyframes.
        carried = self.overlap if self._emitted else 0
        if len(self._buffer) > carried:
            return self._emit(self._buffer)
        return None

    def _emit(self, ids: list[int]) -> KeyframeGroup:
        self._emitted += 1
        return KeyframeGroup(
            group_index=self._emitted,
            keyframe_ids=tuple(ids),
            overlap_with_prev=0 if self._emitted == 1 else self.overlap,
        )


def stream_groups(
    keyframes: Iterable[Keyframe], group_size: int, overlap: int
) -> list[KeyframeGroup]:
    """Run a StreamingGrouper over a finite sequence, including the flush."""
    grouper = StreamingGrouper(group_size, overlap)
    groups = [g for kf in keyframes if (g := grouper.push(kf)) is not None]
    tail = grouper.flush()
    if tail is not None:
        groups.append(tail)
    return groups
