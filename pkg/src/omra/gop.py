"""Hierarchical bi-directional prediction plan: coding order, references,
temporal levels, and frame kinds."""
from __future__ import annotations

import enum
import io
from dataclasses import dataclass

from .errors import DataError

VALID_INTRA_PERIODS = (2, 4, 8, 16, 32, 64)


class FrameKind(enum.IntEnum):
    INTRA = 0
    REF_B = 1
    NONREF_B = 2


@dataclass(frozen=True)
class GopEntry:
    display_index: int
    kind: FrameKind
    ref_past: int | None
    ref_future: int | None
    temporal_level: int


@dataclass(frozen=True)
class GopPlan:
    frame_count: int
    intra_period: int
    entries: tuple[GopEntry, ...]  # coding order


def build_plan(frame_count: int, intra_period: int) -> GopPlan:
    """Plan a closed-GOP dyadic hierarchy: both anchors intra, midpoint
    recursion depth-first with the left interval coded before the right."""
    if intra_period not in VALID_INTRA_PERIODS:
        raise DataError(f"invalid intra period {intra_period}")
    if frame_count < 1:
        raise DataError(f"invalid frame count {frame_count}")
    if (frame_count - 1) % intra_period != 0:
        raise DataError(
            f"frame count {frame_count} is not 1 mod intra period {intra_period}"
        )

    entries: list[GopEntry] = [GopEntry(0, FrameKind.INTRA, None, None, 0)]

    def recurse(lo: int, hi: int, level: int) -> None:
        if hi - lo < 2:
            return
        mid = (lo + hi) // 2
        kind = FrameKind.NONREF_B if hi - lo == 2 else FrameKind.REF_B
        entries.append(GopEntry(mid, kind, lo, hi, level))
        recurse(lo, mid, level + 1)
        recurse(mid, hi, level + 1)

    for start in range(0, frame_count - 1, intra_period):
        end = start + intra_period
        entries.append(GopEntry(end, FrameKind.INTRA, None, None, 0))
        recurse(start, end, 1)

    return GopPlan(frame_count, intra_period, tuple(entries))


def reference_distance(entry: GopEntry) -> tuple[int, int]:
    """Distances to the past and future references of a B entry."""
    if entry.kind == FrameKind.INTRA:
        raise DataError(f"frame {entry.display_index} is intra, has no references")
    return (entry.display_index - entry.ref_past,
            entry.ref_future - entry.display_index)


def plan_to_csv(plan: GopPlan) -> str:
    """Dump the plan as CSV in coding order."""
    out = io.StringIO()
    out.write("coding_order,display_index,kind,ref_past,ref_future,temporal_level\n")
    for i, e in enumerate(plan.entries):
        rp = "" if e.ref_past is None else e.ref_past
        rf = "" if e.ref_future is None else e.ref_future
        out.write(f"{i},{e.display_index},{e.kind.name},{rp},{rf},{e.temporal_level}\n")
    return out.getvalue()
