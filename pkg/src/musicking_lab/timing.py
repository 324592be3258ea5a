"""Sampling-rate inference, delta diagnostics, chorus segmentation, and
alignment of records onto the musical beat/bar grid.

backing_track_position is authoritative for timing; sync_delta is kept for
diagnostics only, since the position series is free of outliers.  Bar
intervals are half-open [bar_start, next_bar_start) and the final bar
extends to the track duration.
"""

from __future__ import annotations

from bisect import bisect_right
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import analytics
from .errors import MissingChorusIds, OutOfTrack, TooFewBeats, TooFewRecords
from .model import PERFORMANCE_CHORUS_IDS, BeatGrid, Session, column_values
from .quality import OutlierEntry, iqr_outliers

PER_BAR_STATS = ("mean", "sum", "std", "min", "max")


@dataclass(frozen=True)
class SamplingProfile:
    """Recording cadence inferred from backing-track position diffs."""

    mean_interval_ms: float
    median_interval_ms: float
    rate_hz: float
    nyquist_hz: float
    interval_histogram: tuple[tuple[float, float, int], ...]


@dataclass(frozen=True)
class DeltaProfile:
    """Distribution and IQR outliers of the reported sync_delta series."""

    histogram: tuple[tuple[float, float, int], ...]
    outliers: OutlierEntry


@dataclass(frozen=True)
class ChorusSegment:
    """Maximal run of records sharing one chorus id (indices inclusive)."""

    chorus_id: int
    start_index: int
    end_index: int
    start_ms: float
    end_ms: float
    performance: bool

    def __len__(self) -> int:
        return self.end_index - self.start_index + 1


@dataclass(frozen=True)
class MusicalPosition:
    """Where a track timestamp falls on the grid: bar, beat, and offset."""

    bar_index: int
    beat_index_global: int
    beat_in_bar: int
    offset_s: float


def infer_sampling_rate(session: Session, hist_bins: int = 20) -> SamplingProfile:
    """Derive the effective sampling rate from position diffs.

    rate_hz = 1000 / mean interval (ms); nyquist_hz is exactly half of it.

    Raises:
        TooFewRecords: Fewer than 2 records, so no interval exists.
    """
    if len(session.records) < 2:
        raise TooFewRecords("sampling rate needs >= 2 records")
    positions = np.array([r.backing_track_position for r in session.records], dtype=float)
    intervals = np.diff(positions)
    mean_ms = float(intervals.mean())
    rate = 1000.0 / mean_ms
    return SamplingProfile(
        mean_interval_ms=mean_ms,
        median_interval_ms=float(np.median(intervals)),
        rate_hz=rate,
        nyquist_hz=rate / 2.0,
        interval_histogram=tuple(analytics.histogram(intervals.tolist(), hist_bins)),
    )


def delta_profile(session: Session, bins: int = 20,
                  iqr_k: float = 1.5) -> DeltaProfile:
    """Histogram plus IQR outliers of sync_delta (diagnostic only).

    Raises:
        TooFewRecords: Fewer than 2 records.
        TooFewValues: Fewer than 4 non-null deltas (propagated from the
            IQR step).
    """
    if len(session.records) < 2:
        raise TooFewRecords("delta profile needs >= 2 records")
    deltas = column_values(session, "sync_delta")
    present = [d for d in deltas if d is not None]
    return DeltaProfile(
        histogram=tuple(analytics.histogram(present, bins)),
        outliers=iqr_outliers(deltas, k=iqr_k),
    )


def segment_choruses(session: Session) -> list[ChorusSegment]:
    """Split the session into maximal constant-chorus runs, in order.

    Ids 1-5 are flagged as performance segments; 0 and 999 are the pre and
    post tails.

    Raises:
        MissingChorusIds: Some record has no chorus id; impute first.
    """
    ids = [r.chorus_id for r in session.records]
    if any(i is None for i in ids):
        raise MissingChorusIds("chorus_id missing on some records")
    segments: list[ChorusSegment] = []
    start = 0
    for i in range(1, len(ids) + 1):
        if i == len(ids) or ids[i] != ids[start]:
            segments.append(ChorusSegment(
                chorus_id=ids[start],
                start_index=start,
                end_index=i - 1,
                start_ms=session.records[start].backing_track_position,
                end_ms=session.records[i - 1].backing_track_position,
                performance=ids[start] in PERFORMANCE_CHORUS_IDS,
            ))
            start = i
    return segments


def estimate_tempo(grid: BeatGrid) -> float:
    """Tempo in BPM from the median inter-beat interval.

    Median, not mean: the grid contains a handful of shortened beats that
    would bias a mean estimate noticeably.

    Raises:
        TooFewBeats: Fewer than 2 beats.
    """
    if len(grid.beat_times) < 2:
        raise TooFewBeats("tempo needs >= 2 beats")
    intervals = np.diff(np.asarray(grid.beat_times))
    return 60.0 / float(np.median(intervals))


@lru_cache(maxsize=8)
def _beat_times_ms(grid: BeatGrid) -> tuple[float, ...]:
    return tuple(t * 1000.0 for t in grid.beat_times)


def assign_musical_position(t_ms: float, grid: BeatGrid) -> MusicalPosition:
    """Locate a track timestamp on the beat/bar grid.

    The governing beat is the last beat at or before t; timestamps before
    the first beat map to beat 0 with a negative offset.  Bars are derived
    from the enforced every-4th-beat layout.  The comparison runs in
    milliseconds so a timestamp sitting exactly on a beat reports an offset
    of exactly zero.

    Raises:
        OutOfTrack: t outside [0, duration].
    """
    if t_ms < 0.0 or t_ms > grid.duration_s * 1000.0:
        raise OutOfTrack(f"t = {t_ms / 1000.0:.3f}s outside [0, {grid.duration_s}]")
    beats_ms = _beat_times_ms(grid)
    beat = bisect_right(beats_ms, t_ms) - 1
    if beat < 0:
        beat = 0
    return MusicalPosition(
        bar_index=beat // 4,
        beat_index_global=beat,
        beat_in_bar=beat % 4,
        offset_s=(t_ms - beats_ms[beat]) / 1000.0,
    )


def aggregate_per_bar(session: Session, grid: BeatGrid, column: str,
                      stat: str = "mean", include_nonperformance: bool = False,
                      offset_ms: float = 0.0) -> list[float | None]:
    """One statistic of a column per bar; bars with no records yield None.

    Records with chorus_id 0 or 999 sit outside the musical performance and
    are excluded unless ``include_nonperformance`` is set.  Records whose
    (offset-adjusted) position falls outside the track are skipped.
    ``offset_ms`` is added to positions before alignment, for datasets
    whose position origin is not audio time zero.

    Raises:
        UnknownColumn: Column name does not resolve.
        ValueError: Unsupported statistic.
    """
    if stat not in PER_BAR_STATS:
        raise ValueError(f"stat must be one of {PER_BAR_STATS}, got {stat!r}")
    values = column_values(session, column)
    buckets: list[list[float]] = [[] for _ in range(grid.n_bars)]
    for record, value in zip(session.records, values):
        if value is None:
            continue
        if not include_nonperformance and record.chorus_id in (0, 999):
            continue
        t_ms = record.backing_track_position + offset_ms
        if t_ms < 0.0 or t_ms > grid.duration_s * 1000.0:
            continue
        position = assign_musical_position(t_ms, grid)
        buckets[position.bar_index].append(float(value))
    return [_bar_stat(bucket, stat) for bucket in buckets]


def _bar_stat(bucket: list[float], stat: str) -> float | None:
    if not bucket:
        return None
    arr = np.asarray(bucket)
    if stat == "mean":
        return float(arr.mean())
    if stat == "sum":
        return float(arr.sum())
    if stat == "min":
        return float(arr.min())
    if stat == "max":
        return float(arr.max())
    # sample std; a single observation has no spread to report
    return 0.0 if arr.size == 1 else float(arr.std(ddof=1))


def per_bar_chorus(session: Session, grid: BeatGrid,
                   include_nonperformance: bool = False,
                   offset_ms: float = 0.0) -> list[int | None]:
    """Modal chorus id per bar (ties break to the smaller id).

    Bars without any eligible record yield None.  Used to join per-bar
    cluster assignments back onto the chorus structure.
    """
    buckets: list[Counter] = [Counter() for _ in range(grid.n_bars)]
    for record in session.records:
        if record.chorus_id is None:
            continue
        if not include_nonperformance and record.chorus_id in (0, 999):
            continue
        t_ms = record.backing_track_position + offset_ms
        if t_ms < 0.0 or t_ms > grid.duration_s * 1000.0:
            continue
        position = assign_musical_position(t_ms, grid)
        buckets[position.bar_index][record.chorus_id] += 1
    out: list[int | None] = []
    for counter in buckets:
        if not counter:
            out.append(None)
            continue
        best = max(counter.items(), key=lambda kv: (kv[1], -kv[0]))
        out.append(best[0])
    return out


@dataclass(frozen=True)
class AlignedRecord:
    """One row of the alignment table (bar fields None when off-grid)."""

    record_index: int
    t_ms: float
    chorus_id: int | None
    bar_index: int | None
    beat_in_bar: int | None


def align_session(session: Session, grid: BeatGrid,
                  offset_ms: float = 0.0) -> list[AlignedRecord]:
    """Tabulate every record's grid position for export."""
    rows = []
    for i, record in enumerate(session.records):
        t_ms = record.backing_track_position + offset_ms
        if 0.0 <= t_ms <= grid.duration_s * 1000.0:
            position = assign_musical_position(t_ms, grid)
            bar, beat_in_bar = position.bar_index, position.beat_in_bar
        else:
            bar = beat_in_bar = None
        rows.append(AlignedRecord(i, t_ms, record.chorus_id, bar, beat_in_bar))
    return rows
