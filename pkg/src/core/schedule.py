"""
Piecewise channel schedules

A Schedule maps time on [0, T] to one multiplier per channel. Segments are
constant, linear, smooth cos^2 ramps or instantaneous steps; steps are
evaluated right-continuously.
"""

import math
from bisect import bisect_right
from dataclasses import dataclass, field, replace
from enum import Enum
from types import MappingProxyType
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from src.core.errors import InvalidParams, ScheduleRangeError, ValidationError

TIME_TOLERANCE = 1e-12
VALUE_TOLERANCE = 1e-12


class SegmentKind(Enum):
    CONSTANT = "constant"
    LINEAR = "linear"
    COS2 = "cos2"
    STEP = "step"


@dataclass(frozen=True)
class ScheduleSegment:
    """One piece of a channel's multiplier curve (times in s)"""
    t0: float
    t1: float
    kind: SegmentKind
    start: float
    end: float

    def __post_init__(self):
        if self.kind is SegmentKind.STEP:
            if abs(self.t1 - self.t0) > TIME_TOLERANCE:
                raise ValidationError(f"Step segment must have t0 == t1, got [{self.t0}, {self.t1}]")
        elif not self.t1 > self.t0:
            raise ValidationError(f"Segment [{self.t0}, {self.t1}] has non-positive duration")
        if self.kind is SegmentKind.CONSTANT and self.start != self.end:
            raise ValidationError("Constant segment needs start == end")

    def value(self, t: float) -> float:
        if self.kind is SegmentKind.STEP:
            return self.end
        if self.kind is SegmentKind.CONSTANT:
            return self.start
        tau = min(max((t - self.t0) / (self.t1 - self.t0), 0.0), 1.0)
        if self.kind is SegmentKind.LINEAR:
            return self.start + (self.end - self.start) * tau
        return self.start + (self.end - self.start) * math.sin(0.5 * math.pi * tau) ** 2

    def mirrored(self, duration: float) -> 'ScheduleSegment':
        return ScheduleSegment(duration - self.t1, duration - self.t0, self.kind, self.end, self.start)


@dataclass(frozen=True)
class Schedule:
    """
    Per-channel multiplier curves on the closed interval [0, duration]

    Channels not listed here keep multiplier 1 when applied to a layout.
    """
    duration: float
    channels: Mapping[str, Tuple[ScheduleSegment, ...]] = field(default_factory=dict)

    def __post_init__(self):
        if not self.duration > 0:
            raise ValidationError(f"Schedule duration must be positive, got {self.duration}")
        object.__setattr__(
            self, 'channels',
            MappingProxyType({name: tuple(segs) for name, segs in dict(self.channels).items()}),
        )
        for name, segments in self.channels.items():
            self._validate_channel(name, segments)

    def _validate_channel(self, name: str, segments: Sequence[ScheduleSegment]):
        if not segments:
            raise ValidationError(f"Channel {name!r} has no segments")
        tol = TIME_TOLERANCE * max(1.0, self.duration)
        if abs(segments[0].t0) > tol:
            raise ValidationError(f"Channel {name!r} must start at t = 0")
        if abs(segments[-1].t1 - self.duration) > tol:
            raise ValidationError(f"Channel {name!r} must end at t = {self.duration}")
        for prev, nxt in zip(segments, segments[1:]):
            if abs(nxt.t0 - prev.t1) > tol:
                raise ValidationError(f"Channel {name!r}: gap or overlap at t = {prev.t1}")
            if abs(nxt.start - prev.end) > VALUE_TOLERANCE * max(1.0, abs(prev.end)):
                raise ValidationError(
                    f"Channel {name!r}: discontinuity at t = {prev.t1} "
                    f"({prev.end} -> {nxt.start}); declare a step segment instead")

    def _check_time(self, t: float):
        if t < 0.0 or t > self.duration:
            raise ScheduleRangeError(f"t = {t} s outside schedule interval [0, {self.duration}]")

    def value(self, channel: str, t: float) -> float:
        self._check_time(t)
        segments = self.channels.get(channel)
        if segments is None:
            raise InvalidParams(f"Schedule has no channel {channel!r} (channels: {', '.join(sorted(self.channels))})")
        index = bisect_right([s.t0 for s in segments], t) - 1
        return segments[max(index, 0)].value(t)

    def multipliers(self, t: float) -> Dict[str, float]:
        """All channel values at time t (right-continuous at steps)"""
        self._check_time(t)
        return {name: self.value(name, t) for name in self.channels}

    def step_times(self) -> List[float]:
        return sorted({s.t0 for segs in self.channels.values() for s in segs if s.kind is SegmentKind.STEP})

    def boundaries(self) -> List[float]:
        times = {0.0, self.duration}
        for segs in self.channels.values():
            times.update(s.t0 for s in segs)
            times.update(s.t1 for s in segs)
        return sorted(times)

    def is_constant_on(self, t0: float, t1: float) -> bool:
        """True if no channel changes value on (t0, t1]"""
        for segs in self.channels.values():
            for s in segs:
                if s.t1 <= t0 or s.t0 > t1:
                    continue
                if s.kind is SegmentKind.STEP and s.t0 > t0:
                    return False
                if s.kind in (SegmentKind.LINEAR, SegmentKind.COS2) and s.start != s.end:
                    return False
        return True

    def reversed(self) -> 'Schedule':
        """Time reversal t -> T - t of every channel"""
        return Schedule(self.duration, {
            name: tuple(s.mirrored(self.duration) for s in reversed(segs))
            for name, segs in self.channels.items()
        })

    def validate_against(self, channel_names: Iterable[str]):
        unknown = set(self.channels) - set(channel_names)
        if unknown:
            raise ValidationError(f"Schedule drives channels missing from the layout: {', '.join(sorted(unknown))}")

    @classmethod
    def constant(cls, duration: float, values: Optional[Mapping[str, float]] = None) -> 'Schedule':
        """Frozen schedule holding every given channel at a fixed value"""
        return cls(duration, {
            name: (ScheduleSegment(0.0, duration, SegmentKind.CONSTANT, v, v),)
            for name, v in (values or {}).items()
        })

    def shifted(self, offset: float, total: float) -> 'Schedule':
        """Copy delayed by `offset` within a longer interval, held constant outside"""
        channels = {}
        for name, segs in self.channels.items():
            moved = [replace(s, t0=s.t0 + offset, t1=s.t1 + offset) for s in segs]
            if offset > 0:
                v = segs[0].start
                moved.insert(0, ScheduleSegment(0.0, offset, SegmentKind.CONSTANT, v, v))
            end = offset + self.duration
            if total > end:
                v = segs[-1].end
                moved.append(ScheduleSegment(end, total, SegmentKind.CONSTANT, v, v))
            channels[name] = tuple(moved)
        return Schedule(total, channels)
