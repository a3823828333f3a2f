"""Drive pulse schedules.

A schedule maps named channels (two-photon drive, orthogonal two-photon
drive, single-photon drive, cavity coupling) to amplitude functions of time.
Closed-form channels are arbitrary callables; piecewise-constant channels
carry their segment edges so integrators can align steps with them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional

import numpy as np

__all__ = ["PulseSchedule", "piecewise_constant", "reversed_schedule"]


@dataclass(frozen=True)
class PulseSchedule:
    """Named drive amplitudes over [0, duration].

    ``breakpoints`` lists interior times where any channel is only piecewise
    smooth; ``None`` means all channels are smooth.
    """

    duration: float
    channels: Mapping[str, Callable[[float], complex]]
    breakpoints: Optional[tuple[float, ...]] = None
    segment_values: Optional[dict[str, np.ndarray]] = field(default=None, repr=False)

    def __post_init__(self):
        if self.duration <= 0:
            raise ValueError("pulse duration must be positive")
        object.__setattr__(self, "channels", dict(self.channels))

    def amplitude(self, channel: str, t: float) -> complex:
        return self.channels[channel](t)

    def sample(self, channel: str, times) -> np.ndarray:
        fn = self.channels[channel]
        return np.array([fn(float(t)) for t in np.atleast_1d(times)])

    def to_csv(self, path) -> None:
        """Write segment rows (t_start, t_end, <channel values...>).

        Piecewise-constant schedules emit one row per segment; smooth
        schedules are sampled on 256 uniform segments.
        """
        import csv

        names = sorted(self.channels)
        if self.breakpoints is not None:
            edges = np.concatenate(([0.0], np.asarray(self.breakpoints, dtype=float),
                                    [self.duration]))
        else:
            edges = np.linspace(0.0, self.duration, 257)
        mids = 0.5 * (edges[:-1] + edges[1:])
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t_start", "t_end"] + names)
            for lo, hi, mid in zip(edges[:-1], edges[1:], mids):
                row = [repr(float(lo)), repr(float(hi))]
                for name in names:
                    val = complex(self.channels[name](float(mid)))
                    row.append(repr(val.real) if val.imag == 0 else repr(val))
                writer.writerow(row)


def piecewise_constant(duration: float,
                       values: Mapping[str, np.ndarray]) -> PulseSchedule:
    """Schedule with equal-length constant segments per channel.

    All channels must have the same segment count; segment k covers
    [k*dt, (k+1)*dt) with dt = duration / n_segments.
    """
    lengths = {len(np.atleast_1d(v)) for v in values.values()}
    if len(lengths) != 1:
        raise ValueError("all channels need the same number of segments")
    n = lengths.pop()
    if n < 1:
        raise ValueError("need at least one segment")
    dt = duration / n
    arrays = {k: np.array(v, dtype=complex) for k, v in values.items()}

    def make_fn(arr: np.ndarray):
        def fn(t: float) -> complex:
            idx = min(int(t / dt), n - 1) if t >= 0 else 0
            return complex(arr[idx])
        return fn

    edges = tuple(float(dt * k) for k in range(1, n))
    return PulseSchedule(duration=duration,
                         channels={k: make_fn(v) for k, v in arrays.items()},
                         breakpoints=edges,
                         segment_values=arrays)


def reversed_schedule(pulse: PulseSchedule) -> PulseSchedule:
    """Time-reversed copy: channel(t) -> channel(duration - t)."""
    dur = pulse.duration

    def make_fn(fn):
        return lambda t: fn(dur - t)

    breakpoints = None
    if pulse.breakpoints is not None:
        breakpoints = tuple(sorted(dur - b for b in pulse.breakpoints))
    seg = None
    if pulse.segment_values is not None:
        seg = {k: v[::-1].copy() for k, v in pulse.segment_values.items()}
    return PulseSchedule(duration=dur,
                         channels={k: make_fn(v) for k, v in pulse.channels.items()},
                         breakpoints=breakpoints,
                         segment_values=seg)
