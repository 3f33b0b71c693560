"""
core/events.py
──────────────
Event series of a simple point process observed on [0, T), plus the
plain-text / CSV formats used by the CLI.

Text format    optional "# T=<duration>" header, then one event time per line
CSV format     "# T=<duration>" header, then columns realization,time
"""

from __future__ import annotations

import hashlib
import io
import logging
import os
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from shared.errors import ConfigurationError, DomainError

logger = logging.getLogger("Events")


@dataclass(frozen=True, eq=False)
class EventSeries:
    """Sorted event times of one realization on [0, T)."""

    times: np.ndarray
    T: float

    def __post_init__(self):
        if not self.T > 0:
            raise DomainError(f"duration T must be positive, got {self.T}")
        times = np.asarray(self.times, dtype=np.float64).ravel()
        if times.size:
            if times[0] < 0.0 or times[-1] >= self.T:
                raise DomainError(f"event times must lie in [0, {self.T})")
            if np.any(np.diff(times) <= 0.0):
                raise DomainError("event times must be strictly increasing (simple process)")
        times.setflags(write=False)
        object.__setattr__(self, "times", times)

    def __len__(self) -> int:
        return int(self.times.size)

    @classmethod
    def from_unsorted(cls, times: Iterable[float], T: float) -> "EventSeries":
        return cls(np.sort(np.asarray(list(times), dtype=np.float64)), T)


EventInput = Union[EventSeries, Sequence[EventSeries]]


def as_collection(events: EventInput) -> List[EventSeries]:
    """Accept a single series or a collection of M independent realizations."""
    if isinstance(events, EventSeries):
        return [events]
    collection = list(events)
    if not collection:
        raise DomainError("an event collection needs at least one realization")
    T = collection[0].T
    if any(s.T != T for s in collection):
        raise DomainError("all realizations of a collection must share the same T")
    return collection


def series_digest(collection: EventInput) -> str:
    h = hashlib.sha256()
    for s in as_collection(collection):
        h.update(np.float64(s.T).tobytes())
        h.update(np.int64(len(s)).tobytes())
        h.update(s.times.tobytes())
    return h.hexdigest()


# ─── Serialization ────────────────────────────────────────────────────────────

def _read_lines(path: str) -> List[str]:
    try:
        with open(path) as f:
            return f.readlines()
    except OSError as e:
        raise ConfigurationError(f"cannot read event file {path}: {e.strerror or e}") from e


def _read_header_T(lines: List[str]) -> Optional[float]:
    for line in lines:
        line = line.strip()
        if line.startswith("#") and "T=" in line:
            try:
                return float(line.split("T=", 1)[1].strip())
            except ValueError:
                raise ConfigurationError(f"malformed duration header: {line!r}") from None
    return None


def write_events_txt(series: EventSeries, path: str) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w") as f:
        f.write(f"# T={float(series.T)!r}\n")
        for t in series.times:
            f.write(f"{float(t)!r}\n")


def read_events_txt(path: str, T: Optional[float] = None) -> EventSeries:
    """One realization; lines may come in any order."""
    lines = _read_lines(path)
    header_T = _read_header_T(lines)
    T = T if T is not None else header_T
    if T is None:
        raise ConfigurationError(f"{path}: no '# T=' header and no duration supplied")
    times = []
    for lineno, line in enumerate(lines, 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            times.append(float(line))
        except ValueError:
            raise ConfigurationError(f"{path}:{lineno}: not an event time: {line!r}") from None
    return EventSeries.from_unsorted(times, T)


def write_events_csv(collection: EventInput, path: str) -> None:
    collection = as_collection(collection)
    frame = pd.DataFrame({
        "realization": np.concatenate(
            [np.full(len(s), m, dtype=np.int64) for m, s in enumerate(collection)]
        ) if collection else np.empty(0, dtype=np.int64),
        "time": np.concatenate([s.times for s in collection]),
    })
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    buf = io.StringIO()
    frame.to_csv(buf, index=False, float_format="%.17g")
    with open(path, "w") as f:
        f.write(f"# T={float(collection[0].T)!r}\n")
        f.write(f"# M={len(collection)}\n")
        f.write(buf.getvalue())


def read_events_csv(path: str, T: Optional[float] = None) -> List[EventSeries]:
    header = [l for l in _read_lines(path) if l.startswith("#")]
    header_T = _read_header_T(header)
    T = T if T is not None else header_T
    if T is None:
        raise ConfigurationError(f"{path}: no '# T=' header and no duration supplied")
    M = None
    for line in header:
        if "M=" in line:
            try:
                M = int(line.split("M=", 1)[1].strip())
            except ValueError:
                raise ConfigurationError(f"{path}: malformed realization-count header: {line.strip()!r}") from None
    try:
        frame = pd.read_csv(
            path, comment="#", float_precision="round_trip",
            dtype={"realization": np.int64, "time": np.float64},
        )
    except (ValueError, pd.errors.ParserError) as e:
        raise ConfigurationError(f"{path}: malformed event CSV: {e}") from e
    if not {"realization", "time"} <= set(frame.columns):
        raise ConfigurationError(f"{path}: expected columns realization,time")
    if M is None:
        M = int(frame["realization"].max()) + 1 if len(frame) else 1
    out = []
    for m in range(M):
        times = frame.loc[frame["realization"] == m, "time"].to_numpy(dtype=np.float64)
        out.append(EventSeries.from_unsorted(times, T))
    return out


def read_events(path: str, T: Optional[float] = None) -> List[EventSeries]:
    """Read either format, dispatching on the file extension."""
    if path.lower().endswith(".csv"):
        return read_events_csv(path, T)
    return [read_events_txt(path, T)]
