"""Tracker session logs: parsing, hit-testing, and alignment to the graph.

A session log is JSON Lines, one event per line:
``{t_ms, kind, x?, y?, screen?, step_id?, error_kind?, session_id,
participant_id}``. Alignment turns the raw stream into per-step records
(path, duration, errors, trajectory) by hit-testing clicks against
element bounding boxes; the step binds to the last resolved click, or to
its declared target when no click resolved.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from .graph import InterfaceGraph, path_id_for

SNAP_RADIUS_PX = 12.0


class ParseError(ValueError):
    """A session log line is malformed or the stream is inconsistent."""


class UnknownScreenError(KeyError):
    """Hit test against a screen the graph does not declare."""


class EventKind(str, Enum):
    MOVE = "move"
    CLICK = "click"
    KEY = "key"
    STEP_START = "step_start"
    STEP_END = "step_end"
    ERROR_ANNOTATION = "error_annotation"


class ErrorKind(str, Enum):
    EXECUTION = "execution"
    OUTCOME = "outcome"


@dataclass(frozen=True)
class TrackerEvent:
    t_ms: int
    kind: EventKind
    point: tuple[float, float] | None = None
    screen_id: str | None = None
    step_id: str | None = None
    error_kind: ErrorKind | None = None


@dataclass(frozen=True)
class SessionLog:
    session_id: str
    participant_id: str
    events: tuple[TrackerEvent, ...]


@dataclass(frozen=True)
class AlignedStep:
    step_id: str
    path_id: str | None
    duration_s: float
    errors: tuple[ErrorKind, ...]
    trajectory: tuple[tuple[float, float], ...]


@dataclass(frozen=True)
class AlignedTrace:
    session_id: str
    steps: tuple[AlignedStep, ...]
    unaligned: tuple[str, ...] = ()


@dataclass(frozen=True)
class ProcedureStep:
    step_id: str
    text: str
    target_path: str | None = None


@dataclass(frozen=True)
class Procedure:
    procedure_id: str
    steps: tuple[ProcedureStep, ...]


def load_procedures(document: Mapping[str, Any] | Sequence[Mapping[str, Any]] | str | Path) -> list[Procedure]:
    """Load one procedure (object) or several (array) from JSON."""
    if isinstance(document, (str, Path)):
        is_file = False
        try:
            is_file = Path(document).exists()
        except (OSError, ValueError):
            pass
        document = json.loads(Path(document).read_text(encoding="utf-8") if is_file else str(document))
    raw_list = document if isinstance(document, Sequence) else [document]
    procedures = []
    for raw in raw_list:
        steps = tuple(
            ProcedureStep(str(s["step_id"]), str(s.get("text", "")), s.get("target_path"))
            for s in raw.get("steps", [])
        )
        procedures.append(Procedure(str(raw["procedure_id"]), steps))
    return procedures


_POINT_KINDS = {EventKind.MOVE, EventKind.CLICK}


def _event_from_record(record: Mapping[str, Any], line_no: int) -> TrackerEvent:
    try:
        kind = EventKind(record["kind"])
        t_ms = int(record["t_ms"])
    except (KeyError, ValueError) as exc:
        raise ParseError(f"line {line_no}: {exc}") from None
    if t_ms < 0:
        raise ParseError(f"line {line_no}: negative timestamp {t_ms}")

    point = None
    if "x" in record or "y" in record:
        try:
            point = (float(record["x"]), float(record["y"]))
        except (KeyError, TypeError, ValueError):
            raise ParseError(f"line {line_no}: malformed point") from None
    if (point is not None) != (kind in _POINT_KINDS):
        raise ParseError(f"line {line_no}: {kind.value} events {'require' if kind in _POINT_KINDS else 'forbid'} a point")

    error_kind = None
    if record.get("error_kind") is not None:
        try:
            error_kind = ErrorKind(record["error_kind"])
        except ValueError:
            raise ParseError(f"line {line_no}: unknown error kind {record['error_kind']!r}") from None
    if (error_kind is not None) != (kind is EventKind.ERROR_ANNOTATION):
        raise ParseError(f"line {line_no}: error_kind present iff kind is error_annotation")

    return TrackerEvent(
        t_ms=t_ms,
        kind=kind,
        point=point,
        screen_id=record.get("screen"),
        step_id=record.get("step_id"),
        error_kind=error_kind,
    )


def parse_session_log(source: str | Path | Iterable[str]) -> SessionLog:
    """Parse a JSON-Lines session log, enforcing order and step nesting."""
    if isinstance(source, (str, Path)):
        is_file = False
        try:
            is_file = Path(source).exists()
        except (OSError, ValueError):
            pass
        text = Path(source).read_text(encoding="utf-8") if is_file else str(source)
        lines: Iterable[str] = text.splitlines()
    else:
        lines = source

    events: list[TrackerEvent] = []
    session_id: str | None = None
    participant_id: str | None = None
    open_steps: set[str] = set()
    last_t = -1
    for line_no, line in enumerate(lines, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"line {line_no}: not valid JSON ({exc.msg})") from None
        event = _event_from_record(record, line_no)

        for key, seen in (("session_id", session_id), ("participant_id", participant_id)):
            value = str(record.get(key, ""))
            if seen is not None and value != seen:
                raise ParseError(f"line {line_no}: {key} changed from {seen!r} to {value!r}")
        session_id = str(record.get("session_id", ""))
        participant_id = str(record.get("participant_id", ""))

        if event.t_ms < last_t:
            raise ParseError(f"line {line_no}: non-monotonic timestamp {event.t_ms} after {last_t}")
        last_t = event.t_ms

        if event.kind is EventKind.STEP_START:
            if event.step_id in open_steps:
                raise ParseError(f"line {line_no}: step {event.step_id!r} started while already open")
            open_steps.add(event.step_id)
        elif event.kind is EventKind.STEP_END:
            if event.step_id not in open_steps:
                raise ParseError(f"line {line_no}: unmatched step_end for {event.step_id!r}")
            open_steps.discard(event.step_id)
        events.append(event)

    if open_steps:
        raise ParseError(f"unmatched step_start for {sorted(open_steps)}")
    if session_id is None:
        raise ParseError("log contains no events")
    return SessionLog(session_id, participant_id or "", tuple(events))


def serialize_session(log: SessionLog) -> str:
    """Inverse of :func:`parse_session_log` (JSON Lines)."""
    lines = []
    for e in log.events:
        record: dict[str, Any] = {"t_ms": e.t_ms, "kind": e.kind.value}
        if e.point is not None:
            record["x"], record["y"] = e.point
        if e.screen_id is not None:
            record["screen"] = e.screen_id
        if e.step_id is not None:
            record["step_id"] = e.step_id
        if e.error_kind is not None:
            record["error_kind"] = e.error_kind.value
        record["session_id"] = log.session_id
        record["participant_id"] = log.participant_id
        lines.append(json.dumps(record, separators=(",", ":")))
    return "\n".join(lines) + "\n"


def hit_test(
    g: InterfaceGraph,
    screen_id: str,
    point: tuple[float, float],
    snap_radius: float = SNAP_RADIUS_PX,
) -> str | None:
    """Element under a point: bbox containment first (smallest area wins,
    ties by id), else nearest element center within the snap radius."""
    if screen_id not in g.screens:
        raise UnknownScreenError(screen_id)
    x, y = point
    if not (math.isfinite(x) and math.isfinite(y)):
        raise ValueError(f"point must be finite, got {point}")

    elements = g.screen_elements(screen_id)
    contained = []
    for e in elements:
        if e.bbox is None:
            continue
        bx, by, bw, bh = e.bbox
        if bx <= x <= bx + bw and by <= y <= by + bh:
            contained.append((bw * bh, e.id))
    if contained:
        return min(contained)[1]

    near = [
        (math.hypot(e.position[0] - x, e.position[1] - y), e.id)
        for e in elements
        if math.hypot(e.position[0] - x, e.position[1] - y) <= snap_radius
    ]
    if near:
        return min(near)[1]
    return None


class _OpenStep:
    __slots__ = ("step_id", "start_ms", "last_hit", "errors", "trajectory")

    def __init__(self, step_id: str, start_ms: int):
        self.step_id = step_id
        self.start_ms = start_ms
        self.last_hit: str | None = None
        self.errors: list[ErrorKind] = []
        self.trajectory: list[tuple[float, float]] = []


def align_events(
    g: InterfaceGraph,
    log: SessionLog,
    step_targets: Mapping[str, str] | None = None,
    snap_radius: float = SNAP_RADIUS_PX,
) -> AlignedTrace:
    """Resolve each step of a session to a path with duration and errors.

    Steps whose clicks all miss and that declare no target are kept with
    ``path_id=None`` and collected in ``unaligned`` rather than failing
    the whole session.
    """
    targets = dict(step_targets or {})
    open_steps: dict[str, _OpenStep] = {}
    steps: list[AlignedStep] = []
    unaligned: list[str] = []

    def windows_for(event: TrackerEvent) -> list[_OpenStep]:
        if event.step_id is not None:
            found = open_steps.get(event.step_id)
            return [found] if found else []
        return list(open_steps.values())

    for event in log.events:
        if event.kind is EventKind.STEP_START:
            open_steps[event.step_id] = _OpenStep(event.step_id, event.t_ms)
        elif event.kind is EventKind.STEP_END:
            state = open_steps.pop(event.step_id)
            path_id: str | None = None
            if state.last_hit is not None:
                path_id = path_id_for(state.last_hit)
            elif state.step_id in targets:
                path_id = targets[state.step_id]
            else:
                unaligned.append(state.step_id)
            steps.append(
                AlignedStep(
                    step_id=state.step_id,
                    path_id=path_id,
                    duration_s=(event.t_ms - state.start_ms) / 1000.0,
                    errors=tuple(state.errors),
                    trajectory=tuple(state.trajectory),
                )
            )
        elif event.kind in _POINT_KINDS:
            for state in windows_for(event):
                state.trajectory.append(event.point)
                if event.kind is EventKind.CLICK and event.screen_id is not None:
                    hit = hit_test(g, event.screen_id, event.point, snap_radius)
                    if hit is not None:
                        state.last_hit = hit
        elif event.kind is EventKind.ERROR_ANNOTATION:
            for state in windows_for(event):
                state.errors.append(event.error_kind)

    return AlignedTrace(log.session_id, tuple(steps), tuple(unaligned))


@dataclass
class PathSamples:
    """Aggregated evidence for one path across traces."""

    durations: list[float] = field(default_factory=list)
    attempts: int = 0
    execution_errors: int = 0  # attempts with >= 1 execution annotation
    outcome_errors: int = 0  # attempts with >= 1 outcome annotation
    error_steps: int = 0  # attempts with >= 1 annotation of any kind

    @property
    def error_counts(self) -> dict[str, int]:
        return {"execution": self.execution_errors, "outcome": self.outcome_errors}


def path_samples(traces: Iterable[AlignedTrace]) -> dict[str, PathSamples]:
    """Merge aligned traces into per-path duration and error samples."""
    out: dict[str, PathSamples] = {}
    for trace in traces:
        for step in trace.steps:
            if step.path_id is None:
                continue
            sample = out.setdefault(step.path_id, PathSamples())
            sample.durations.append(step.duration_s)
            sample.attempts += 1
            kinds = set(step.errors)
            if ErrorKind.EXECUTION in kinds:
                sample.execution_errors += 1
            if ErrorKind.OUTCOME in kinds:
                sample.outcome_errors += 1
            if kinds:
                sample.error_steps += 1
    return out
