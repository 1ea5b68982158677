"""Training-loop runtime: callbacks, the linear depth schedule, telemetry.

Callbacks observe and annotate a shared :class:`CallbackContext`; they never
touch model math. Telemetry is an append-only in-memory buffer of
(timestamp, label, context) records with lossless JSONL persistence: floats
serialize in shortest round-trip form, so ``load(flush(buffer)) == buffer``
bit for bit.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

from .errors import EmptyLabel, InvalidConfig, MalformedLine


@dataclass(frozen=True)
class DepthSchedule:
    """Linear interpolation of a depth-like integer across a training horizon."""

    start: int
    end: int
    horizon: int

    def __post_init__(self):
        if self.start < 1 or self.end < 1 or self.horizon < 1:
            raise InvalidConfig("start, end and horizon must all be >= 1")


def _round_half_away_from_zero(x: float) -> int:
    return math.floor(x + 0.5) if x >= 0 else math.ceil(x - 0.5)


def depth_at(schedule: DepthSchedule, epoch: int) -> int:
    """Depth assigned at ``epoch``: round(start + (end-start)*clip(e/E, 0, 1)).

    Rounding is half-away-from-zero (platform bankers' rounding would bias
    midpoints). Epochs beyond the horizon clamp to ``end``.
    """
    fraction = min(max(epoch / schedule.horizon, 0.0), 1.0)
    return _round_half_away_from_zero(schedule.start + (schedule.end - schedule.start) * fraction)


@dataclass(frozen=True)
class TelemetryRecord:
    """One log entry: timestamp tau, event label sigma, context map xi."""

    tau: float
    sigma: str
    xi: dict[str, float | int | str] = field(default_factory=dict)


class TelemetryLogger:
    """Single-writer, append-only event buffer with monotone timestamps."""

    def __init__(self):
        self.records: list[TelemetryRecord] = []
        self._last_tau = float("-inf")

    def log(self, sigma: str, xi: dict | None = None) -> TelemetryRecord:
        """Stamp and buffer one event; wall time is clamped to be nondecreasing."""
        if not sigma:
            raise EmptyLabel("event label must be nonempty")
        tau = time.time()
        if tau < self._last_tau:
            tau = self._last_tau
        self._last_tau = tau
        record = TelemetryRecord(tau=tau, sigma=str(sigma), xi=dict(xi or {}))
        self.records.append(record)
        return record

    def __len__(self) -> int:
        return len(self.records)


def flush_jsonl(logger: TelemetryLogger, sink) -> None:
    """Write the buffer, one JSON object per line, to a path or text file."""
    def _write(fh):
        for record in logger.records:
            fh.write(json.dumps({"tau": record.tau, "sigma": record.sigma, "xi": record.xi}))
            fh.write("\n")

    if isinstance(sink, (str, Path)):
        with open(sink, "w", encoding="utf-8", newline="\n") as fh:
            _write(fh)
    else:
        _write(sink)


def load_jsonl(source) -> list[TelemetryRecord]:
    """Parse JSONL records from a path or an open text stream.

    Raw strings of lines can be wrapped in ``io.StringIO``.
    """
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    else:
        lines = source.readlines()
    records = []
    for number, line in enumerate(lines, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
            records.append(
                TelemetryRecord(tau=float(obj["tau"]), sigma=str(obj["sigma"]), xi=dict(obj["xi"]))
            )
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as err:
            raise MalformedLine(f"line {number}: {err}", line_number=number) from None
    return records


@dataclass
class CallbackContext:
    """Mutable high-level state shared between the loop body and callbacks."""

    epoch: int = 0
    losses: dict[str, float] = field(default_factory=dict)
    alpha: float = 1.0
    depth: int = 1
    extra: dict[str, float] = field(default_factory=dict)


class Callback:
    """Event hooks around the loop; defaults are no-ops."""

    def on_epoch_start(self, context: CallbackContext) -> None:
        pass

    def on_epoch_end(self, context: CallbackContext) -> None:
        pass

    def on_error(self, context: CallbackContext, message: str) -> None:
        pass


class DepthSchedulerCallback(Callback):
    """Applies the linear depth schedule to the context at each epoch start."""

    def __init__(self, schedule: DepthSchedule):
        self.schedule = schedule

    def on_epoch_start(self, context: CallbackContext) -> None:
        context.depth = depth_at(self.schedule, context.epoch)


class TelemetryCallback(Callback):
    """Emits epoch_start/epoch_end events carrying the context's scalars."""

    def __init__(self, logger: TelemetryLogger):
        self.logger = logger

    def on_epoch_start(self, context: CallbackContext) -> None:
        self.logger.log(
            "epoch_start",
            {"epoch": context.epoch, "alpha": context.alpha, "depth": context.depth},
        )

    def on_epoch_end(self, context: CallbackContext) -> None:
        xi: dict[str, float | int | str] = {"epoch": context.epoch, "alpha": context.alpha}
        xi.update(context.losses)
        self.logger.log("epoch_end", xi)

    def on_error(self, context: CallbackContext, message: str) -> None:
        self.logger.log("error", {"epoch": context.epoch, "message": message})


def run_with_callbacks(body, callbacks=(), epochs: int = 1, context: CallbackContext | None = None) -> CallbackContext:
    """Drive ``body(context)`` for ``epochs`` iterations with callback dispatch.

    Per epoch: every on_epoch_start in list order, the body, every
    on_epoch_end in list order. If the body raises, every on_error fires
    (list order) and the error propagates; later epochs do not run.
    Callbacks cannot suppress errors.
    """
    if epochs < 0:
        raise InvalidConfig(f"epochs must be nonnegative, got {epochs}")
    context = CallbackContext() if context is None else context
    callbacks = list(callbacks)
    for epoch in range(epochs):
        context.epoch = epoch
        for callback in callbacks:
            callback.on_epoch_start(context)
        try:
            body(context)
        except Exception as err:
            message = f"{type(err).__name__}: {err}"
            for callback in callbacks:
                callback.on_error(context, message)
            raise
        for callback in callbacks:
            callback.on_epoch_end(context)
    return context
