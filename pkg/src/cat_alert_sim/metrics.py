"""Per-alert latency accounting and CSV export.

The headline number of a run is, per alert, the gap between detection and the
delivery to the last targeted aircraft (``max_origin_diff``).
"""

from __future__ import annotations

import csv
import json
import logging
import math
from collections import defaultdict
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .exceptions import DuplicateDeliveryError, ExportError
from .models import Alert
from .types import AircraftId, AlertId, PathType, Seconds, TowerId

logger = logging.getLogger(__name__)

DEFAULT_BUCKET_WIDTH: Seconds = 10.0

DELIVERY_COLUMNS = [
    "alert_id",
    "origin",
    "target",
    "detection_time",
    "delivery_time",
    "origin_diff",
    "hops",
]
SUMMARY_COLUMNS = [
    "alert_id",
    "origin",
    "detection_time",
    "n_targets",
    "n_delivered",
    "max_origin_diff",
    "min_origin_diff",
    "mean_origin_diff",
]
SERIES_COLUMNS = ["bucket_start", "bucket_end", "n_alerts", "mean_max_origin_diff"]
TOWER_COLUMNS = [
    "alert_id",
    "tower",
    "arrival",
    "interval_wait",
    "priority_wait",
    "list_time",
    "overhead",
    "released",
]


@dataclass(frozen=True, slots=True)
class DeliveryRecord:
    alert_id: AlertId
    target: AircraftId
    detection_time: Seconds
    delivery_time: Seconds
    hops: int
    origin: AircraftId = -1

    def __post_init__(self) -> None:
        if self.delivery_time < self.detection_time:
            raise ValueError(
                f"Alert {self.alert_id} delivered to AC{self.target} before its detection"
            )

    @property
    def origin_diff(self) -> Seconds:
        return self.delivery_time - self.detection_time


@dataclass(frozen=True, slots=True)
class TowerRecord:
    """Time an alert spent at one tower, split into its overhead components.

    In interval mode the target list is built while the alert waits for the
    tick, so ``list_time`` is 0 and ``interval_wait`` runs from arrival to the tick.
    """

    alert_id: AlertId
    tower: TowerId
    arrival: Seconds
    interval_wait: Seconds
    priority_wait: Seconds
    list_time: Seconds

    @property
    def overhead(self) -> Seconds:
        return self.interval_wait + self.priority_wait + self.list_time

    @property
    def released(self) -> Seconds:
        return self.arrival + self.overhead


@dataclass(frozen=True, slots=True)
class AlertSummary:
    alert_id: AlertId
    origin: AircraftId
    detection_time: Seconds
    n_targets: int
    n_delivered: int
    max_origin_diff: Seconds | None
    min_origin_diff: Seconds | None
    mean_origin_diff: Seconds | None


@dataclass(frozen=True, slots=True)
class SeriesPoint:
    bucket_start: Seconds
    bucket_end: Seconds
    n_alerts: int
    mean_max_origin_diff: Seconds | None


@dataclass(frozen=True, slots=True)
class RunSummary:
    alerts: list[AlertSummary]
    series: list[SeriesPoint]

    @property
    def max_origin_diffs(self) -> list[Seconds]:
        return [a.max_origin_diff for a in self.alerts if a.max_origin_diff is not None]

    @property
    def n_incomplete(self) -> int:
        """Alerts that missed at least one of their targets."""
        return sum(a.n_delivered < a.n_targets for a in self.alerts)


@dataclass
class MetricsSink:
    alerts: dict[AlertId, Alert] = field(default_factory=dict)
    targets: dict[AlertId, set[AircraftId]] = field(default_factory=lambda: defaultdict(set))
    deliveries: list[DeliveryRecord] = field(default_factory=list)
    tower_records: list[TowerRecord] = field(default_factory=list)
    suppressed_duplicates: int = 0
    handoffs: int = 0
    _pairs: set[tuple[AlertId, AircraftId]] = field(default_factory=set, repr=False)

    def register_alert(self, alert: Alert) -> None:
        self.alerts[alert.alert_id] = alert

    def register_targets(self, alert_id: AlertId, targets: Iterable[AircraftId]) -> None:
        self.targets[alert_id].update(targets)

    def record_delivery(self, record: DeliveryRecord) -> None:
        """Append a delivery.

        Raises:
            DuplicateDeliveryError: the (alert, target) pair was already recorded.
        """
        pair = (record.alert_id, record.target)
        if pair in self._pairs:
            raise DuplicateDeliveryError(
                f"Alert {record.alert_id} already delivered to AC{record.target}"
            )
        self._pairs.add(pair)
        self.deliveries.append(record)

    def record_tower(self, record: TowerRecord) -> None:
        self.tower_records.append(record)

    def delivered(self, alert_id: AlertId, target: AircraftId) -> bool:
        return (alert_id, target) in self._pairs


def record_delivery(sink: MetricsSink, record: DeliveryRecord) -> MetricsSink:
    sink.record_delivery(record)
    return sink


def _summarize_alert(alert: Alert, n_targets: int, diffs: Sequence[Seconds]) -> AlertSummary:
    if not diffs:
        return AlertSummary(
            alert.alert_id, alert.origin, alert.detected_at, n_targets, 0, None, None, None
        )
    return AlertSummary(
        alert_id=alert.alert_id,
        origin=alert.origin,
        detection_time=alert.detected_at,
        n_targets=n_targets,
        n_delivered=len(diffs),
        max_origin_diff=max(diffs),
        min_origin_diff=min(diffs),
        mean_origin_diff=math.fsum(diffs) / len(diffs),
    )


def bucket_series(
    alerts: Sequence[AlertSummary], bucket_width: Seconds = DEFAULT_BUCKET_WIDTH
) -> list[SeriesPoint]:
    """Mean ``max_origin_diff`` of the alerts detected in each time bucket.

    Buckets run from 0 to the last detection; a bucket without delivered alerts
    has no mean.
    """
    if bucket_width <= 0:
        raise ValueError(f"bucket_width must be > 0, got {bucket_width}")
    if not alerts:
        return []
    groups: dict[int, list[Seconds]] = defaultdict(list)
    counts: dict[int, int] = defaultdict(int)
    for a in alerts:
        b = int(a.detection_time // bucket_width)
        counts[b] += 1
        if a.max_origin_diff is not None:
            groups[b].append(a.max_origin_diff)
    last = max(counts)
    series = []
    for b in range(last + 1):
        values = sorted(groups.get(b, []))
        mean = math.fsum(values) / len(values) if values else None
        series.append(
            SeriesPoint(b * bucket_width, (b + 1) * bucket_width, counts.get(b, 0), mean)
        )
    return series


def summarize(sink: MetricsSink, bucket_width: Seconds = DEFAULT_BUCKET_WIDTH) -> RunSummary:
    """Per-alert origin differences plus the time-bucketed series."""
    diffs: dict[AlertId, list[Seconds]] = defaultdict(list)
    for rec in sink.deliveries:
        diffs[rec.alert_id].append(rec.origin_diff)
    alerts = []
    for alert_id in sorted(sink.alerts):
        alert = sink.alerts[alert_id]
        n_targets = len(sink.targets.get(alert_id, ()))
        summary = _summarize_alert(alert, n_targets, diffs.get(alert_id, []))
        if summary.n_delivered < summary.n_targets:
            logger.warning(
                "Alert %d reached %d of %d targets before the run ended",
                alert_id,
                summary.n_delivered,
                summary.n_targets,
            )
        alerts.append(summary)
    return RunSummary(alerts=alerts, series=bucket_series(alerts, bucket_width))


def _fmt(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:#.15g}"
    return str(value)


def _write_csv(path: Path, columns: list[str], rows: Iterable[Sequence[Any]]) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def export(
    sink: MetricsSink,
    directory: PathType,
    meta: dict[str, Any] | None = None,
    bucket_width: Seconds = DEFAULT_BUCKET_WIDTH,
) -> list[Path]:
    """Write deliveries, summaries, series, tower timings and run metadata.

    Raises:
        ExportError: the directory or one of the files cannot be written.
    """
    out = Path(directory)
    summary = summarize(sink, bucket_width)
    deliveries = sorted(sink.deliveries, key=lambda r: (r.alert_id, r.target))
    towers = sorted(sink.tower_records, key=lambda r: (r.alert_id, r.tower))

    files = {
        "deliveries.csv": (
            DELIVERY_COLUMNS,
            (
                (r.alert_id, r.origin, r.target, r.detection_time, r.delivery_time,
                 r.origin_diff, r.hops)
                for r in deliveries
            ),
        ),
        "summaries.csv": (
            SUMMARY_COLUMNS,
            (
                (a.alert_id, a.origin, a.detection_time, a.n_targets, a.n_delivered,
                 a.max_origin_diff, a.min_origin_diff, a.mean_origin_diff)
                for a in summary.alerts
            ),
        ),
        "series.csv": (
            SERIES_COLUMNS,
            (
                (p.bucket_start, p.bucket_end, p.n_alerts, p.mean_max_origin_diff)
                for p in summary.series
            ),
        ),
        "towers.csv": (
            TOWER_COLUMNS,
            (
                (r.alert_id, r.tower, r.arrival, r.interval_wait, r.priority_wait,
                 r.list_time, r.overhead, r.released)
                for r in towers
            ),
        ),
    }  # fmt: skip

    written = []
    try:
        out.mkdir(parents=True, exist_ok=True)
        for name, (columns, rows) in files.items():
            path = out / name
            _write_csv(path, columns, rows)
            written.append(path)
        meta_path = out / "run_meta.json"
        meta_path.write_text(
            json.dumps(meta or {}, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        written.append(meta_path)
    except OSError as e:
        raise ExportError(f"Cannot write results into {out}: {e}") from e

    logger.info("%d result files written into %s", len(written), out)
    return written
