"""Deterministic discrete-event core.

Events sit in a heap ordered by ``(time, seq)``; ``seq`` grows with every
schedule call so simultaneous events run in the order they were scheduled.
The kinematics tick drives the per-time-step loop: move the fleet, hand aircraft
over between towers, sample every sensor and hand alerts to the strategy.
"""

from __future__ import annotations

import heapq
import itertools
import logging
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import replace
from typing import Self

from rich.panel import Panel
from rich.text import Text

from .dissemination import (
    DisseminationParams,
    Plan,
    check_new_aircraft,
    handle_detection,
    tower_targets,
)
from .events import Event, EventKind
from .exceptions import SchedulingError, StrategyError
from .geometry import propagation_delay
from .kinematics import move_fleet, nearest_tower, process_handoffs
from .metrics import DeliveryRecord, MetricsSink, TowerRecord
from .models import (
    Aircraft,
    Alert,
    AtcTower,
    CatRegion,
    Establishing,
    Open,
    TowerMode,
)
from .sensor import detect_cat, sample_sensor, update_average
from .strategies import (
    IndirectInterval,
    IndirectPriority,
    MultiAtcRelay,
    Strategy,
    is_direct,
    is_indirect,
    tower_mode_for,
)
from .types import AircraftId, AlertId, Seconds, TowerId

logger = logging.getLogger(__name__)

ALERT_PRIORITY = 0
BACKGROUND_PRIORITY = 1


class Simulation:
    """One simulation run: clock, event queue and the world it mutates."""

    def __init__(
        self,
        fleet: Sequence[Aircraft],
        towers: Sequence[AtcTower],
        regions: Sequence[CatRegion],
        strategy: Strategy,
        params: DisseminationParams | None = None,
        tick: Seconds = 1.0,
        duration: Seconds = 1000.0,
        background: Iterable[tuple[Seconds, TowerId]] = (),
        sink: MetricsSink | None = None,
        record_trace: bool = False,
    ):
        if tick <= 0:
            raise ValueError(f"tick must be > 0, got {tick}")
        if (is_indirect(strategy) or isinstance(strategy, MultiAtcRelay)) and not towers:
            raise StrategyError(f"{strategy.kind} needs at least one ATC tower")

        self.clock: Seconds = 0.0
        self.queue: list[tuple[Seconds, int, Event]] = []
        self._fleet: dict[AircraftId, Aircraft] = {ac.id: ac for ac in fleet}
        self._towers: dict[TowerId, AtcTower] = {t.id: t for t in towers}
        self.regions = list(regions)
        self.strategy = strategy
        self._params = params or DisseminationParams()
        self.tick = tick
        self.duration = duration
        self.sink = sink or MetricsSink()
        self.trace: list[tuple[Seconds, int, EventKind, int]] | None = [] if record_trace else None

        self._seq = itertools.count()
        self._alert_ids = itertools.count()
        self._arrivals = itertools.count()
        self._current_seq = -1
        self._active_regions: list[CatRegion] = []
        self._rechecks: dict[AlertId, tuple[Alert, set[AircraftId]]] = {}
        self._handlers = {
            EventKind.KINEMATICS_TICK: self._on_kinematics_tick,
            EventKind.SENSOR_SAMPLE: self._on_sensor_sample,
            EventKind.UPLINK: self._on_uplink,
            EventKind.TOWER_RECEIVE: self._on_tower_receive,
            EventKind.BROADCAST_TICK: self._on_broadcast_tick,
            EventKind.QUEUE_SERVICE: self._on_queue_service,
            EventKind.TOWER_FORWARD: self._on_tower_forward,
            EventKind.LIST_CREATED: self._on_list_created,
            EventKind.DOWNLINK: self._on_downlink,
            EventKind.DIRECT_SEND: self._on_direct_send,
            EventKind.CHANNEL_ESTABLISHED: self._on_channel_established,
            EventKind.DELIVERY: self._on_delivery,
            EventKind.HANDOFF: self._on_handoff,
            EventKind.STORE_RETRY: self._on_store_retry,
        }

        mode = tower_mode_for(strategy)
        for tower in self._towers.values():
            tower.mode = mode
            match strategy:
                case IndirectInterval(period=period):
                    tower.broadcast_period = period
                case IndirectPriority(service_time=service_time):
                    tower.service_time = service_time

        # Les avions déjà couverts au départ ont un canal ouvert avec leur tour
        move_fleet(self._fleet.values(), 0.0)
        for ac in self._fleet.values():
            ac.connected_tower = nearest_tower(ac, towers)
            if ac.connected_tower is not None:
                ac.atc_channels[ac.connected_tower] = Open()

        self.schedule(Event(0.0, EventKind.KINEMATICS_TICK))
        if mode is TowerMode.INTERVAL:
            for tower in self._towers.values():
                self.schedule(
                    Event(tower.broadcast_period, EventKind.BROADCAST_TICK, tower=tower.id, index=1)
                )
        for when, tower_id in sorted(background):
            self.schedule(Event(when, EventKind.TOWER_RECEIVE, tower=tower_id))

    # ---------------------------------------------------------
    # World view
    # ---------------------------------------------------------
    @property
    def fleet(self) -> Mapping[AircraftId, Aircraft]:
        return self._fleet

    @property
    def towers(self) -> Mapping[TowerId, AtcTower]:
        return self._towers

    @property
    def params(self) -> DisseminationParams:
        return self._params

    # ---------------------------------------------------------
    # Core loop
    # ---------------------------------------------------------
    def schedule(self, event: Event) -> Event:
        """Insert an event, stamping its ``seq`` and ``cause``.

        Raises:
            SchedulingError: the event lies before the current clock.
        """
        if event.time < self.clock:
            raise SchedulingError(
                f"{event.kind.value} scheduled at {event.time!r} < clock {self.clock!r}"
            )
        event = replace(event, seq=next(self._seq), cause=self._current_seq)
        heapq.heappush(self.queue, (event.time, event.seq, event))
        return event

    def run(self, duration: Seconds | None = None) -> MetricsSink:
        """Dispatch events in ``(time, seq)`` order up to the horizon."""
        horizon = self.duration if duration is None else duration
        dispatched = 0
        while self.queue and self.queue[0][0] <= horizon:
            _, _, event = heapq.heappop(self.queue)
            self.clock = event.time
            self._current_seq = event.seq
            if self.trace is not None:
                self.trace.append((event.time, event.seq, event.kind, event.cause))
            self._handlers[event.kind](event)
            dispatched += 1
        self._current_seq = -1
        logger.info(
            "Run finished at t=%.3f: %d events, %d alerts, %d deliveries, %d duplicates dropped",
            self.clock,
            dispatched,
            len(self.sink.alerts),
            len(self.sink.deliveries),
            self.sink.suppressed_duplicates,
        )
        stored = sum(len(ac.stored_alerts) for ac in self._fleet.values())
        if stored:
            logger.warning("%d alerts still stored on board at the end of the run", stored)
        held = self._register_held_alerts()
        if held:
            logger.warning("%d alerts still held at the towers at the end of the run", held)
        return self.sink

    def _register_held_alerts(self) -> int:
        """Count alerts a tower still holds, registering whom they would have reached."""
        path_filter = isinstance(self.strategy, MultiAtcRelay) or self._params.path_filter
        held = 0
        for tower in self._towers.values():
            queued = [entry[2] for entry in [*tower.queue, tower.in_service] if entry is not None]
            for alert in queued:
                if alert is None:
                    continue
                held += 1
                targets = tower_targets(self, tower, alert, path_filter)
                self.sink.register_targets(alert.alert_id, targets)
            held += len(tower.pending) + len(tower.waiting)
        return held

    def _apply(self, plan: Plan, alert: Alert) -> None:
        for event in plan.events:
            if event.kind is EventKind.CHANNEL_ESTABLISHED:
                self._mark_establishing(event)
            self.schedule(event)
        if plan.targets:
            self.sink.register_targets(alert.alert_id, plan.targets)
        if plan.buffer:
            self._fleet[alert.origin].stored_alerts.append(alert)

    def _mark_establishing(self, event: Event) -> None:
        assert event.aircraft is not None
        ac = self._fleet[event.aircraft]
        state = Establishing(event.time)
        if event.tower is not None:
            ac.atc_channels[event.tower] = state
        elif event.target is not None:
            ac.channels[event.target] = state
            self._fleet[event.target].channels[ac.id] = state

    def _disseminate(self, alert: Alert) -> None:
        plan = handle_detection(alert, self, self.strategy)
        self._apply(plan, alert)
        if is_direct(self.strategy) and self._params.comm_range is not None and not plan.buffer:
            self._rechecks[alert.alert_id] = (alert, set(plan.targets))

    def _send(self, kind: EventKind, delay: Seconds, **fields: object) -> None:
        self.schedule(Event(self.clock + delay, kind, **fields))  # type: ignore[arg-type]

    # ---------------------------------------------------------
    # Aircraft side
    # ---------------------------------------------------------
    def _on_kinematics_tick(self, event: Event) -> None:
        now = self.clock
        move_fleet(self._fleet.values(), now)
        for h in process_handoffs(self._fleet.values(), list(self._towers.values())):
            self.schedule(Event(now, EventKind.HANDOFF, aircraft=h.aircraft, tower=h.current))
        self._active_regions = [r for r in self.regions if r.active_at(now)]

        for ac in self._fleet.values():
            self.schedule(Event(now, EventKind.SENSOR_SAMPLE, aircraft=ac.id))
        for ac in self._fleet.values():
            if ac.stored_alerts:
                self.schedule(Event(now, EventKind.STORE_RETRY, aircraft=ac.id))

        self._recheck_new_aircraft(now)
        self._retry_waiting_towers(now)

        following = (event.index + 1) * self.tick
        if following <= self.duration:
            self.schedule(Event(following, EventKind.KINEMATICS_TICK, index=event.index + 1))

    def _recheck_new_aircraft(self, now: Seconds) -> None:
        for alert_id in list(self._rechecks):
            alert, already = self._rechecks[alert_id]
            if now - alert.detected_at > self._params.recheck_window:
                del self._rechecks[alert_id]
                continue
            plan = check_new_aircraft(alert, self, self.strategy, already)
            if plan.targets:
                logger.debug("Alert %d: new aircraft in range %s", alert_id, plan.targets)
                already.update(plan.targets)
                self._apply(plan, alert)

    def _on_sensor_sample(self, event: Event) -> None:
        assert event.aircraft is not None
        ac = self._fleet[event.aircraft]
        s = replace(ac.sensor, current=sample_sensor(ac, self._active_regions))
        alert = detect_cat(s, ac, self.clock, self._alert_ids)
        ac.sensor = update_average(s)
        if alert is None:
            return
        self.sink.register_alert(alert)
        self._disseminate(alert)

    def _on_store_retry(self, event: Event) -> None:
        assert event.aircraft is not None
        ac = self._fleet[event.aircraft]
        stored, ac.stored_alerts = ac.stored_alerts, []
        for alert in stored:
            self._disseminate(alert)
        flushed = len(stored) - len(ac.stored_alerts)
        if flushed:
            logger.debug("AC%d flushed %d stored alerts", ac.id, flushed)

    def _on_handoff(self, event: Event) -> None:
        self.sink.handoffs += 1
        logger.debug("AC%s now connected to %s", event.aircraft, event.tower)

    def _on_channel_established(self, event: Event) -> None:
        assert event.aircraft is not None
        ac = self._fleet[event.aircraft]
        if event.tower is not None:
            ac.atc_channels[event.tower] = Open()
        elif event.target is not None:
            ac.channels[event.target] = Open()
            self._fleet[event.target].channels[ac.id] = Open()

    def _on_uplink(self, event: Event) -> None:
        assert event.aircraft is not None and event.tower is not None
        src = self._fleet[event.aircraft].position_at(self.clock)
        tower = self._towers[event.tower]
        delay = propagation_delay(src, tower.pos, self._params.signal_speed)
        self._send(
            EventKind.TOWER_RECEIVE, delay, tower=tower.id, alert=event.alert, hops=event.hops + 1
        )

    def _on_direct_send(self, event: Event) -> None:
        assert event.aircraft is not None and event.target is not None
        src = self._fleet[event.aircraft].position_at(self.clock)
        dst = self._fleet[event.target].position_at(self.clock)
        delay = propagation_delay(src, dst, self._params.signal_speed)
        self._send(
            EventKind.DELIVERY, delay, target=event.target, alert=event.alert, hops=event.hops + 1
        )

    def _on_delivery(self, event: Event) -> None:
        assert event.alert is not None and event.target is not None
        alert = event.alert
        ac = self._fleet[event.target]
        if alert.alert_id in ac.received:
            self.sink.suppressed_duplicates += 1
            logger.debug("AC%d already holds alert %d", ac.id, alert.alert_id)
            return
        ac.received.add(alert.alert_id)
        self.sink.record_delivery(
            DeliveryRecord(
                alert_id=alert.alert_id,
                target=ac.id,
                detection_time=alert.detected_at,
                delivery_time=self.clock,
                hops=event.hops,
                origin=alert.origin,
            )
        )

    # ---------------------------------------------------------
    # Tower side
    # ---------------------------------------------------------
    def _on_tower_receive(self, event: Event) -> None:
        assert event.tower is not None
        tower = self._towers[event.tower]
        alert = event.alert
        now = self.clock

        if alert is None:
            # trafic de fond : seule la file de priorité le voit passer
            if tower.mode is TowerMode.PRIORITY:
                self._enqueue(tower, BACKGROUND_PRIORITY, None, now, 0)
            return

        if alert.alert_id in tower.seen:
            self.sink.suppressed_duplicates += 1
            logger.debug("ATC%d drops duplicate of alert %d", tower.id, alert.alert_id)
            return
        tower.seen.add(alert.alert_id)

        if isinstance(self.strategy, MultiAtcRelay):
            # flood to every link except the one it came from
            for peer in sorted(tower.links - {event.peer_tower}):
                self.schedule(
                    Event(
                        now,
                        EventKind.TOWER_FORWARD,
                        tower=tower.id,
                        peer_tower=peer,
                        alert=alert,
                        hops=event.hops,
                    )
                )

        match tower.mode:
            case TowerMode.INTERVAL:
                # la liste se construit pendant l'attente du prochain créneau
                tower.arrivals[alert.alert_id] = now
                self._send(
                    EventKind.LIST_CREATED,
                    tower.list_creation_time,
                    tower=tower.id,
                    alert=alert,
                    hops=event.hops,
                )
            case TowerMode.PRIORITY:
                self._enqueue(tower, ALERT_PRIORITY, alert, now, event.hops)
            case _:
                self._release(tower, alert, now, event.hops, 0.0, 0.0)

    def _on_tower_forward(self, event: Event) -> None:
        assert event.tower is not None and event.peer_tower is not None
        src, dst = self._towers[event.tower], self._towers.get(event.peer_tower)
        if dst is None:
            logger.warning("ATC%d links to unknown tower %d", src.id, event.peer_tower)
            return
        assert isinstance(self.strategy, MultiAtcRelay)
        processing = self.strategy.inter_tower_processing
        delay = propagation_delay(src.pos, dst.pos, self._params.signal_speed) + processing
        self._send(
            EventKind.TOWER_RECEIVE,
            delay,
            tower=dst.id,
            peer_tower=src.id,
            alert=event.alert,
            hops=event.hops + 1,
        )

    def _release(
        self,
        tower: AtcTower,
        alert: Alert,
        arrival: Seconds,
        hops: int,
        interval_wait: Seconds,
        priority_wait: Seconds,
    ) -> None:
        """End of the tower wait: start building the target list."""
        self.sink.record_tower(
            TowerRecord(
                alert_id=alert.alert_id,
                tower=tower.id,
                arrival=arrival,
                interval_wait=interval_wait,
                priority_wait=priority_wait,
                list_time=tower.list_creation_time,
            )
        )
        self._send(
            EventKind.LIST_CREATED, tower.list_creation_time, tower=tower.id, alert=alert, hops=hops
        )

    def _on_broadcast_tick(self, event: Event) -> None:
        assert event.tower is not None
        tower = self._towers[event.tower]
        now = self.clock
        pending, tower.pending = tower.pending, []
        for alert, hops, targets in pending:
            arrival = tower.arrivals.pop(alert.alert_id)
            self.sink.record_tower(
                TowerRecord(
                    alert_id=alert.alert_id,
                    tower=tower.id,
                    arrival=arrival,
                    interval_wait=now - arrival,
                    priority_wait=0.0,
                    list_time=0.0,
                )
            )
            self._dispatch_downlinks(tower, alert, hops, targets)
        following = (event.index + 1) * tower.broadcast_period
        if following <= self.duration:
            self.schedule(
                Event(following, EventKind.BROADCAST_TICK, tower=tower.id, index=event.index + 1)
            )

    def _enqueue(
        self, tower: AtcTower, priority: int, alert: Alert | None, arrival: Seconds, hops: int
    ) -> None:
        heapq.heappush(tower.queue, (priority, next(self._arrivals), alert, arrival, hops))
        if tower.in_service is None:
            self._start_service(tower)

    def _start_service(self, tower: AtcTower) -> None:
        tower.in_service = heapq.heappop(tower.queue)
        self._send(EventKind.QUEUE_SERVICE, tower.service_time, tower=tower.id)

    def _on_queue_service(self, event: Event) -> None:
        assert event.tower is not None
        tower = self._towers[event.tower]
        done, tower.in_service = tower.in_service, None
        assert done is not None
        _, _, alert, arrival, hops = done
        if alert is not None:
            self._release(tower, alert, arrival, hops, 0.0, self.clock - arrival)
        if tower.queue:
            self._start_service(tower)

    def _on_list_created(self, event: Event) -> None:
        assert event.tower is not None and event.alert is not None
        tower, alert = self._towers[event.tower], event.alert
        relay = isinstance(self.strategy, MultiAtcRelay)
        path_filter = relay or self._params.path_filter
        targets = tower_targets(self, tower, alert, path_filter)
        if not targets:
            if not relay and len(self._fleet) > 1:
                # personne à prévenir : on réessaie au prochain tick
                tower.waiting.append((alert, event.hops))
            return
        self.sink.register_targets(alert.alert_id, targets)
        if tower.mode is TowerMode.INTERVAL:
            tower.pending.append((alert, event.hops, targets))
            return
        self._dispatch_downlinks(tower, alert, event.hops, targets)

    def _dispatch_downlinks(
        self, tower: AtcTower, alert: Alert, hops: int, targets: Sequence[AircraftId]
    ) -> None:
        for target in targets:
            self.schedule(
                Event(
                    self.clock,
                    EventKind.DOWNLINK,
                    tower=tower.id,
                    target=target,
                    alert=alert,
                    hops=hops,
                )
            )

    def _retry_waiting_towers(self, now: Seconds) -> None:
        for tower in self._towers.values():
            waiting, tower.waiting = tower.waiting, []
            for alert, hops in waiting:
                if now - alert.detected_at > self._params.recheck_window:
                    logger.debug("ATC%d gives up on alert %d", tower.id, alert.alert_id)
                    tower.arrivals.pop(alert.alert_id, None)
                    continue
                self.schedule(
                    Event(now, EventKind.LIST_CREATED, tower=tower.id, alert=alert, hops=hops)
                )

    def _on_downlink(self, event: Event) -> None:
        assert event.tower is not None and event.target is not None
        tower = self._towers[event.tower]
        dst = self._fleet[event.target].position_at(self.clock)
        delay = propagation_delay(tower.pos, dst, self._params.signal_speed)
        self._send(
            EventKind.DELIVERY, delay, target=event.target, alert=event.alert, hops=event.hops + 1
        )

    # ---------------------------------------------------------
    # Display
    # ---------------------------------------------------------
    def __rich__(self) -> Panel:
        lines = [
            f"strategy = {self.strategy.kind}",
            f"clock = {self.clock:.3f} s / {self.duration:.0f} s",
            f"aircraft = {len(self._fleet)}, towers = {len(self._towers)}",
            f"regions = {len(self.regions)}",
            f"pending events = {len(self.queue)}",
        ]
        text = Text("\n".join(lines), style="cyan")
        return Panel(text, title="Simulation", title_align="left", border_style="blue")

    def __enter__(self) -> Self:
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        if exc_type is not None:
            logger.error("Simulation aborted at t=%.3f: %s", self.clock, exc)


def schedule(state: Simulation, event: Event) -> Simulation:
    state.schedule(event)
    return state


def run(state: Simulation, duration: Seconds | None = None) -> MetricsSink:
    return state.run(duration)
