"""Deterministic discrete-event execution of a circuit on a trap layout.

Gates are timed tokens. Strings are fetched from their memory cells,
shuttled to the QALU, pushed through the processing pipeline and written
back (or kept in the QALU when the next queued job needs them). Measure
and init ops route the string through a detection zone instead.

All times are integer nanoseconds internally; traces report seconds.
"""

from __future__ import annotations

import csv
import heapq
import itertools
import json
import random
from dataclasses import dataclass, field
from typing import Optional

from .core import Circuit, MachineParams, OpKind, QUBITS_PER_STRING, TrapLayout, ZoneKind
from .models import machine_throughput
from .errors import CapacityExceeded, DeadlockDetected, QvnError
from .pipeline import PipelineConfig, default_pipeline, ghz_generation_time, \
    pipeline_metrics
from .shuttle import (MemoryState, MovePlan, access_memory_cell, plan_transport,
                      store_memory_cell)

EVENT_KINDS = ("MuxSwitch", "ShuttleStep", "StageEnter", "StageExit", "Gate1Q", "Gate2Q",
               "DetectStart", "DetectEnd", "InitDone")
IONS_PER_STRING = 8


def ns(seconds: float) -> int:
    return int(round(seconds * 1e9))


# ---------------------------------------------------------------- events

@dataclass(frozen=True)
class Event:
    t_ns: int
    seq: int
    kind: str
    subject: tuple
    zone: Optional[str] = None
    dur_ns: int = 0
    data: dict = field(default_factory=dict)

    @property
    def t(self) -> float:
        return self.t_ns / 1e9

    @property
    def end_ns(self) -> int:
        return self.t_ns + self.dur_ns

    def to_dict(self) -> dict:
        d = {"t": self.t, "seq": self.seq, "kind": self.kind,
             "subject": list(self.subject), "zone": self.zone}
        if self.dur_ns:
            d["dur"] = self.dur_ns / 1e9
        d.update(self.data)
        return d


@dataclass
class EventTrace:
    events: list[Event]
    stage_labels: list[str] = field(default_factory=list)
    detection_zones: list[str] = field(default_factory=list)
    budgets: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.events)

    def __iter__(self):
        return iter(self.events)

    def to_jsonl(self) -> str:
        return "".join(json.dumps(e.to_dict(), sort_keys=False) + "\n" for e in self.events)


# ---------------------------------------------------------------- engine

class Engine:
    """Generator-based event loop ordered by (time, sequence)."""

    def __init__(self):
        self.now = 0
        self._heap: list = []
        self._seq = itertools.count()

    def at(self, t_ns: int, fn, *args):
        heapq.heappush(self._heap, (t_ns, next(self._seq), fn, args))

    def spawn(self, gen):
        self.at(self.now, self._resume, gen, None)

    def _resume(self, gen, value):
        try:
            cmd = gen.send(value)
        except StopIteration:
            return
        cmd.bind(self, gen)

    def run(self):
        while self._heap:
            t, _, fn, args = heapq.heappop(self._heap)
            self.now = t
            fn(*args)


class Timeout:
    def __init__(self, dt_ns: int):
        self.dt_ns = max(0, int(dt_ns))

    def bind(self, eng: Engine, gen):
        eng.at(eng.now + self.dt_ns, eng._resume, gen, None)


class Resource:
    """Pool of interchangeable units granted lowest-key first."""

    def __init__(self, eng: Engine, name: str, units):
        self.eng = eng
        self.name = name
        self.units = list(units)
        self.free = list(self.units)
        self.queue: list = []
        self._seq = itertools.count()
        self.busy_ns = {u: 0 for u in self.units}
        self._since: dict = {}

    def request(self, key) -> "_Request":
        return _Request(self, key)

    def _grant_waiting(self):
        while self.free and self.queue:
            _, _, gen = heapq.heappop(self.queue)
            unit = self.free.pop(0)
            self._since[unit] = self.eng.now
            self.eng.at(self.eng.now, self.eng._resume, gen, unit)

    def release(self, unit):
        self.busy_ns[unit] += self.eng.now - self._since.pop(unit)
        self.free.append(unit)
        self.free.sort(key=self.units.index)
        self._grant_waiting()


class _Request:
    def __init__(self, res: Resource, key):
        self.res, self.key = res, key

    def bind(self, eng: Engine, gen):
        heapq.heappush(self.res.queue, (self.key, next(self.res._seq), gen))
        self.res._grant_waiting()


# ---------------------------------------------------------------- jobs

@dataclass
class Job:
    index: int
    kind: str  # "gates", "measure" or "init"
    strings: tuple
    ops: list


def batch_jobs(circuit: Circuit) -> list[Job]:
    """Group consecutive gates that touch at most two strings into one QALU pass."""
    jobs: list[Job] = []
    cur: Optional[Job] = None
    for op in circuit.ops:
        strs = sorted({q // QUBITS_PER_STRING for q in op.qubits})
        if op.kind in (OpKind.MEASURE, OpKind.INIT):
            cur = None
            kind = "measure" if op.kind is OpKind.MEASURE else "init"
            jobs.append(Job(len(jobs), kind, tuple(strs), [op]))
            continue
        if cur is not None and len(set(cur.strings) | set(strs)) <= 2:
            cur.strings = tuple(sorted(set(cur.strings) | set(strs)))
            cur.ops.append(op)
        else:
            cur = Job(len(jobs), "gates", tuple(strs), [op])
            jobs.append(cur)
    return jobs


def gate_schedule(ops, params: MachineParams) -> list[tuple[int, int, object]]:
    """(offset, duration, op) per gate. Single-qubit gates share layers of up
    to ``n_parallel_1q``; a qubit is never in two gates at once."""
    t1, t2 = ns(params.t_1q_s), ns(params.t_2q_s)
    out = []
    layer_start: list[int] = []
    layer_fill: list[int] = []
    free_at: dict[int, int] = {}
    barrier = 0
    for op in ops:
        if op.kind is OpKind.GATE_2Q:
            start = max([barrier] + [free_at.get(q, 0) for q in op.qubits]
                        + [s + t1 for s in layer_start])
            out.append((start, t2, op))
            barrier = start + t2
            for q in op.qubits:
                free_at[q] = barrier
            layer_start, layer_fill = [], []
            continue
        ready = max(barrier, free_at.get(op.qubits[0], 0))
        for i, s in enumerate(layer_start):
            if s >= ready and layer_fill[i] < params.n_parallel_1q:
                layer_fill[i] += 1
                start = s
                break
        else:
            start = max([ready] + [s + t1 for s in layer_start])
            layer_start.append(start)
            layer_fill.append(1)
        out.append((start, t1, op))
        free_at[op.qubits[0]] = start + t1
    return out


# ---------------------------------------------------------------- metrics

@dataclass
class SimMetrics:
    makespan_s: float
    gate_counts: dict
    single_qubit_ops_per_s: float
    entangling_gates_per_s: float
    dac_switch_count: int
    utilization: dict
    peak_dac_pairs: dict
    idle_phonons: dict
    ideal: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"makespan_s": self.makespan_s,
                "gate_counts": self.gate_counts,
                "rates": {"single_qubit_ops_per_s": self.single_qubit_ops_per_s,
                          "entangling_gates_per_s": self.entangling_gates_per_s,
                          **self.ideal},
                "dac_switch_count": self.dac_switch_count,
                "utilization": self.utilization,
                "peak_dac_pairs": self.peak_dac_pairs,
                "idle_phonons": {str(k): v for k, v in self.idle_phonons.items()}}


def idle_phonons(idle_time_s: float, heating_rate: float) -> float:
    if idle_time_s < 0 or heating_rate < 0:
        raise ValueError("inputs must be non-negative")
    return idle_time_s * heating_rate


def audit_trace(trace: EventTrace) -> dict:
    """Replay DAC assignments per bank; return the peak count of distinct DAC
    pairs in use. Independent of the planner's own bookkeeping."""
    active: dict[str, dict] = {}
    peak: dict[str, int] = {}
    for e in trace.events:
        bank = e.data.get("bank")
        if bank is None:
            continue
        a = active.setdefault(bank, {})
        for dac, seg in e.data.get("assign", ()):
            if seg in a and a[seg] != dac:
                raise QvnError(f"bank {bank}: pair {seg} driven by two DACs at seq {e.seq}")
            a[seg] = dac
        peak[bank] = max(peak.get(bank, 0), len(set(a.values())))
        for seg in e.data.get("release", ()):
            a.pop(seg, None)
    return peak


# ---------------------------------------------------------------- simulator

class _Run:
    def __init__(self, layout: TrapLayout, circuit: Circuit, params: MachineParams, seed: int):
        self.layout, self.circuit, self.params = layout, circuit, params
        self.rng = random.Random(seed)
        self.eng = Engine()
        self.raw: list = []
        self._emit_seq = itertools.count()
        self.pipe: PipelineConfig = params.pipeline or default_pipeline(qip_s=params.t_2q_s)
        self.stages = self.pipe.expanded()
        self.labels = self.pipe.labels()
        self.qip = self.pipe.qip_index()
        self.stage_res = [Resource(self.eng, lbl, [0]) for lbl in self.labels]
        self.det_zones = [z.id for z in layout.zones_of(ZoneKind.DETECTION)]
        self.det_res = Resource(self.eng, "detection", self.det_zones) if self.det_zones else None
        qalus = layout.zones_of(ZoneKind.QALU)
        if not qalus:
            raise QvnError("layout has no QALU zone")
        self.qalu = qalus[0].id
        self.banks: dict[str, Resource] = {}
        self.jobs = batch_jobs(circuit)
        self.next_job = 0
        self.issued = [False] * len(self.jobs)
        self.done = 0
        self.busy: dict = {}
        self.in_qalu: dict = {}
        self.pipeline_ns: dict = {}
        self._place_strings()

    # -- setup
    def _place_strings(self):
        cells = self.layout.memory_cells()
        per_cell = {key: max(1, self.layout.zone(key[0]).cell_capacity // IONS_PER_STRING)
                    for key in cells}
        home = {}
        qmap = self.circuit.qubit_map
        strings = sorted({q // QUBITS_PER_STRING for op in self.circuit.ops for q in op.qubits})
        slots = [key for key in cells for _ in range(per_cell[key])]
        for s in strings:
            mapped = [qmap[q] for q in range(s * QUBITS_PER_STRING, (s + 1) * QUBITS_PER_STRING)
                      if q in qmap]
            if mapped:
                home[s] = (mapped[0][0], tuple(mapped[0][1]))
            elif s < len(slots):
                home[s] = slots[s]
            else:
                raise CapacityExceeded(f"string {s} does not fit: layout holds {len(slots)} strings")
        residents = {key: [] for key in cells}
        for s, key in home.items():
            if key not in residents:
                raise CapacityExceeded(f"string {s} mapped to unknown cell {key}")
            residents[key].append(s)
            if len(residents[key]) > per_cell[key]:
                raise CapacityExceeded(f"cell {key} holds at most {per_cell[key]} strings")
        self.home = home
        self.memory = MemoryState(self.layout, residents)
        self.initial_memory = self.memory.snapshot()
        for s in strings:
            self.busy[s] = False
            self.in_qalu[s] = False
            self.pipeline_ns[s] = 0

    def bank(self, name: str) -> Resource:
        if name not in self.banks:
            self.banks[name] = Resource(self.eng, name, [0])
        return self.banks[name]

    def key(self, strings):
        """First come first served; equally-ready requests go by lowest string
        id, then by the seeded generator."""
        return (self.eng.now, min(strings) if strings else -1, self.rng.random())

    # -- trace
    def emit(self, t_ns, kind, subject, zone=None, dur_ns=0, **data):
        self.raw.append((t_ns, next(self._emit_seq), kind, tuple(subject), zone, dur_ns, data))

    def emit_plan(self, plan: MovePlan, subject, zone):
        """Steps that move a well are ShuttleSteps; pure re-wiring is a MuxSwitch."""
        t0 = self.eng.now
        prev = None
        for st in plan.steps:
            kind = "ShuttleStep" if prev is not None and st.wells != prev else "MuxSwitch"
            prev = st.wells
            self.emit(t0 + st.t_ns, kind, subject, zone, bank=plan.bank,
                      assign=[list(a) for a in st.assign], release=list(st.release))

    def release_plan(self, plan: MovePlan, subject, zone):
        """Hand back whatever pairs a plan still holds at its end."""
        active = {}
        for st in plan.steps:
            for dac, seg in st.assign:
                active[seg] = dac
            for seg in st.release:
                active.pop(seg, None)
        if active:
            self.emit(self.eng.now, "MuxSwitch", subject, zone, bank=plan.bank,
                      assign=[], release=sorted(active))

    # -- legs
    def leg(self, bank_name, plan_fn, subject, zone):
        res = self.bank(bank_name)
        unit = yield res.request(self.key(subject))
        plan = plan_fn()
        self.emit_plan(plan, subject, zone)
        yield Timeout(ns(plan.duration_s))
        self.release_plan(plan, subject, zone)
        res.release(unit)
        return plan

    def fetch(self, s, dest):
        """Memory cell (or QALU parking) to ``dest`` zone."""
        p, layout = self.params, self.layout
        zone_id, cell = self.home[s]
        if self.in_qalu[s]:
            self.in_qalu[s] = False
            src = self.qalu
        else:
            mem_bank = layout.zone(zone_id).bank or zone_id
            plan = yield from self.leg(
                mem_bank, lambda: access_memory_cell(layout, zone_id, cell, p, self.memory, s),
                (s,), zone_id)
            self.memory.apply(plan)
            src = (zone_id, cell)
        if src != dest:
            dist = layout.transport_distance(src, dest)
            yield from self.leg("transport", lambda: plan_transport(layout, s, dist, p),
                                (s,), "transport")

    def write_back(self, s, src):
        p, layout = self.params, self.layout
        zone_id, cell = self.home[s]
        dist = layout.transport_distance(src, (zone_id, cell))
        yield from self.leg("transport", lambda: plan_transport(layout, s, dist, p),
                            (s,), "transport")
        mem_bank = layout.zone(zone_id).bank or zone_id
        plan = yield from self.leg(
            mem_bank, lambda: store_memory_cell(layout, zone_id, cell, p, s, self.memory),
            (s,), zone_id)
        self.memory.apply(plan)
        self.busy[s] = False
        self.dispatch()

    # -- scheduling
    def window(self) -> list[int]:
        """Unissued jobs the dispatcher may look at (head plus one)."""
        out, i = [], self.next_job
        while i < len(self.jobs) and len(out) < 2:
            if not self.issued[i]:
                out.append(i)
            i += 1
        return out

    def dispatch(self):
        while True:
            progressed = False
            blocked_strings: set = set()
            for i in self.window():
                job = self.jobs[i]
                if (not any(self.busy[s] for s in job.strings)
                        and not blocked_strings & set(job.strings)):
                    self.issue(i)
                    progressed = True
                    break
                blocked_strings |= set(job.strings)
            if not progressed:
                return

    def issue(self, i):
        self.issued[i] = True
        while self.next_job < len(self.jobs) and self.issued[self.next_job]:
            self.next_job += 1
        job = self.jobs[i]
        for s in job.strings:
            self.busy[s] = True
        proc = self.gate_job(job) if job.kind == "gates" else self.detect_job(job)
        self.eng.spawn(proc)

    def wanted_soon(self, s) -> bool:
        return any(s in self.jobs[i].strings and self.jobs[i].kind == "gates"
                   for i in self.window())

    def gate_job(self, job: Job):
        for s in job.strings:
            yield from self.fetch(s, self.qalu)
        sched = gate_schedule(job.ops, self.params)
        gate_ns = max((o + d for o, d, _ in sched), default=0)
        subject = job.strings
        held = None
        for i, (_, dur) in enumerate(self.stages):
            yield self.stage_res[i].request(self.key(subject))
            now = self.eng.now
            if held is not None:
                self.stage_res[held].release(0)
                self.emit(now, "StageExit", subject, self.qalu, stage=self.labels[held], index=held)
            d = ns(dur)
            if i == self.qip:
                d = max(d, gate_ns)
                for off, gd, op in sched:
                    kind_ev = "Gate2Q" if op.kind is OpKind.GATE_2Q else "Gate1Q"
                    self.emit(now + off, kind_ev, subject, self.qalu, gd,
                              op=op.name, qubits=list(op.qubits))
            self.emit(now, "StageEnter", subject, self.qalu, d,
                      stage=self.labels[i], index=i)
            for s in subject:
                self.pipeline_ns[s] += d
            yield Timeout(d)
            held = i
        self.stage_res[held].release(0)
        self.emit(self.eng.now, "StageExit", subject, self.qalu,
                  stage=self.labels[held], index=held)
        self.finish(job)
        for s in subject:
            if self.wanted_soon(s):
                self.in_qalu[s] = True
                self.busy[s] = False
            else:
                self.eng.spawn(self.write_back(s, self.qalu))
        self.dispatch()

    def detect_job(self, job: Job):
        if self.det_res is None:
            return
        (s,) = job.strings
        subject = (s,)
        zone = yield self.det_res.request(self.key(subject))
        yield from self.fetch(s, zone)
        p = self.params
        if job.kind == "measure":
            ghz = ns(ghz_generation_time(p.n_ghz_ancillas, p.t_2q_s))
            yield Timeout(ghz)
            self.det_res.release(zone)
            self.emit(self.eng.now, "DetectStart", subject, zone, ns(p.detection_time_s),
                      qubits=list(job.ops[0].qubits))
            yield Timeout(ns(p.detection_time_s))
            self.emit(self.eng.now, "DetectEnd", subject, zone, qubits=list(job.ops[0].qubits))
        else:
            yield Timeout(3 * ns(p.t_2q_s))
            self.det_res.release(zone)
            self.emit(self.eng.now, "InitDone", subject, zone, qubits=list(job.ops[0].qubits))
        self.finish(job)
        yield from self.write_back(s, zone)

    def finish(self, job: Job):
        self.done += 1

    # -- driver
    def execute(self):
        self.dispatch()
        self.eng.run()
        if self.done < len(self.jobs):
            left = len(self.jobs) - self.done
            raise DeadlockDetected(f"{left} job(s) can never run (no free route or zone)")
        raw = sorted(self.raw, key=lambda r: (r[0], r[1]))
        events = [Event(t, i, kind, subj, zone, dur, data)
                  for i, (t, _, kind, subj, zone, dur, data) in enumerate(raw)]
        budgets = {name: self.layout.bank_budget(name, self.params.dac_budget)
                   for name in self.banks}
        trace = EventTrace(events, list(self.labels), list(self.det_zones), budgets)
        return trace, self.metrics(trace)

    def metrics(self, trace: EventTrace) -> SimMetrics:
        ev = trace.events
        # the last plan may end on a switch whose settling time has no event of its own
        makespan = max([e.end_ns for e in ev] + [self.eng.now if ev else 0])
        counts = {"Gate1Q": 0, "Gate2Q": 0, "Measure": 0, "Init": 0}
        for e in ev:
            if e.kind in ("Gate1Q", "Gate2Q"):
                counts[e.kind] += 1
            elif e.kind == "DetectEnd":
                counts["Measure"] += 1
            elif e.kind == "InitDone":
                counts["Init"] += 1
        span = makespan / 1e9
        util = {}
        if makespan:
            for r in self.stage_res:
                util[f"qalu:{r.name}"] = r.busy_ns[0] / makespan
            if self.det_res:
                for z in self.det_zones:
                    util[z] = self.det_res.busy_ns[z] / makespan
            for name, r in sorted(self.banks.items()):
                util[f"bank:{name}"] = r.busy_ns[0] / makespan
        phonons = {s: idle_phonons((makespan - self.pipeline_ns[s]) / 1e9,
                                   self.params.memory_heating_rate_quanta_per_s)
                   for s in sorted(self.pipeline_ns)}
        pm = pipeline_metrics(self.pipe)
        peak = machine_throughput(self.params)
        ideal = {"ideal_entangling_per_s": peak["twoq_per_s"],
                 "ideal_single_qubit_per_s": peak["oneq_per_s"],
                 "pipeline_beat_per_s": pm.throughput_per_s}
        return SimMetrics(
            makespan_s=span,
            gate_counts=counts,
            single_qubit_ops_per_s=counts["Gate1Q"] / span if span else 0.0,
            entangling_gates_per_s=counts["Gate2Q"] / span if span else 0.0,
            dac_switch_count=sum(len(e.data.get("assign", ())) for e in ev),
            utilization=util,
            peak_dac_pairs=audit_trace(trace),
            idle_phonons=phonons,
            ideal=ideal)


def run(layout: TrapLayout, circuit: Circuit, params: Optional[MachineParams] = None,
        seed: int = 0) -> tuple[EventTrace, SimMetrics]:
    """Execute ``circuit``; returns the ordered event trace and its metrics."""
    params = params or MachineParams()
    r = _Run(layout, circuit, params, seed)
    trace, metrics = r.execute()
    r.final_memory = r.memory.snapshot()
    run.last = r  # handy for inspection in tests and the CLI
    return trace, metrics


# ---------------------------------------------------------------- output

CSV_FIELDS = ["t", "seq", "kind", "subject", "zone", "dur", "data"]


def _csv_row(e: Event) -> list:
    return [repr(e.t), e.seq, e.kind, " ".join(map(str, e.subject)), e.zone or "",
            repr(e.dur_ns / 1e9) if e.dur_ns else "", json.dumps(e.data) if e.data else ""]


def stage_spans(trace: EventTrace) -> list[tuple[str, int, int, tuple]]:
    """(lane, start, end, subject) for every pipeline stage and detection span."""
    spans = []
    open_: dict = {}
    for e in trace.events:
        if e.kind == "StageEnter":
            open_[(e.data["index"], e.subject)] = e.t_ns
        elif e.kind == "StageExit":
            start = open_.pop((e.data["index"], e.subject))
            spans.append((e.data["stage"], start, e.t_ns, e.subject))
        elif e.kind == "DetectStart":
            spans.append((e.zone, e.t_ns, e.end_ns, e.subject))
    return spans


def svg_timeline(trace: EventTrace, width: int = 1000, lane_h: int = 18) -> str:
    lanes = list(trace.stage_labels) + list(trace.detection_zones)
    spans = stage_spans(trace)
    end = max([s[2] for s in spans] + [e.end_ns for e in trace.events] + [1])
    label_w = 130
    scale = (width - label_w - 10) / end
    height = lane_h * (len(lanes) + 2)
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'font-family="monospace" font-size="11">',
           f'<g id="qalu" data-lanes="{len(trace.stage_labels)}">']
    for i, lane in enumerate(lanes):
        if i == len(trace.stage_labels):
            out.append(f'</g><g id="detection" data-lanes="{len(trace.detection_zones)}">')
        y = lane_h * (i + 1)
        out.append(f'<g class="lane" data-name="{lane}">'
                   f'<text x="4" y="{y + lane_h - 5}">{lane}</text>')
        for name, a, b, subj in spans:
            if name != lane:
                continue
            hue = (min(subj) * 47) % 360 if subj else 0
            out.append(f'<rect x="{label_w + a * scale:.2f}" y="{y + 2}" '
                       f'width="{max((b - a) * scale, 0.5):.2f}" height="{lane_h - 4}" '
                       f'fill="hsl({hue},60%,60%)"><title>{" ".join(map(str, subj))}</title></rect>')
        out.append('</g>')
    out.append('</g></svg>')
    return "\n".join(out) + "\n"


def emit_trace(trace: EventTrace, path, format: str = "jsonl") -> None:
    if format == "jsonl":
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(trace.to_jsonl())
    elif format == "csv":
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(CSV_FIELDS)
            w.writerows(_csv_row(e) for e in trace.events)
    elif format in ("svg", "svg_timeline"):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(svg_timeline(trace))
    else:
        raise ValueError(f"unknown trace format {format!r}")
