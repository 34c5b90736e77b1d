import csv
import json

import pytest
from hypothesis import given, settings, strategies as st

from oracles import blocking_pipeline_departures
from qvn.core import MachineParams, parse_circuit, small_layout
from qvn.errors import CapacityExceeded, DeadlockDetected
from qvn.pipeline import PipelineConfig, Stage, StageKind, pipeline_metrics
from qvn.shuttle import access_memory_cell, plan_transport, store_memory_cell
from qvn.sim import (Event, EventTrace, audit_trace, batch_jobs, emit_trace, idle_phonons, ns,
                     run)

FAST = MachineParams(shuttle_step_s=1e-7, mux_switch_s=1e-8)
KINDS = [StageKind.COMBINE, StageKind.DOPPLER, StageKind.EIT, StageKind.DECODE, StageKind.MAP,
         StageKind.QIP, StageKind.MAP_BACK, StageKind.ENCODE, StageKind.SPLIT]


def stream(n_jobs, n_pairs=12):
    ops = [{"op": "cx", "q": [8 * (k % n_pairs), 8 * (k % n_pairs) + 4]} for k in range(n_jobs)]
    return parse_circuit({"n_qubits": 8 * n_pairs, "ops": ops})


def mixed(seed_ops):
    ops = []
    for kind, a, b in seed_ops:
        if kind == 0:
            ops.append({"op": "cx", "q": [a, b]} if a != b else {"op": "h", "q": [a]})
        elif kind == 1:
            ops.append({"op": "h", "q": [a]})
        elif kind == 2:
            ops.append({"op": "measure", "q": [a]})
        else:
            ops.append({"op": "init", "q": [a]})
    return parse_circuit({"n_qubits": 32, "ops": ops})


op_lists = st.lists(st.tuples(st.integers(0, 3), st.integers(0, 31), st.integers(0, 31)),
                    min_size=1, max_size=12)


def test_empty_circuit(small):
    trace, m = run(small, parse_circuit([]))
    assert len(trace) == 0 and m.makespan_s == 0


def test_one_gate_makespan_from_plans(preset):
    params = MachineParams()
    trace, m = run(preset, parse_circuit([{"op": "cx", "q": [0, 4]}]), params)
    r = run.last
    (z0, c0), (z1, c1) = r.home[0], r.home[1]
    qalu = "qalu"

    def dur(plan):
        return ns(plan.duration_s)

    fetch = [dur(access_memory_cell(preset, z, c, params)) +
             dur(plan_transport(preset, s, preset.transport_distance((z, c), qalu), params))
             for s, (z, c) in ((0, (z0, c0)), (1, (z1, c1)))]
    latency = ns(pipeline_metrics(r.pipe).latency_s)
    back = [dur(plan_transport(preset, s, preset.transport_distance(qalu, (z, c)), params))
            for s, (z, c) in ((0, (z0, c0)), (1, (z1, c1)))]
    store = dur(store_memory_cell(preset, z1, c1, params, 1))
    # fetches and write-back transports share one transport bank, so they run back to back
    expect = sum(fetch) + latency + sum(back) + store
    assert ns(m.makespan_s) == expect
    assert m.gate_counts["Gate2Q"] == 1
    g = [e for e in trace if e.kind == "Gate2Q"]
    assert len(g) == 1 and g[0].dur_ns == 20_000
    kinds = [e.kind for e in trace]
    assert kinds.count("StageEnter") == len(r.labels)
    accesses = {e.subject for e in trace if e.zone == "memory_a" and e.data.get("assign")}
    assert accesses == {(0,), (1,)}


def test_trace_order_and_uniqueness(small):
    trace, _ = run(small, stream(30), FAST)
    keys = [(e.t_ns, e.seq) for e in trace]
    assert keys == sorted(keys)
    assert [e.seq for e in trace] == list(range(len(trace)))


@settings(max_examples=25)
@given(op_lists, st.integers(0, 3))
def test_determinism(ops, seed):
    layout = small_layout(grid=(4, 4))
    c = mixed(ops)
    a, _ = run(layout, c, FAST, seed=seed)
    b, _ = run(layout, c, FAST, seed=seed)
    assert a.to_jsonl() == b.to_jsonl()


@settings(max_examples=25)
@given(op_lists)
def test_conservation_causality_and_budget(ops):
    layout = small_layout(grid=(4, 4))
    trace, m = run(layout, mixed(ops), FAST)
    r = run.last
    start = {k: sorted(v[0]) for k, v in r.initial_memory.items()}
    end = {k: sorted(v[0]) for k, v in r.final_memory.items()}
    assert start == end
    assert all(v[1] == "static" for v in r.final_memory.values())
    # per string: events in time order, and no two concurrent spans in different zones
    spans = {}
    for e in trace:
        if len(e.subject) == 1:
            spans.setdefault(e.subject[0], []).append(e)
    for evs in spans.values():
        ts = [e.t_ns for e in evs]
        assert ts == sorted(ts)
        timed = [e for e in evs if e.dur_ns]
        for a, b in zip(timed, timed[1:]):
            assert a.end_ns <= b.t_ns or a.zone == b.zone
    for bank, peak in audit_trace(trace).items():
        assert peak <= trace.budgets[bank]
    assert 0 <= min(m.utilization.values(), default=0) and max(m.utilization.values(), default=0) <= 1


def test_twoq_preceded_by_fetch_and_followed_by_writeback(small):
    trace, _ = run(small, stream(6, 3), FAST)
    for g in [e for e in trace if e.kind == "Gate2Q"]:
        for s in g.subject:
            mine = [e for e in trace if e.subject == (s,)]
            assert any(e.data.get("bank") == "transport" and e.t_ns <= g.t_ns for e in mine)
            later_gate = any(x.kind == "Gate2Q" and s in x.subject and x.t_ns > g.t_ns
                             for x in trace)
            stored = any(e.zone.startswith("memory") and e.t_ns > g.t_ns for e in mine)
            assert later_gate or stored
    for s in range(6):
        last = [e for e in trace if e.subject == (s,)][-1]
        assert last.zone.startswith("memory")


def test_measure_routes_through_detection(small):
    c = parse_circuit([{"op": "h", "q": [0]}, {"op": "measure", "q": [0]}, {"op": "init", "q": [4]}])
    trace, m = run(small, c, FAST)
    starts = [e for e in trace if e.kind == "DetectStart"]
    assert len(starts) == 1 and starts[0].zone.startswith("detection")
    assert m.gate_counts["Measure"] == 1 and m.gate_counts["Init"] == 1
    ghz = 180_000
    fetched = max(e.t_ns for e in trace if e.subject == (0,) and e.kind in ("ShuttleStep", "MuxSwitch")
                  and e.t_ns <= starts[0].t_ns)
    assert starts[0].t_ns - fetched >= ghz


def test_no_detection_zone_deadlocks():
    layout = small_layout(grid=(4, 4), n_detection=0)
    with pytest.raises(DeadlockDetected):
        run(layout, parse_circuit([{"op": "measure", "q": [0]}]), FAST)


def test_capacity_exceeded():
    layout = small_layout(grid=(1, 1))
    with pytest.raises(CapacityExceeded):
        run(layout, parse_circuit({"n_qubits": 64, "ops": [{"op": "cx", "q": [0, 60]}]}), FAST)


def test_batching():
    c = parse_circuit([{"op": "cx", "q": [0, 4]}, {"op": "h", "q": [1]}, {"op": "cx", "q": [8, 12]},
                       {"op": "measure", "q": [0]}])
    kinds = [j.kind for j in batch_jobs(c)]
    assert kinds == ["gates", "gates", "measure"]


def config(depth, beat):
    pool = [StageKind.COMBINE, StageKind.DOPPLER, StageKind.EIT, StageKind.QIP,
            StageKind.ENCODE, StageKind.SPLIT]
    kinds = KINDS if depth == 9 else [k for k in pool if k is StageKind.QIP or pool.index(k) < depth][:depth]
    return PipelineConfig(tuple(Stage(k, beat) for k in kinds))


CONFIGS = [(9, 20e-6), (4, 50e-6), (6, 30e-6), (3, 100e-6), (9, 10e-6)]


@pytest.mark.parametrize("depth, beat", CONFIGS)
def test_steady_state_matches_blocking_oracle(depth, beat, small):
    cfg = config(depth, beat)
    assert cfg.depth == depth
    params = FAST.with_(t_2q_s=min(beat, 20e-6), pipeline=cfg)
    n = 200
    trace, _ = run(small, stream(n), params)
    labels = cfg.labels()
    enter0 = [e.t_ns for e in trace if e.kind == "StageEnter" and e.data["index"] == 0]
    exits = [e.t_ns for e in trace if e.kind == "StageExit" and e.data["index"] == depth - 1]
    oracle = blocking_pipeline_departures([ns(beat)] * depth, n, enter0)
    assert exits == oracle
    k0 = n // 4
    assert abs((exits[-1] - exits[k0]) - (n - 1 - k0) * ns(beat)) <= ns(beat)
    assert labels[-1] == trace.stage_labels[-1]


def test_idle_phonons():
    assert idle_phonons(86400, 10) == 864000
    assert idle_phonons(0, 10) == 0
    assert idle_phonons(3600, 0.33) == pytest.approx(1188)
    with pytest.raises(ValueError):
        idle_phonons(-1, 1)


def test_emit_trace_formats(tmp_path, small):
    tiny = EventTrace([Event(0, 0, "MuxSwitch", (1,), "m"), Event(5, 1, "ShuttleStep", (1,), "m"),
                       Event(9, 2, "Gate1Q", (1,), "qalu", 10)])
    emit_trace(tiny, tmp_path / "t.jsonl")
    lines = (tmp_path / "t.jsonl").read_text().splitlines()
    assert len(lines) == 3
    assert {"t", "seq", "kind", "subject", "zone"} <= set(json.loads(lines[0]))
    trace, _ = run(small, stream(5, 3), FAST)
    emit_trace(trace, tmp_path / "t.csv", "csv")
    with open(tmp_path / "t.csv") as fh:
        rows = list(csv.reader(fh))
    assert len(rows) - 1 == len(trace)
    emit_trace(trace, tmp_path / "t.svg", "svg_timeline")
    svg = (tmp_path / "t.svg").read_text()
    qalu = svg.split('<g id="qalu"')[1].split('<g id="detection"')[0]
    assert qalu.count('class="lane"') == len(trace.stage_labels)
    with pytest.raises(ValueError):
        emit_trace(trace, tmp_path / "t.x", "xml")


def test_metrics_shape(small):
    _, m = run(small, stream(20, 4), FAST)
    d = m.to_dict()
    assert d["gate_counts"]["Gate2Q"] == 20
    assert d["rates"]["entangling_gates_per_s"] == pytest.approx(20 / m.makespan_s)
    assert d["rates"]["ideal_entangling_per_s"] == 50000.0
    assert d["dac_switch_count"] > 0
    assert set(d["peak_dac_pairs"]) >= {"transport"}
