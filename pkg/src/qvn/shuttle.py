"""Ion-string transport planning under multiplexed DAC control.

A confining well sits on one segment pair and needs its two neighbours
under DAC control as well. Moving one index costs one extra pair: the
leading neighbour is switched onto a free DAC pair, the well advances and
the trailing pair is handed back (to the static set in memory regions).
That keeps at most four DAC pairs busy for an arbitrarily long track, and
the same four DAC pairs can drive several wells through a demultiplexer.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .core import IonString, MachineParams, TrapLayout, Track, ZoneKind
from .errors import (CellEmpty, CellNotOnStaticSet, InvalidArm, MismatchedDisplacement,
                     Obstructed, OutOfRange, ShuttleError, SpacingViolation)

DEFAULT_BUDGET = 4


@dataclass(frozen=True)
class PlanStep:
    t_ns: int
    assign: tuple[tuple[int, int], ...]  # (dac pair, segment pair)
    release: tuple[int, ...]
    wells: dict

    @property
    def t(self) -> float:
        return self.t_ns / 1e9

    def to_dict(self) -> dict:
        return {"t": self.t,
                "assign": [list(a) for a in self.assign],
                "release": list(self.release),
                "wells": {str(k): v for k, v in self.wells.items()}}


@dataclass
class MovePlan:
    steps: list[PlanStep]
    duration_s: float
    bank: str
    budget: int
    kind: str = "linear"
    shared_waveform: bool = False
    flips: dict = field(default_factory=dict)
    final_locations: dict = field(default_factory=dict)
    n_moves: int = 0
    touched_cells: tuple = ()

    @property
    def dac_pairs_used(self) -> set[int]:
        return {dac for s in self.steps for dac, _ in s.assign}

    @property
    def n_switches(self) -> int:
        return sum(len(s.assign) for s in self.steps)

    def peak_active(self) -> int:
        """Largest number of DAC pairs driving at least one segment."""
        active: dict[int, int] = {}
        peak = 0
        for s in self.steps:
            for dac, seg in s.assign:
                active[seg] = dac
            peak = max(peak, len(set(active.values())))
            for seg in s.release:
                active.pop(seg, None)
        return peak

    def apply_to(self, string: IonString) -> IonString:
        flips = self.flips.get(string.id, 0)
        orientation = string.orientation
        if flips % 2:
            orientation = orientation.flipped()
        location = self.final_locations.get(string.id, string.location)
        return IonString(string.id, string.ions, location, orientation)

    def to_jsonl(self) -> str:
        return "".join(json.dumps(s.to_dict()) + "\n" for s in self.steps)

    def write_jsonl(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_jsonl())


def empty_plan(bank: str, budget: int, kind: str = "linear") -> MovePlan:
    return MovePlan([], 0.0, bank, budget, kind)


class _Builder:
    """Accumulates plan steps while tracking which DAC drives which pair."""

    def __init__(self, bank: str, budget: int, params: MachineParams):
        self.bank = bank
        self.budget = budget
        self.params = params
        self.active: dict[int, int] = {}
        self.t_ns = 0
        self.steps: list[PlanStep] = []
        self.n_moves = 0

    def _free_dac(self) -> int:
        used = set(self.active.values())
        for dac in range(self.budget):
            if dac not in used:
                return dac
        raise ShuttleError(f"bank {self.bank}: DAC budget {self.budget} exhausted")

    def _acquire(self, groups: Sequence[Sequence[int]]) -> list[tuple[int, int]]:
        """Give every group of segments (one segment per well) a shared DAC."""
        out = []
        for segs in groups:
            if all(s in self.active for s in segs):
                continue
            dac = self._free_dac()
            for s in segs:
                if s in self.active:
                    raise ShuttleError(f"segment pair {s} already driven by DAC {self.active[s]}")
                self.active[s] = dac
                out.append((dac, s))
        return out

    def _emit(self, assign, release, wells, dt):
        for s in release:
            self.active.pop(s, None)
        self.steps.append(PlanStep(self.t_ns, tuple(assign), tuple(release), dict(wells)))
        self.t_ns += round(dt * 1e9)

    def hold(self, groups, wells, dt=0.0):
        assign = self._acquire(groups)
        if assign:
            self._emit(assign, (), wells, dt)

    def release(self, segs, wells, dt=0.0):
        segs = [s for s in segs if s in self.active]
        if segs:
            self._emit((), segs, wells, dt)

    def walk(self, paths, starts, delta, sids, lookahead=1, extra_release=()):
        """Advance wells ``sids`` (one per path) by ``delta`` indices in lockstep."""
        n = abs(delta)
        if n == 0:
            return list(starts)
        d = 1 if delta > 0 else -1
        pos = list(starts)
        self.hold([[p[x + rel] for p, x in zip(paths, pos)] for rel in (-1, 0, 1)],
                  dict(zip(sids, pos)))
        step_dt = self.params.mux_switch_s + self.params.shuttle_step_s
        for k in range(n):
            leads = [[p[x + d * (1 + l)] for p, x in zip(paths, pos)]
                     for l in range(1, lookahead + 1)]
            assign = self._acquire(leads)
            trailing = [p[x - d] for p, x in zip(paths, pos)]
            pos = [x + d for x in pos]
            release = trailing + (list(extra_release) if k == n - 1 else [])
            self._emit(assign, release, dict(zip(sids, pos)), step_dt)
            self.n_moves += 1
        return pos

    def plan(self, kind, **kw) -> MovePlan:
        return MovePlan(self.steps, self.t_ns / 1e9, self.bank, self.budget, kind,
                        n_moves=self.n_moves, **kw)


def _track(layout: TrapLayout, track) -> Track:
    return track if isinstance(track, Track) else layout.track(int(track))


def _lookahead(params: MachineParams, budget: int) -> int:
    la = params.handoff_lookahead
    if 3 + la > budget:
        raise ShuttleError(f"look-ahead {la} needs {3 + la} DAC pairs, budget is {budget}")
    return la


def _check_index(track: Track, index: int):
    if not 1 <= index <= track.n_pairs - 2:
        raise OutOfRange(f"index {index} not in [1, {track.n_pairs - 2}] on track {track.id}")


def _check_path(track: Track, sid, start, end, lookahead, occupancy):
    if end >= start:
        swept = range(start - 1, min(end + lookahead, track.n_pairs - 1) + 1)
    else:
        swept = range(max(end - lookahead, 0), start + 2)
    if not occupancy:
        return
    others = sorted(((idx, other) for idx, other in occupancy.get(track.id, {}).items()
                     if other != sid), key=lambda x: x[0] if end >= start else -x[0])
    for idx, _ in others:
        if any(idx - 1 <= s <= idx + 1 for s in swept):
            raise Obstructed(track.id, idx)


def plan_linear_move(layout: TrapLayout, string_id, track, from_index: int, to_index: int,
                     params: MachineParams, occupancy: Optional[dict] = None) -> MovePlan:
    """Move one well along a track, one segment pair per step.

    ``occupancy`` maps track id -> {well index: string id} for strings
    already parked on the layout.
    """
    tr = _track(layout, track)
    budget = layout.bank_budget(tr.bank, params.dac_budget)
    if from_index == to_index:
        _check_index(tr, from_index)
        return empty_plan(tr.bank, budget)
    la = _lookahead(params, budget)
    _check_index(tr, from_index)
    _check_index(tr, to_index)
    _check_path(tr, string_id, from_index, to_index, la, occupancy)
    path = [sp.id for sp in tr.segment_pairs]
    # the trailing look-ahead pair may fall off the end of the track
    path = path + [None] * la
    b = _Builder(tr.bank, budget, params)
    _walk_padded(b, [path], [from_index], to_index - from_index, [string_id], la)
    return b.plan("linear", final_locations={string_id: (tr.id, to_index)})


def _walk_padded(b: _Builder, paths, starts, delta, sids, la):
    """walk() variant that tolerates look-ahead pairs beyond a track end."""
    if delta < 0:
        paths = [[None] * la + list(p) for p in paths]
        starts = [s + la for s in starts]
    # None markers stand for missing pairs; give each a unique negative id
    # so bookkeeping works, then strip them from the emitted steps.
    counter = iter(range(-1, -10 ** 9, -1))
    real = [[s if s is not None else next(counter) for s in p] for p in paths]
    n_before = len(b.steps)
    b.walk(real, starts, delta, sids, la)
    for i in range(n_before, len(b.steps)):
        s = b.steps[i]
        offset = la if delta < 0 else 0
        b.steps[i] = PlanStep(s.t_ns,
                              tuple(a for a in s.assign if a[1] >= 0),
                              tuple(r for r in s.release if r >= 0),
                              {k: v - offset for k, v in s.wells.items()})
    for seg in [s for s in b.active if s < 0]:
        b.active.pop(seg)


def plan_multi_string_move(layout: TrapLayout, string_ids, positions, displacement,
                           params: MachineParams) -> MovePlan:
    """Move several wells in lockstep with one shared set of DAC pairs.

    ``positions`` is a list of (track id, index), one per string, and
    ``displacement`` either one integer or a per-string list that must be
    uniform. All tracks must hang off the same demultiplexed DAC bank.
    """
    string_ids = list(string_ids)
    positions = [(int(t), int(i)) for t, i in positions]
    if len(positions) != len(string_ids) or not string_ids:
        raise ShuttleError("need one position per string")
    if isinstance(displacement, (list, tuple)):
        if len(set(displacement)) > 1:
            raise MismatchedDisplacement(f"displacements differ: {list(displacement)}")
        displacement = displacement[0]
    tracks = [layout.track(t) for t, _ in positions]
    banks = {t.bank for t in tracks}
    if len(banks) != 1:
        raise ShuttleError(f"strings span several DAC banks: {sorted(banks)}")
    bank = banks.pop()
    budget = layout.bank_budget(bank, params.dac_budget)
    la = _lookahead(params, budget)

    by_track: dict[int, list[int]] = {}
    for (t, i) in positions:
        by_track.setdefault(t, []).append(i)
    gaps = set()
    for idxs in by_track.values():
        idxs = sorted(idxs)
        gaps.update(b - a for a, b in zip(idxs, idxs[1:]))
    if len(gaps) > 1:
        raise SpacingViolation(f"unequal inter-string spacing {sorted(gaps)}")
    if gaps and min(gaps) < 3 + la:
        raise SpacingViolation(f"spacing {min(gaps)} < {3 + la} pairs needed per moving well")

    for tr, (_, i) in zip(tracks, positions):
        _check_index(tr, i)
        _check_index(tr, i + displacement)
    if displacement == 0:
        return MovePlan([], 0.0, bank, budget, "multi", shared_waveform=True)
    paths = [[sp.id for sp in tr.segment_pairs] + [None] * la for tr in tracks]
    b = _Builder(bank, budget, params)
    _walk_padded(b, paths, [i for _, i in positions], displacement, string_ids, la)
    finals = {sid: (t, i + displacement) for sid, (t, i) in zip(string_ids, positions)}
    return b.plan("multi", shared_waveform=True, final_locations=finals)


class MemoryState:
    """Occupancy and control source of every memory cell."""

    def __init__(self, layout: TrapLayout, residents: dict):
        self.layout = layout
        self.residents = {k: list(v) for k, v in residents.items()}
        self.control = {k: "static" for k in self.residents}

    @classmethod
    def full(cls, layout: TrapLayout, ions_per_string: int = 8) -> "MemoryState":
        residents = {}
        sid = 0
        for zone_id, cell in layout.memory_cells():
            per_cell = max(1, layout.zone(zone_id).cell_capacity // ions_per_string)
            residents[(zone_id, cell)] = list(range(sid, sid + per_cell))
            sid += per_cell
        return cls(layout, residents)

    @classmethod
    def empty(cls, layout: TrapLayout) -> "MemoryState":
        return cls(layout, {k: [] for k in layout.memory_cells()})

    def snapshot(self) -> dict:
        return {k: (tuple(v), self.control[k]) for k, v in self.residents.items()}

    def apply(self, plan: MovePlan) -> None:
        for key, sid in plan.touched_cells:
            if plan.kind == "store":
                if sid not in self.residents[key]:
                    self.residents[key].append(sid)
            elif sid in self.residents[key]:
                self.residents[key].remove(sid)
            self.control[key] = "static"

    def locate(self, string_id):
        for key, sids in self.residents.items():
            if string_id in sids:
                return key
        return None


def _access_track(layout: TrapLayout, zone_id: str) -> Track:
    tracks = [t for t in layout.tracks if t.zone_id == zone_id]
    if not tracks:
        raise ShuttleError(f"memory zone {zone_id} has no transport track")
    beam = [t for t in tracks if t.cooling_beam_axis]
    return (beam or tracks)[0]


def access_memory_cell(layout: TrapLayout, zone: str, cell, params: MachineParams,
                       state: Optional[MemoryState] = None, string_id=None) -> MovePlan:
    """Switch a cell from the static voltage set onto independent DACs and pull
    one resident string out onto the adjacent transport track."""
    z = layout.zone(zone)
    if z.kind is not ZoneKind.MEMORY:
        raise ShuttleError(f"zone {zone} is not a memory zone")
    cell = tuple(cell)
    layout.cell_index(zone, cell)
    key = (zone, cell)
    if state is not None:
        if state.control.get(key) != "static":
            raise CellNotOnStaticSet(f"cell {cell} in {zone} is already DAC-controlled")
        residents = state.residents.get(key, [])
        if not residents:
            raise CellEmpty(f"cell {cell} in {zone} is empty")
        if string_id is None:
            string_id = residents[-1]
        elif string_id not in residents:
            raise CellEmpty(f"string {string_id} not stored in cell {cell}")
    elif string_id is None:
        string_id = 0
    track = _access_track(layout, zone)
    bank = z.bank or track.bank
    budget = layout.bank_budget(bank, params.dac_budget)
    la = _lookahead(params, budget)
    n_ext = params.extraction_steps
    path = list(layout.cell_pair_ids(zone, cell)) + [sp.id for sp in track.segment_pairs]
    path += [None] * (n_ext + la + 2 - len(path)) if len(path) < n_ext + la + 2 else []
    b = _Builder(bank, budget, params)
    b.hold([[path[0]], [path[1]], [path[2]]], {string_id: 1}, dt=params.mux_switch_s)
    _walk_padded(b, [path], [1], n_ext, [string_id], la)
    end = 1 + n_ext
    return b.plan("access", touched_cells=((key, string_id),),
                  final_locations={string_id: (track.id, end - 3)})


def store_memory_cell(layout: TrapLayout, zone: str, cell, params: MachineParams,
                      string_id, state: Optional[MemoryState] = None) -> MovePlan:
    """Reverse of an access: walk a string from the transport track into its
    cell and hand the cell back to the static voltage set."""
    z = layout.zone(zone)
    if z.kind is not ZoneKind.MEMORY:
        raise ShuttleError(f"zone {zone} is not a memory zone")
    cell = tuple(cell)
    layout.cell_index(zone, cell)
    key = (zone, cell)
    if state is not None:
        if len(state.residents.get(key, [])) >= max(1, z.cell_capacity // 8):
            raise ShuttleError(f"cell {cell} in {zone} is full")
    track = _access_track(layout, zone)
    bank = z.bank or track.bank
    budget = layout.bank_budget(bank, params.dac_budget)
    la = _lookahead(params, budget)
    n_ext = params.extraction_steps
    path = list(layout.cell_pair_ids(zone, cell)) + [sp.id for sp in track.segment_pairs]
    path += [None] * (n_ext + la + 2 - len(path)) if len(path) < n_ext + la + 2 else []
    b = _Builder(bank, budget, params)
    _walk_padded(b, [path], [1 + n_ext], -n_ext, [string_id], la)
    # the cell pairs go back to the static set in one multiplexer switch
    b._emit((), sorted(b.active), {string_id: 1}, params.mux_switch_s)
    return b.plan("store", touched_cells=((key, string_id),),
                  final_locations={string_id: key})


def plan_transport(layout: TrapLayout, string_id, n_steps: int, params: MachineParams,
                   bank: str = "transport") -> MovePlan:
    """Linear move of ``n_steps`` along the routed transport path.

    The route is not resolved pair by pair; it gets its own block of pair
    ids past every layout pair so the DAC bookkeeping stays exact. The held
    pairs are released at the end.
    """
    if n_steps < 1:
        raise OutOfRange("transport needs at least one step")
    budget = layout.bank_budget(bank, params.dac_budget)
    la = _lookahead(params, budget)
    base = layout.pair_id_end
    path = list(range(base, base + n_steps + 2 + la))
    b = _Builder(bank, budget, params)
    b.walk([path], [1], n_steps, [string_id], la)
    b.release(sorted(b.active), {string_id: 1 + n_steps})
    return b.plan("transport")


def _arm_pairs(track: Track, n: int) -> list[int]:
    return [track.pair_id(i) for i in range(n)]


def traverse_junction(layout: TrapLayout, string_id, junction, in_arm: int, out_arm: int,
                      params: MachineParams, _builder: Optional[_Builder] = None) -> MovePlan:
    """Carry a well from index 1 of ``in_arm`` through the junction to index 1
    of ``out_arm``. Arm tracks are indexed outward from the junction.
    Every other arm has its junction-side pair driven as a barrier."""
    j = layout.junction(junction) if isinstance(junction, int) else junction
    if in_arm == out_arm or in_arm not in j.arm_track_ids or out_arm not in j.arm_track_ids:
        raise InvalidArm(f"arms {in_arm}->{out_arm} invalid for junction {j.id} {j.arm_track_ids}")
    budget = params.dac_budget + j.extra_pair_budget
    la = _lookahead(params, budget)
    blocked = [a for a in j.arm_track_ids if a not in (in_arm, out_arm)]
    if len(blocked) > j.extra_pair_budget:
        raise ShuttleError(f"junction {j.id}: {len(blocked)} barrier pairs exceed "
                           f"extra budget {j.extra_pair_budget}")
    tin, tout = layout.track(in_arm), layout.track(out_arm)
    path = (list(reversed(_arm_pairs(tin, 3))) + [j.center_pair_id]
            + [tout.pair_id(i) for i in range(min(tout.n_pairs, 3 + la))])
    barrier = [layout.track(a).pair_id(0) for a in blocked]
    b = _builder or _Builder(j.bank, budget, params)
    b.hold([[p] for p in barrier], {string_id: 1})
    _walk_padded(b, [path + [None] * la], [1], 4, [string_id], la)
    b.release(barrier, {string_id: 5})
    if _builder is not None:
        return None
    return b.plan("junction", final_locations={string_id: (out_arm, 1)})


def rotate_string(layout: TrapLayout, string, y_junction, params: MachineParams) -> MovePlan:
    """Reverse a string's order along the axis with the three-leg Y-junction loop
    arm1 -> arm2 -> arm3 -> arm1."""
    j = layout.junction(y_junction) if isinstance(y_junction, int) else y_junction
    if j.kind != "Y":
        raise InvalidArm(f"junction {j.id} is not a Y junction")
    if isinstance(string, IonString):
        sid, loc = string.id, string.location
        arm1 = loc[0]
        if arm1 not in j.arm_track_ids or loc[1] != 1:
            raise InvalidArm(f"string {sid} must be parked at index 1 of a junction arm")
    else:
        sid, arm1 = string, j.arm_track_ids[0]
    arms = list(j.arm_track_ids)
    k = arms.index(arm1)
    arm2, arm3 = arms[(k + 1) % 3], arms[(k + 2) % 3]
    budget = params.dac_budget + j.extra_pair_budget
    b = _Builder(j.bank, budget, params)
    for a, c in ((arm1, arm2), (arm2, arm3), (arm3, arm1)):
        traverse_junction(layout, sid, j, a, c, params, _builder=b)
    return b.plan("rotation", flips={sid: 1}, final_locations={sid: (arm1, 1)})


def audit_plan(plan: MovePlan) -> list[str]:
    """Replay a plan and report budget, exclusivity and continuity violations."""
    problems = []
    active: dict[int, int] = {}
    for k, s in enumerate(plan.steps):
        for dac, seg in s.assign:
            if seg in active and active[seg] != dac:
                problems.append(f"step {k}: pair {seg} driven by two DACs")
            active[seg] = dac
        if len(set(active.values())) > plan.budget:
            problems.append(f"step {k}: {len(set(active.values()))} DAC pairs > {plan.budget}")
        for seg in s.release:
            if seg not in active:
                problems.append(f"step {k}: release of undriven pair {seg}")
            active.pop(seg, None)
    return problems
