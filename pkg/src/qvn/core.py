"""Domain types, the trap-layout graph, layout loading/validation and the
Quantum 4004 preset."""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field, replace
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Optional

import networkx as nx

from .errors import ParseError, ValidationError

DEFAULT_UNIT_LENGTH_M = 8.0e-5
PRESET_NAME = "quantum4004"
QUBITS_PER_STRING = 4
IONS_PER_QUBIT = 2  # DFS encoding


class ZoneKind(str, Enum):
    MEMORY = "Memory"
    QALU = "QALU"
    DETECTION = "Detection"
    STORAGE = "Storage"
    CONNECTING = "ConnectingTrack"


class ControlKind(str, Enum):
    STATIC_SET = "StaticSet"
    MUX_BANK = "MuxBank"
    DEDICATED = "Dedicated"


class IonRole(str, Enum):
    QUBIT = "Qubit"
    COOLING = "Cooling"
    DETECTION = "Detection"


class Orientation(str, Enum):
    FORWARD = "Forward"
    REVERSED = "Reversed"

    def flipped(self) -> "Orientation":
        return Orientation.REVERSED if self is Orientation.FORWARD else Orientation.FORWARD


@dataclass(frozen=True)
class Control:
    kind: ControlKind
    ref: str


@dataclass(frozen=True)
class SegmentPair:
    id: int
    track_id: int
    index_on_track: int
    control: Control


@dataclass(frozen=True)
class Zone:
    id: str
    kind: ZoneKind
    size_ul: Optional[tuple[int, int]]
    segments: int
    dacs: int
    grid: Optional[tuple[int, int]] = None
    cell_capacity: Optional[int] = None
    origin_ul: tuple[float, float] = (0.0, 0.0)
    bank: Optional[str] = None

    @property
    def n_cells(self) -> int:
        if self.grid is None:
            return 0
        return self.grid[0] * self.grid[1]

    @property
    def capacity(self) -> int:
        return self.n_cells * (self.cell_capacity or 0)

    def cells(self):
        if self.grid is None:
            return []
        cols, rows = self.grid
        return [(c, r) for r in range(rows) for c in range(cols)]

    def cell_center_ul(self, cell) -> tuple[float, float]:
        cols, rows = self.grid
        w, h = self.size_ul or (cols, rows)
        return (self.origin_ul[0] + (cell[0] + 0.5) * w / cols,
                self.origin_ul[1] + (cell[1] + 0.5) * h / rows)

    def center_ul(self) -> tuple[float, float]:
        w, h = self.size_ul or (0, 0)
        return (self.origin_ul[0] + w / 2, self.origin_ul[1] + h / 2)


@dataclass(frozen=True)
class Track:
    id: int
    zone_id: str
    segment_pairs: tuple[SegmentPair, ...]
    storage_allowed: bool = False
    cooling_beam_axis: bool = False
    bank: str = "transport"
    connects: tuple[int, ...] = ()

    @property
    def n_pairs(self) -> int:
        return len(self.segment_pairs)

    def pair_id(self, index: int) -> int:
        return self.segment_pairs[index].id


@dataclass(frozen=True)
class Junction:
    id: int
    kind: str
    arm_track_ids: tuple[int, ...]
    extra_pair_budget: int = 2
    center_pair_id: int = -1

    @property
    def bank(self) -> str:
        return f"junction:{self.id}"


@dataclass(frozen=True)
class DacBank:
    id: str
    n_pairs: int = 4


@dataclass(frozen=True)
class StaticVoltageSet:
    id: str
    n_pairs: int = 3


@dataclass
class TrapLayout:
    zones: list[Zone]
    tracks: list[Track]
    junctions: list[Junction]
    unit_length_m: float = DEFAULT_UNIT_LENGTH_M
    dac_banks: list[DacBank] = field(default_factory=list)
    static_voltage_sets: list[StaticVoltageSet] = field(default_factory=list)
    size_ul: Optional[tuple[int, int]] = None
    name: str = ""

    def __post_init__(self):
        self._zones = {z.id: z for z in self.zones}
        self._tracks = {t.id: t for t in self.tracks}
        self._junctions = {j.id: j for j in self.junctions}
        self._banks = {b.id: b for b in self.dac_banks}
        # memory cells own three pairs each, numbered after tracks and junctions
        base = 1 + max([sp.id for t in self.tracks for sp in t.segment_pairs]
                       + [j.center_pair_id for j in self.junctions] + [-1])
        self._cell_base = {}
        for z in self.memory_zones:
            self._cell_base[z.id] = base
            base += 3 * z.n_cells
        self._pair_id_end = base

    def zone(self, zone_id: str) -> Zone:
        try:
            return self._zones[zone_id]
        except KeyError:
            raise KeyError(f"no zone {zone_id!r}") from None

    def track(self, track_id: int) -> Track:
        return self._tracks[track_id]

    def junction(self, junction_id: int) -> Junction:
        return self._junctions[junction_id]

    @property
    def pair_id_end(self) -> int:
        """One past the largest segment-pair id in use."""
        return self._pair_id_end

    def bank_budget(self, bank_id: str, default: int = 4) -> int:
        bank = self._banks.get(bank_id)
        return bank.n_pairs if bank else default

    def zones_of(self, kind: ZoneKind) -> list[Zone]:
        return [z for z in self.zones if z.kind is kind]

    @property
    def memory_zones(self) -> list[Zone]:
        return self.zones_of(ZoneKind.MEMORY)

    def memory_cells(self) -> list[tuple[str, tuple[int, int]]]:
        """All (zone_id, (col, row)) cells in deterministic order."""
        return [(z.id, c) for z in self.memory_zones for c in z.cells()]

    def cell_index(self, zone_id: str, cell) -> int:
        z = self.zone(zone_id)
        cols, rows = z.grid
        c, r = cell
        if not (0 <= c < cols and 0 <= r < rows):
            raise KeyError(f"cell {cell} outside {zone_id} grid {z.grid}")
        return r * cols + c

    def cell_pair_ids(self, zone_id: str, cell) -> tuple[int, int, int]:
        base = self._cell_base[zone_id] + 3 * self.cell_index(zone_id, cell)
        return (base, base + 1, base + 2)

    @property
    def total_segments(self) -> int:
        return sum(z.segments for z in self.zones)

    @property
    def total_dacs(self) -> int:
        return sum(z.dacs for z in self.zones)

    @property
    def total_cells(self) -> int:
        return sum(z.n_cells for z in self.memory_zones)

    @property
    def capacity_qubit_ions(self) -> int:
        return sum(z.capacity for z in self.memory_zones)

    def graph(self) -> nx.Graph:
        g = nx.Graph()
        for z in self.zones:
            g.add_node(("zone", z.id))
        for t in self.tracks:
            g.add_edge(("track", t.id), ("zone", t.zone_id))
            for other in t.connects:
                g.add_edge(("track", t.id), ("track", other))
        for j in self.junctions:
            for arm in j.arm_track_ids:
                g.add_edge(("junction", j.id), ("track", arm))
        return g

    def transport_distance(self, src, dst) -> int:
        """Segment steps between two locations.

        A location is either a zone id or a (zone_id, cell) tuple. The
        estimate is the Manhattan distance between centres in unit lengths,
        one segment pair per unit length.
        """
        def centre(loc):
            if isinstance(loc, tuple):
                return self.zone(loc[0]).cell_center_ul(loc[1])
            return self.zone(loc).center_ul()

        (x0, y0), (x1, y1) = centre(src), centre(dst)
        return max(1, int(round(abs(x1 - x0) + abs(y1 - y0))))

    def to_dict(self) -> dict:
        def zone_dict(z: Zone):
            d = {"id": z.id, "kind": z.kind.value,
                 "size_ul": list(z.size_ul) if z.size_ul else None,
                 "segments": z.segments, "dacs": z.dacs}
            if z.grid is not None:
                d["grid"] = list(z.grid)
                d["cell_capacity"] = z.cell_capacity
            if z.origin_ul != (0.0, 0.0):
                d["origin_ul"] = list(z.origin_ul)
            if z.bank:
                d["bank"] = z.bank
            return d

        out = {
            "name": self.name,
            "unit_length_m": self.unit_length_m,
            "zones": [zone_dict(z) for z in self.zones],
            "tracks": [{"id": t.id, "zone": t.zone_id, "pairs": t.n_pairs,
                        "storage_allowed": t.storage_allowed,
                        "cooling_beam_axis": t.cooling_beam_axis,
                        "bank": t.bank, "connects": list(t.connects)}
                       for t in self.tracks],
            "junctions": [{"id": j.id, "kind": j.kind, "arms": list(j.arm_track_ids),
                           "extra_pair_budget": j.extra_pair_budget}
                          for j in self.junctions],
            "dac_banks": [{"id": b.id, "pairs": b.n_pairs} for b in self.dac_banks],
            "static_voltage_sets": [{"id": s.id, "pairs": s.n_pairs}
                                    for s in self.static_voltage_sets],
        }
        if self.size_ul:
            out["size_ul"] = list(self.size_ul)
        return out


@dataclass(frozen=True)
class Ion:
    species_id: str
    role: IonRole


@dataclass(frozen=True)
class IonString:
    id: int
    ions: tuple[Ion, ...]
    location: tuple
    orientation: Orientation = Orientation.FORWARD

    def axis_order(self) -> tuple[Ion, ...]:
        """Ions in the order they appear along the track axis."""
        if self.orientation is Orientation.REVERSED:
            return tuple(reversed(self.ions))
        return self.ions

    @property
    def n_qubit_ions(self) -> int:
        return sum(1 for ion in self.ions if ion.role is IonRole.QUBIT)


def dfs_string(string_id: int, location, qubit_species="87Sr+", cooling_species="40Ca+",
               n_cooling: int = 2) -> IonString:
    """A memory string of 4 DFS-encoded qubits (8 qubit ions), flanked by
    cooling ions so ion loss shows up in the cooling-ion spacing."""
    qubits = [Ion(qubit_species, IonRole.QUBIT)] * (QUBITS_PER_STRING * IONS_PER_QUBIT)
    left = n_cooling // 2
    cooling = Ion(cooling_species, IonRole.COOLING)
    ions = [cooling] * left + qubits + [cooling] * (n_cooling - left)
    return IonString(string_id, tuple(ions), location)


# ---------------------------------------------------------------- circuits

ONE_QUBIT_OPS = {"h", "x", "y", "z", "s", "sdg", "t", "tdg", "rx", "ry", "rz", "sx", "id", "u"}
TWO_QUBIT_OPS = {"cx", "cnot", "cz", "ms", "xx", "zz", "cphase"}


class OpKind(str, Enum):
    GATE_1Q = "SingleQubitGate"
    GATE_2Q = "TwoQubitGate"
    MEASURE = "Measure"
    INIT = "Init"


@dataclass(frozen=True)
class Operation:
    kind: OpKind
    qubits: tuple[int, ...]
    name: str = ""


@dataclass
class Circuit:
    ops: list[Operation]
    n_qubits: int
    qubit_map: dict = field(default_factory=dict)

    @classmethod
    def from_ops(cls, ops, qubit_map=None, n_qubits=None) -> "Circuit":
        """Qubit ids live in [0, n_qubits); ``n_qubits`` defaults to max id + 1.
        Ids in the range need not all appear in an op."""
        ops = list(ops)
        used = sorted({q for op in ops for q in op.qubits})
        n = (used[-1] + 1) if used else 0
        if n_qubits is not None:
            if used and used[-1] >= n_qubits:
                raise ValidationError(f"qubit id {used[-1]} outside [0, {n_qubits})")
            n = int(n_qubits)
        qubit_map = dict(qubit_map or {})
        stray = [q for q in qubit_map if not 0 <= q < n]
        if stray:
            raise ValidationError(f"qubit_map names qubits outside [0, {n}): {stray}")
        return cls(ops, n, qubit_map)

    def strings(self) -> list[int]:
        return sorted({q // QUBITS_PER_STRING for op in self.ops for q in op.qubits})


def parse_circuit(data) -> Circuit:
    """Build a Circuit from the JSON op list (or {"ops": [...], "qubit_map": {...}})."""
    qubit_map, n_qubits = {}, None
    if isinstance(data, dict):
        n_qubits = data.get("n_qubits")
        qubit_map = {int(k): (v[0], (int(v[1]), int(v[2])))
                     for k, v in data.get("qubit_map", {}).items()}
        data = data.get("ops", [])
    if not isinstance(data, list):
        raise ParseError("circuit must be a list of ops")
    ops = []
    for i, raw in enumerate(data):
        try:
            name = str(raw["op"]).lower()
            qubits = tuple(int(q) for q in raw["q"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"op #{i}: {exc!r}") from None
        if any(q < 0 for q in qubits):
            raise ParseError(f"op #{i}: negative qubit id")
        if name in ("measure", "m", "mz"):
            kind = OpKind.MEASURE
        elif name in ("init", "reset", "prep"):
            kind = OpKind.INIT
        elif name in TWO_QUBIT_OPS or (name not in ONE_QUBIT_OPS and len(qubits) == 2):
            kind = OpKind.GATE_2Q
        else:
            kind = OpKind.GATE_1Q
        arity = 2 if kind is OpKind.GATE_2Q else 1
        if len(qubits) != arity:
            raise ParseError(f"op #{i} ({name}) expects {arity} qubit(s), got {len(qubits)}")
        if kind is OpKind.GATE_2Q and qubits[0] == qubits[1]:
            raise ParseError(f"op #{i}: two-qubit gate on a single qubit")
        ops.append(Operation(kind, qubits, name))
    return Circuit.from_ops(ops, qubit_map, n_qubits)


def load_circuit(path) -> Circuit:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from None
    return parse_circuit(data)


# ---------------------------------------------------------------- machine parameters

@dataclass(frozen=True)
class MachineParams:
    t_1q_s: float = 1.0e-5
    t_2q_s: float = 2.0e-5
    n_parallel_1q: int = 8
    shuttle_step_s: float = 5.0e-6
    mux_switch_s: float = 1.0e-6
    detection_time_s: float = 1.0e-4
    n_ghz_ancillas: int = 7
    heating_rate_quanta_per_s: float = 0.33
    memory_heating_rate_quanta_per_s: float = 10.0
    pressure_mbar: float = 1.0e-16
    coherence_time_s: float = 86400.0
    qec_coherence_fraction: float = 0.05
    dac_budget: int = 4
    handoff_lookahead: int = 1
    extraction_steps: int = 3
    pipeline: Optional[object] = None  # qvn.pipeline.PipelineConfig

    def __post_init__(self):
        for name in ("t_1q_s", "t_2q_s", "n_parallel_1q", "shuttle_step_s", "mux_switch_s",
                     "detection_time_s", "n_ghz_ancillas", "heating_rate_quanta_per_s",
                     "memory_heating_rate_quanta_per_s", "pressure_mbar", "coherence_time_s",
                     "qec_coherence_fraction", "dac_budget", "handoff_lookahead",
                     "extraction_steps"):
            value = getattr(self, name)
            if not value > 0:
                raise ValidationError(f"MachineParams.{name} must be > 0, got {value!r}")
        if self.qec_coherence_fraction > 1:
            raise ValidationError("qec_coherence_fraction must be <= 1")

    def with_(self, **changes) -> "MachineParams":
        return replace(self, **changes)


def params_from_dict(data: dict) -> MachineParams:
    from .pipeline import PipelineConfig

    data = dict(data)
    pipe = data.pop("pipeline", None)
    known = {f for f in MachineParams.__dataclass_fields__ if f != "pipeline"}
    unknown = set(data) - known
    if unknown:
        raise ParseError(f"unknown machine parameter(s): {sorted(unknown)}")
    if pipe is not None:
        data["pipeline"] = PipelineConfig.from_dict(pipe)
    return MachineParams(**data)


def load_params(path) -> MachineParams:
    try:
        with open(path) as fh:
            return params_from_dict(json.load(fh))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from None


# ---------------------------------------------------------------- layout loading

def data_path(name: str) -> Path:
    override = os.environ.get("QVN_DATA_DIR")
    if override and (Path(override) / name).exists():
        return Path(override) / name
    return Path(str(resources.files("qvn") / "data" / name))


def _pair(v, what):
    if v is None:
        return None
    if not (isinstance(v, (list, tuple)) and len(v) == 2):
        raise ParseError(f"{what} must be a [a, b] pair, got {v!r}")
    return (v[0], v[1])


def layout_from_dict(data: dict) -> TrapLayout:
    """Build and validate a TrapLayout from the declarative JSON schema."""
    try:
        zones = []
        for z in data["zones"]:
            grid = _pair(z.get("grid"), "grid")
            zones.append(Zone(
                id=str(z["id"]),
                kind=ZoneKind(z["kind"]),
                size_ul=_pair(z.get("size_ul"), "size_ul"),
                segments=int(z["segments"]),
                dacs=int(z["dacs"]),
                grid=(int(grid[0]), int(grid[1])) if grid else None,
                cell_capacity=int(z["cell_capacity"]) if z.get("cell_capacity") is not None else None,
                origin_ul=tuple(float(x) for x in z.get("origin_ul", (0.0, 0.0))),
                bank=z.get("bank"),
            ))
        tracks = []
        next_pair = 0
        for t in data.get("tracks", []):
            tid = int(t["id"])
            n = int(t["pairs"])
            bank = t.get("bank", "transport")
            pairs = tuple(SegmentPair(next_pair + i, tid, i, Control(ControlKind.MUX_BANK, bank))
                          for i in range(max(n, 0)))
            next_pair += max(n, 0)
            tracks.append(Track(tid, str(t["zone"]), pairs,
                                bool(t.get("storage_allowed", False)),
                                bool(t.get("cooling_beam_axis", False)),
                                bank, tuple(int(x) for x in t.get("connects", ()))))
        junctions = []
        for j in data.get("junctions", []):
            junctions.append(Junction(int(j["id"]), str(j["kind"]).upper(),
                                      tuple(int(a) for a in j["arms"]),
                                      int(j.get("extra_pair_budget", 2)), next_pair))
            next_pair += 1
        banks = [DacBank(str(b["id"]), int(b.get("pairs", 4))) for b in data.get("dac_banks", [])]
        statics = [StaticVoltageSet(str(s["id"]), int(s.get("pairs", 3)))
                   for s in data.get("static_voltage_sets", [])]
        size = _pair(data.get("size_ul"), "size_ul")
        layout = TrapLayout(zones, tracks, junctions,
                            float(data.get("unit_length_m", DEFAULT_UNIT_LENGTH_M)),
                            banks, statics, size, str(data.get("name", "")))
    except ValidationError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"layout schema error: {exc!r}") from None
    validate_layout(layout, expected_total=data.get("total_segments"))
    return layout


def validate_layout(layout: TrapLayout, expected_total=None) -> None:
    """Raise ValidationError naming the first violated invariant."""
    ids = [z.id for z in layout.zones]
    if len(set(ids)) != len(ids):
        raise ValidationError("duplicate zone id")
    tids = [t.id for t in layout.tracks]
    if len(set(tids)) != len(tids):
        raise ValidationError("duplicate track id")
    if not layout.unit_length_m > 0:
        raise ValidationError("unit_length_m must be > 0")
    for z in layout.zones:
        if z.segments < 0 or z.dacs < 0:
            raise ValidationError(f"zone {z.id}: negative counts")
        if z.kind is ZoneKind.MEMORY:
            if z.grid is None or z.grid[0] <= 0 or z.grid[1] <= 0:
                raise ValidationError(f"zone {z.id}: memory zone needs a rectangular cell grid")
            if z.cell_capacity is None or z.cell_capacity <= 0:
                raise ValidationError(f"zone {z.id}: memory zone needs cell_capacity > 0")
    for t in layout.tracks:
        if t.zone_id not in layout._zones:
            raise ValidationError(f"track {t.id}: unknown zone {t.zone_id!r}")
        if t.n_pairs < 3:
            raise ValidationError(f"track {t.id}: needs >= 3 segment pairs to confine a well")
        if t.storage_allowed and t.cooling_beam_axis:
            raise ValidationError(f"track {t.id}: storage tracks run perpendicular to cooling beams")
        for other in t.connects:
            if other not in layout._tracks:
                raise ValidationError(f"track {t.id}: connects to unknown track {other}")
    for j in layout.junctions:
        want = {"Y": 3, "X": 4}.get(j.kind)
        if want is None:
            raise ValidationError(f"junction {j.id}: kind must be X or Y")
        if len(j.arm_track_ids) != want:
            raise ValidationError(f"junction {j.id}: {j.kind} junction needs {want} arms")
        if len(set(j.arm_track_ids)) != want:
            raise ValidationError(f"junction {j.id}: repeated arm")
        for a in j.arm_track_ids:
            if a not in layout._tracks:
                raise ValidationError(f"junction {j.id}: unknown arm track {a}")
        if j.extra_pair_budget < 0:
            raise ValidationError(f"junction {j.id}: extra_pair_budget must be >= 0")
    if expected_total is not None and int(expected_total) != layout.total_segments:
        raise ValidationError(
            f"total segments {expected_total} != sum over zones {layout.total_segments}")

    g = layout.graph()
    qalus = layout.zones_of(ZoneKind.QALU)
    if qalus:
        reach = nx.node_connected_component(g, ("zone", qalus[0].id))
        for z in layout.memory_zones:
            if ("zone", z.id) not in reach:
                raise ValidationError(f"unreachable cell: zone {z.id} cell {z.cells()[0]} "
                                      f"has no path to the QALU")
    if g.number_of_nodes() > 1 and not nx.is_connected(g):
        raise ValidationError("layout graph is not connected")


def load_layout(path) -> TrapLayout:
    """Load a layout file, or the bundled preset for ``preset:quantum4004``."""
    if str(path).startswith("preset:"):
        name = str(path).split(":", 1)[1]
        if name != PRESET_NAME:
            raise ParseError(f"unknown preset {name!r}")
        return quantum4004_preset()
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from None
    if not isinstance(data, dict):
        raise ParseError(f"{path}: layout must be a JSON object")
    return layout_from_dict(data)


def quantum4004_preset() -> TrapLayout:
    with open(data_path("quantum4004.json")) as fh:
        return layout_from_dict(json.load(fh))


# ---------------------------------------------------------------- resource table

@dataclass
class ResourceReport:
    zones: list[dict]
    total_segments: int
    total_dacs: int
    size_ul: tuple[int, int]
    width_m: float
    height_m: float
    diagonal_m: float
    capacity_qubit_ions: int
    n_cells: int
    segments_per_qubit_ion: float
    qubit_ions_per_dac: float

    def to_dict(self) -> dict:
        return {
            "zones": self.zones,
            "total_segments": self.total_segments,
            "total_dacs": self.total_dacs,
            "size_ul": list(self.size_ul),
            "width_mm": self.width_m * 1e3,
            "height_mm": self.height_m * 1e3,
            "diagonal_mm": self.diagonal_m * 1e3,
            "capacity_qubit_ions": self.capacity_qubit_ions,
            "n_cells": self.n_cells,
            "segments_per_qubit_ion": self.segments_per_qubit_ion,
            "qubit_ions_per_dac": self.qubit_ions_per_dac,
        }


def resource_table(layout: TrapLayout) -> ResourceReport:
    rows = []
    for z in layout.zones:
        row = {"id": z.id, "kind": z.kind.value, "segments": z.segments, "dacs": z.dacs,
               "size_ul": list(z.size_ul) if z.size_ul else None}
        if z.kind is ZoneKind.MEMORY:
            row["grid"] = list(z.grid)
            row["capacity_qubit_ions"] = z.capacity
        rows.append(row)
    if layout.size_ul is not None:
        size = layout.size_ul
    else:
        sized = [z for z in layout.zones if z.size_ul]
        size = (max((z.origin_ul[0] + z.size_ul[0] for z in sized), default=0),
                max((z.origin_ul[1] + z.size_ul[1] for z in sized), default=0))
    w = size[0] * layout.unit_length_m
    h = size[1] * layout.unit_length_m
    cap = layout.capacity_qubit_ions
    dacs = layout.total_dacs
    return ResourceReport(
        zones=rows,
        total_segments=layout.total_segments,
        total_dacs=dacs,
        size_ul=tuple(size),
        width_m=w,
        height_m=h,
        diagonal_m=math.hypot(w, h),
        capacity_qubit_ions=cap,
        n_cells=layout.total_cells,
        segments_per_qubit_ion=layout.total_segments / cap if cap else math.inf,
        qubit_ions_per_dac=cap / dacs if dacs else math.inf,
    )


def small_layout(grid=(4, 4), cell_capacity: int = 16, n_detection: int = 3,
                 n_memory_zones: int = 1) -> TrapLayout:
    """Compact layout for experiments: memory zones, a QALU and detection zones
    a few unit lengths apart on one connecting track."""
    zones, tracks = [], [{"id": 0, "zone": "connecting", "pairs": 16}]
    banks = [{"id": "transport", "pairs": 4}]
    for k in range(n_memory_zones):
        zid = f"memory_{k}"
        zones.append({"id": zid, "kind": "Memory", "size_ul": list(grid), "segments": 0,
                      "dacs": 0, "grid": list(grid), "cell_capacity": cell_capacity,
                      "origin_ul": [-grid[0] - 1, 2 * k * grid[1]], "bank": zid})
        tracks.append({"id": len(tracks), "zone": zid, "pairs": 8, "cooling_beam_axis": True,
                       "bank": zid, "connects": [0]})
        banks.append({"id": zid, "pairs": 4})
    zones.append({"id": "qalu", "kind": "QALU", "size_ul": [2, 2], "segments": 0, "dacs": 0,
                  "origin_ul": [1, 0], "bank": "qalu"})
    tracks.append({"id": len(tracks), "zone": "qalu", "pairs": 8, "bank": "qalu", "connects": [0]})
    for k in range(n_detection):
        zid = f"detection_{k + 1}"
        zones.append({"id": zid, "kind": "Detection", "size_ul": [2, 2], "segments": 0,
                      "dacs": 0, "origin_ul": [4, 3 * k], "bank": zid})
        tracks.append({"id": len(tracks), "zone": zid, "pairs": 4, "bank": zid,
                       "connects": [0]})
    zones.append({"id": "connecting", "kind": "ConnectingTrack", "segments": 0, "dacs": 0})
    return layout_from_dict({"name": "small", "zones": zones, "tracks": tracks,
                             "dac_banks": banks})
