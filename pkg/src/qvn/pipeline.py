"""QALU and detection-zone pipelining.

The QALU is a chain of processing regions (combine, cool, decode, gate,
encode, split). Once every region holds a string the machine retires one
string per beat, the beat being the slowest region.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

from .errors import InfeasibleCollection, ValidationError

US = 1e-6
_EPS = 1e-9


class StageKind(str, Enum):
    COMBINE = "Combine"
    DOPPLER = "DopplerCool"
    EIT = "EITCool"
    DECODE = "Decode"
    MAP = "MapToProcessing"
    QIP = "QIP"
    MAP_BACK = "MapBack"
    ENCODE = "Encode"
    SPLIT = "Split"


class Variant(str, Enum):
    COMBINED_STRING = "CombinedString"
    SEPARATE_COOLING = "SeparateCooling"


# Region order per QALU variant; SeparateCooling cools strings before merging them.
STAGE_ORDER = {
    Variant.COMBINED_STRING: [StageKind.COMBINE, StageKind.DOPPLER, StageKind.EIT,
                              StageKind.DECODE, StageKind.MAP, StageKind.QIP,
                              StageKind.MAP_BACK, StageKind.ENCODE, StageKind.SPLIT],
    Variant.SEPARATE_COOLING: [StageKind.DOPPLER, StageKind.EIT, StageKind.DECODE,
                               StageKind.COMBINE, StageKind.MAP, StageKind.QIP,
                               StageKind.MAP_BACK, StageKind.ENCODE, StageKind.SPLIT],
}

DEFAULT_DURATIONS = {
    StageKind.COMBINE: 50 * US,
    StageKind.DOPPLER: 1000 * US,
    StageKind.EIT: 200 * US,
    StageKind.DECODE: 80 * US,
    StageKind.MAP: 10 * US,
    StageKind.MAP_BACK: 10 * US,
    StageKind.ENCODE: 80 * US,
    StageKind.SPLIT: 50 * US,
}


@dataclass(frozen=True)
class Stage:
    kind: StageKind
    duration_s: float
    multiplicity: int = 1


@dataclass(frozen=True)
class PipelineConfig:
    stages: tuple[Stage, ...]
    variant: Variant = Variant.COMBINED_STRING

    def __post_init__(self):
        if not self.stages:
            raise ValidationError("pipeline needs at least one stage")
        for s in self.stages:
            if not s.duration_s > 0:
                raise ValidationError(f"stage {s.kind.value}: duration must be > 0")
            if s.multiplicity < 1:
                raise ValidationError(f"stage {s.kind.value}: multiplicity must be >= 1")
        order = STAGE_ORDER[self.variant]
        pos = -1
        for s in self.stages:
            idx = order.index(s.kind)
            # repeated Doppler regions are allowed, anything else must move forward
            if idx < pos or (idx == pos and s.kind is not StageKind.DOPPLER):
                raise ValidationError(
                    f"stage {s.kind.value} out of order for variant {self.variant.value}")
            pos = idx

    def expanded(self) -> list[tuple[StageKind, float]]:
        """One (kind, duration) entry per physical processing region."""
        return [(s.kind, s.duration_s) for s in self.stages for _ in range(s.multiplicity)]

    @property
    def depth(self) -> int:
        return len(self.expanded())

    def qip_index(self) -> Optional[int]:
        for i, (kind, _) in enumerate(self.expanded()):
            if kind is StageKind.QIP:
                return i
        return None

    def labels(self) -> list[str]:
        out, seen = [], {}
        for kind, _ in self.expanded():
            seen[kind] = seen.get(kind, 0) + 1
            out.append(kind.value if kind is not StageKind.DOPPLER else f"{kind.value}{seen[kind]}")
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        try:
            stages = tuple(Stage(StageKind(s["kind"]), float(s["duration_s"]),
                                 int(s.get("multiplicity", 1))) for s in data["stages"])
            variant = Variant(data.get("variant", Variant.COMBINED_STRING.value))
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"pipeline config: {exc!r}") from None
        return cls(stages, variant)

    def to_dict(self) -> dict:
        return {"variant": self.variant.value,
                "stages": [{"kind": s.kind.value, "duration_s": s.duration_s,
                            **({"multiplicity": s.multiplicity} if s.multiplicity > 1 else {})}
                           for s in self.stages]}


@dataclass(frozen=True)
class PipelineMetrics:
    cycle_time_s: float
    latency_s: float
    depth: int

    @property
    def throughput_per_s(self) -> float:
        return 1.0 / self.cycle_time_s

    @property
    def speedup(self) -> float:
        return self.latency_s / self.cycle_time_s

    def to_dict(self) -> dict:
        return {"cycle_time_s": self.cycle_time_s, "latency_s": self.latency_s,
                "depth": self.depth, "throughput_per_s": self.throughput_per_s,
                "speedup": self.speedup}


def pipeline_metrics(config: PipelineConfig) -> PipelineMetrics:
    durations = [d for _, d in config.expanded()]
    return PipelineMetrics(max(durations), math.fsum(durations), len(durations))


def doppler_stage_count(t_doppler_s: float, beat_s: float) -> int:
    """Doppler sub-regions needed so that none lasts longer than one beat."""
    if not (t_doppler_s > 0 and beat_s > 0):
        raise ValueError("durations must be positive")
    return max(1, math.ceil(t_doppler_s / beat_s - _EPS))


def default_pipeline(qip_s: float = 20 * US, variant: Variant = Variant.COMBINED_STRING,
                     t_doppler_s: float = DEFAULT_DURATIONS[StageKind.DOPPLER],
                     durations: Optional[dict] = None) -> PipelineConfig:
    """Nine-region QALU with the Doppler cooling split into beat-sized regions."""
    d = dict(DEFAULT_DURATIONS)
    d.update(durations or {})
    d[StageKind.QIP] = qip_s
    beat = max(v for k, v in d.items() if k is not StageKind.DOPPLER)
    n_doppler = doppler_stage_count(t_doppler_s, beat)
    stages = []
    for kind in STAGE_ORDER[variant]:
        if kind is StageKind.DOPPLER:
            stages.append(Stage(kind, t_doppler_s / n_doppler, n_doppler))
        else:
            stages.append(Stage(kind, d[kind]))
    return PipelineConfig(tuple(stages), variant)


# ---------------------------------------------------------------- detection

SWAP_ENTANGLING_GATES = 3


def ghz_generation_time(n_ancillas: int, t_2q_s: float) -> float:
    """Swap onto the detection species plus N-1 fan-out CNOTs."""
    if n_ancillas < 1:
        raise ValueError("need at least one ancilla")
    return (SWAP_ENTANGLING_GATES + (n_ancillas - 1)) * t_2q_s


def required_detection_zones(ghz_time_s: float, required_interval_s: float) -> int:
    if not (ghz_time_s > 0 and required_interval_s > 0):
        raise ValueError("times must be positive")
    return max(1, math.ceil(ghz_time_s / required_interval_s - _EPS))


@dataclass(frozen=True)
class DetectionBudget:
    scatter_rate_Hz: float = 10e6
    detection_time_s: float = 10e-6
    collection_efficiency: float = 0.1
    detector_efficiency: float = 0.5
    clicks_required: float = 5
    d_state_lifetime_s: float = 1.0
    n_ghz_ancillas: int = 1

    def __post_init__(self):
        for name in ("scatter_rate_Hz", "detection_time_s", "clicks_required",
                     "d_state_lifetime_s", "n_ghz_ancillas"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"{name} must be > 0")
        for name in ("collection_efficiency", "detector_efficiency"):
            v = getattr(self, name)
            if not 0 < v <= 1:
                raise ValidationError(f"{name} must be in (0, 1], got {v}")


def majority_vote_error(p: float, n: int) -> tuple[float, float]:
    """(p**m, exact binomial tail) for m = n//2 + 1 wrong votes out of n."""
    m = n // 2 + 1
    exact = math.fsum(math.comb(n, k) * p ** k * (1 - p) ** (n - k) for k in range(m, n + 1))
    return p ** m, exact


def detection_budget(b: DetectionBudget) -> dict:
    n = b.n_ghz_ancillas
    photons = b.scatter_rate_Hz * b.detection_time_s * n
    min_collection = b.clicks_required / (photons * b.detector_efficiency)
    if min_collection > 1:
        raise InfeasibleCollection(
            f"need collection efficiency {min_collection:.3g} > 1 for {b.clicks_required} clicks")
    # collected fraction of a cone with half-angle theta is (1 - cos theta)/2
    cos_theta = 1 - 2 * min_collection
    # beyond a hemisphere no lens NA suffices; report the NA=1 ceiling
    min_na = 1.0 if cos_theta <= 0 else math.sqrt(1 - cos_theta ** 2)
    p = -math.expm1(-b.detection_time_s / b.d_state_lifetime_s)
    power_mode, exact = majority_vote_error(p, n)
    return {
        "photons_emitted": photons,
        "expected_clicks": photons * b.collection_efficiency * b.detector_efficiency,
        "shelving_infidelity": p,
        "min_collection": min_collection,
        "min_NA": min_na,
        "decays_to_flip": n // 2 + 1,
        "majority_vote_error": {"power": power_mode, "binomial": exact},
    }
