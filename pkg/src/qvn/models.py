"""Closed-form architecture models."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

from scipy.optimize import brentq

from .core import MachineParams
from .errors import ValidationError

STEANE_QUBITS = 7
STEANE_ENTANGLING_GATES = 24  # 4 CNOTs x (3 bit-flip + 3 phase-flip syndromes)
STEANE_SYNDROMES = 6


@dataclass(frozen=True)
class RentParams:
    K: float
    B: float
    r: float

    def __post_init__(self):
        if not self.K > 0:
            raise ValidationError("Rent coefficient K must be > 0")
        if not self.B >= 1:
            raise ValidationError("element count B must be >= 1")
        if self.r < 0:
            raise ValidationError("Rent exponent must be >= 0")
        if self.r > 0.75:
            warnings.warn(f"Rent exponent {self.r} above the empirical 0.75 ceiling", stacklevel=2)


def rent_pins(p: RentParams) -> float:
    return p.K * p.B ** p.r


@dataclass(frozen=True)
class KappaInputs:
    coherence_time_s: float
    qec_fraction: float
    qec_cycle_per_qubit_s: float

    def __post_init__(self):
        if not (self.coherence_time_s > 0 and self.qec_cycle_per_qubit_s > 0):
            raise ValidationError("times must be > 0")
        if not 0 < self.qec_fraction <= 1:
            raise ValidationError("qec_fraction must be in (0, 1]")


def dec(x) -> Fraction:
    """Exact rational of a float's shortest decimal form."""
    return Fraction(repr(float(x)))


def kappa(k: KappaInputs) -> float:
    """Physical qubits one processing zone can keep alive by serial QEC."""
    return float(dec(k.coherence_time_s) * dec(k.qec_fraction) / dec(k.qec_cycle_per_qubit_s))


def kappa_range(coherence_time_s: float, qec_cycle_per_qubit_s: float,
                fractions=(0.01, 0.1)) -> dict:
    lo = kappa(KappaInputs(coherence_time_s, fractions[0], qec_cycle_per_qubit_s))
    hi = kappa(KappaInputs(coherence_time_s, fractions[1], qec_cycle_per_qubit_s))
    return {"kappa_min": lo, "kappa_max": hi, "fault_tolerant": lo > 1}


def steane_cycle(t_2q_s: float, t_correct_s: float) -> float:
    """QEC cycle time per physical qubit for the 7-qubit Steane code."""
    if t_2q_s < 0 or t_correct_s < 0:
        raise ValueError("times must be non-negative")
    return (STEANE_ENTANGLING_GATES * t_2q_s + t_correct_s) / STEANE_QUBITS


class ShorArch(str, Enum):
    BCDP = "BCDP"
    NTC = "NTC"
    AC = "AC"


@dataclass(frozen=True)
class ShorModel:
    kind: ShorArch
    logical_clock_Hz: float

    def __post_init__(self):
        if not self.logical_clock_Hz > 0:
            raise ValidationError("logical clock must be > 0")


# logical clocks assumed for the runtime comparison
FIG_CLOCKS = {ShorArch.BCDP: 1e6, ShorArch.NTC: 1e6, ShorArch.AC: 1e3}


def shor_steps(kind: ShorArch, n_bits: float) -> float:
    kind = ShorArch(kind)
    n = float(n_bits)
    if kind is ShorArch.BCDP:
        return 54 * n ** 3
    if kind is ShorArch.NTC:
        return 20 * n ** 2 * math.log2(n)
    return 9 * n * math.log2(n) ** 2


def shor_time(model: ShorModel, n_bits: float) -> float:
    return shor_steps(model.kind, n_bits) / model.logical_clock_Hz


def shor_qubits(model, n_bits: int) -> int:
    kind = ShorArch(model.kind if isinstance(model, ShorModel) else model)
    if kind is ShorArch.BCDP:
        return 5 * n_bits + 3
    return 2 * n_bits ** 2


def shor_crossover(a: ShorModel, b: ShorModel, lo: float = 2.0, hi: float = 1e9) -> float:
    """Bit length at which ``a`` and ``b`` take equal time."""
    f = lambda x: math.log(shor_time(a, x)) - math.log(shor_time(b, x))
    return brentq(f, lo, hi, xtol=1e-9, rtol=1e-12)


def rate(count: float, period_s: float) -> float:
    """count / period evaluated on the decimal values as written, so that
    8 / 1e-5 comes out as 800000.0 rather than 799999.9999999999."""
    return float(dec(count) / dec(period_s))


def machine_throughput(params: MachineParams) -> dict:
    """Peak gate rates with all overheads outside the gates excluded."""
    return {"oneq_per_s": rate(params.n_parallel_1q, params.t_1q_s),
            "twoq_per_s": rate(1, params.t_2q_s)}


def syndrome_sweep(n_physical_qubits: int, t_2q_s: float, ceil_blocks: bool = False) -> dict:
    """One Steane syndrome round over every physical qubit, fully serialised.

    By default gate and detection counts stay fractional (n * 24/7);
    ``ceil_blocks`` rounds up to whole 7-qubit blocks instead.
    """
    if not (n_physical_qubits > 0 and t_2q_s > 0):
        raise ValueError("inputs must be positive")
    if ceil_blocks:
        blocks = math.ceil(n_physical_qubits / STEANE_QUBITS)
        gates = STEANE_ENTANGLING_GATES * blocks
        detections = STEANE_SYNDROMES * blocks
    else:
        gates = n_physical_qubits * STEANE_ENTANGLING_GATES / STEANE_QUBITS
        detections = n_physical_qubits * STEANE_SYNDROMES / STEANE_QUBITS
    sweep = gates * t_2q_s
    return {"total_2q_gates": gates, "sweep_time_s": sweep,
            "detections": detections, "detection_interval_s": sweep / detections}


def lo_stability_required(transition_Hz: float, coherence_target_s: float) -> float:
    """Fractional reference stability keeping phase error below one cycle over
    the coherence target."""
    if not (transition_Hz > 0 and coherence_target_s > 0):
        raise ValueError("inputs must be positive")
    return 1.0 / (transition_Hz * coherence_target_s)


MIN_SAMPLE_PERIOD_S = 1e-8  # 100 MSample/s DACs


def dac_ram_requirement(ramp_duration_s: float, sample_period_s: float,
                        bits_per_sample: int, n_waveforms: int) -> int:
    """Bytes of waveform RAM for ``n_waveforms`` stored ramps."""
    if ramp_duration_s < 0 or bits_per_sample <= 0 or n_waveforms <= 0:
        raise ValueError("inputs must be positive")
    if sample_period_s < MIN_SAMPLE_PERIOD_S * (1 - 1e-12):
        raise ValueError(f"sample period below the {MIN_SAMPLE_PERIOD_S} s DAC limit")
    samples = math.ceil(ramp_duration_s / sample_period_s - 1e-9) if ramp_duration_s else 0
    return math.ceil(samples * bits_per_sample * n_waveforms / 8)
