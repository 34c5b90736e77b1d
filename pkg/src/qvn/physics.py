"""Physics side-calculations: bias-coil homogeneity, vacuum budget, clock
shifts, beam power and trap capacitance."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np
from scipy.constants import epsilon_0, mu_0

from .errors import QvnError, SingularPoint, ValidationError
from .models import dec


class CoilKind(str, Enum):
    HELMHOLTZ = "Helmholtz"
    MAXWELL = "Maxwell"


@dataclass(frozen=True)
class Loop:
    radius_m: float
    z_m: float
    ampere_turns: float


@dataclass(frozen=True)
class CoilSystem:
    """Coaxial thin circular loops; the axis is local z, mapped to the lab
    frame by ``rotation`` (3x3, orthonormal)."""

    kind: CoilKind
    radius_m: float = 1.0
    ampere_turns: float = 1.0
    rotation: Optional[tuple] = None
    loops: tuple = field(default=(), compare=False)

    def __post_init__(self):
        if not self.radius_m > 0:
            raise ValidationError("coil radius must be > 0")
        if not self.loops:
            object.__setattr__(self, "loops", _loops(CoilKind(self.kind), self.radius_m,
                                                     self.ampere_turns))

    def rotated(self, rotation) -> "CoilSystem":
        return CoilSystem(self.kind, self.radius_m, self.ampere_turns,
                          tuple(map(tuple, np.asarray(rotation, float))))


def _loops(kind: CoilKind, R: float, nI: float) -> tuple[Loop, ...]:
    if kind is CoilKind.HELMHOLTZ:
        return (Loop(R, -R / 2, nI), Loop(R, R / 2, nI))
    # centre loop plus two loops of radius sqrt(4/7) R at +-sqrt(3/7) R, ampere-turns 49:64
    a, z = R * math.sqrt(4 / 7), R * math.sqrt(3 / 7)
    outer = nI * 49 / 64
    return (Loop(a, -z, outer), Loop(R, 0.0, nI), Loop(a, z, outer))


def single_loop(radius_m: float = 1.0, ampere_turns: float = 1.0) -> CoilSystem:
    return CoilSystem(CoilKind.HELMHOLTZ, radius_m, ampere_turns,
                      loops=(Loop(radius_m, 0.0, ampere_turns),))


def _loop_field(loop: Loop, pts: np.ndarray, m: int) -> np.ndarray:
    phi = np.arange(m) * (2 * np.pi / m)
    c, s = np.cos(phi), np.sin(phi)
    a = loop.radius_m
    wire = np.stack([a * c, a * s, np.full(m, loop.z_m)], axis=-1)          # (m, 3)
    dl = np.stack([-a * s, a * c, np.zeros(m)], axis=-1)                     # (m, 3)
    rel = pts[:, None, :] - wire[None, :, :]                                 # (n, m, 3)
    dist = np.linalg.norm(rel, axis=-1)
    integrand = np.cross(dl[None, :, :], rel) / dist[..., None] ** 3
    # trapezoid rule on a periodic integrand: spectrally accurate
    return mu_0 * loop.ampere_turns / (4 * np.pi) * integrand.sum(axis=1) * (2 * np.pi / m)


def _wire_distance(loop: Loop, pts: np.ndarray) -> np.ndarray:
    rho = np.hypot(pts[:, 0], pts[:, 1])
    return np.hypot(rho - loop.radius_m, pts[:, 2] - loop.z_m)


def field_at(coils: CoilSystem, points, rtol: float = 1e-13, m0: int = 64,
             m_max: int = 1 << 17) -> np.ndarray:
    """Biot-Savart field (tesla) at one point (3,) or many points (n, 3).

    The loop integral is refined by doubling the node count until successive
    results agree to ``rtol``.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    single = np.ndim(points) == 1
    rot = np.asarray(coils.rotation, float) if coils.rotation is not None else None
    local = pts @ rot if rot is not None else pts
    total = np.zeros_like(local)
    for loop in coils.loops:
        if np.min(_wire_distance(loop, local)) < 1e-12 * loop.radius_m:
            raise SingularPoint("field point lies on a coil wire")
        m = m0
        prev = _loop_field(loop, local, m)
        while True:
            m *= 2
            cur = _loop_field(loop, local, m)
            scale = np.max(np.linalg.norm(cur, axis=-1))
            if np.max(np.linalg.norm(cur - prev, axis=-1)) <= rtol * scale or m >= m_max:
                break
            prev = cur
        total += cur
    if rot is not None:
        total = total @ rot.T
    return total[0] if single else total


def fibonacci_sphere(n: int) -> np.ndarray:
    """Deterministic, near-uniform unit vectors."""
    i = np.arange(n) + 0.5
    z = 1 - 2 * i / n
    r = np.sqrt(1 - z * z)
    theta = np.pi * (1 + math.sqrt(5)) * i
    return np.stack([r * np.cos(theta), r * np.sin(theta), z], axis=-1)


def max_relative_deviation(coils: CoilSystem, r_m: float, n_points: int = 256,
                           center=(0.0, 0.0, 0.0)) -> float:
    center = np.asarray(center, float)
    b0 = field_at(coils, center)
    b = field_at(coils, center + r_m * fibonacci_sphere(n_points))
    return float(np.max(np.linalg.norm(b - b0, axis=-1)) / np.linalg.norm(b0))


def homogeneous_sphere_radius(coils: CoilSystem, rel_tolerance: float,
                              n_points: int = 256, iters: int = 40) -> float:
    """Largest r/R for which every sampled point on the sphere of radius r is
    within ``rel_tolerance`` of the centre field."""
    if not 0 < rel_tolerance <= 1e-2:
        raise ValueError("tolerance must be in (0, 1e-2]")
    if n_points < 200:
        raise ValueError("use at least 200 sphere samples")
    R = coils.radius_m
    dev = lambda x: max_relative_deviation(coils, x * R, n_points)
    lo, hi = 0.0, 1e-3
    while dev(hi) <= rel_tolerance:
        lo, hi = hi, hi * 2
        if hi > 0.9:
            raise QvnError("homogeneous region reaches the coil wires")
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if dev(mid) <= rel_tolerance:
            lo = mid
        else:
            hi = mid
    return lo


def required_coil_radius(coils_kind, trap_diagonal_m: float, rel_tolerance: float) -> float:
    """Coil radius whose homogeneous sphere just encloses the whole trap."""
    ratio = homogeneous_sphere_radius(CoilSystem(CoilKind(coils_kind)), rel_tolerance)
    return (trap_diagonal_m / 2) / ratio


# ---------------------------------------------------------------- magnetic & clock

def clock_shift(sensitivity_Hz_per_mT2: float, delta_B_mT: float) -> float:
    """Second-order Zeeman shift of a clock transition."""
    if sensitivity_Hz_per_mT2 < 0:
        raise ValueError("sensitivity must be non-negative")
    return sensitivity_Hz_per_mT2 * delta_B_mT ** 2


def relative_field_offset(residual_T: float, bias_T: float) -> float:
    return residual_T / bias_T


# ---------------------------------------------------------------- vacuum

ROOM_TEMP_COLLISIONS_PER_ION_S = 1 / 3600.0
REFERENCE_PRESSURE_MBAR = 1e-11

# (temperature K, sublimation pressure mbar) anchors, warm anchor first
SUBLIMATION_ANCHORS = {
    "H2": ((4.2, 1e-6), (2.6, 1e-12)),
    "He4": ((0.46, 1e-6), (0.24, 1e-12)),
    "He3": ((0.22, 1e-6), (0.1, 1e-12)),
}


class OutOfRangeError(QvnError, ValueError):
    """Temperature outside the tabulated anchors."""


def collision_rate(n_ions: float, pressure_mbar: float) -> float:
    """Background-gas collisions per second, linear in ion number and pressure."""
    if n_ions < 0 or pressure_mbar < 0:
        raise ValueError("inputs must be non-negative")
    return n_ions * ROOM_TEMP_COLLISIONS_PER_ION_S * (pressure_mbar / REFERENCE_PRESSURE_MBAR)


def sublimation_pressure(gas: str, temperature_K: float) -> float:
    """log P interpolated linearly in 1/T between the two anchor points."""
    key = {"h2": "H2", "he4": "He4", "4he": "He4", "he3": "He3", "3he": "He3"}.get(gas.lower())
    if key is None:
        raise ValueError(f"unknown gas {gas!r}")
    (t1, p1), (t2, p2) = SUBLIMATION_ANCHORS[key]
    if not t2 <= temperature_K <= t1:
        raise OutOfRangeError(f"{key}: {temperature_K} K outside tabulated [{t2}, {t1}] K")
    l1, l2 = math.log10(p1), math.log10(p2)
    frac = (1 / temperature_K - 1 / t1) / (1 / t2 - 1 / t1)
    return 10 ** (l1 + (l2 - l1) * frac)


# ---------------------------------------------------------------- optics

def beam_power_scaling(p_ref_W: float, w0_ref_m: float, w0_new_m: float) -> float:
    """Power for the same peak intensity with a different beam waist."""
    if not (p_ref_W > 0 and w0_ref_m > 0 and w0_new_m > 0):
        raise ValueError("inputs must be positive")
    return float(dec(p_ref_W) * (dec(w0_new_m) / dec(w0_ref_m)) ** 2)


# ---------------------------------------------------------------- trap capacitance

SIO2_EPS_R = 3.8


def plate_capacitance(area_m2: float, thickness_m: float, eps_r: float = SIO2_EPS_R) -> float:
    if not (area_m2 > 0 and thickness_m > 0 and eps_r > 0):
        raise ValueError("inputs must be positive")
    return epsilon_0 * eps_r * area_m2 / thickness_m


@dataclass(frozen=True)
class CapacitanceModel:
    C_shunt: float
    C_shunt_prime: float
    C_seg: float
    C_seg_prime: float
    eps_r: float = SIO2_EPS_R

    def __post_init__(self):
        if min(self.C_shunt, self.C_shunt_prime, self.C_seg, self.C_seg_prime) < 0:
            raise ValidationError("capacitances must be >= 0")

    @classmethod
    def old_geometry(cls, C_shunt: float, C_seg: float, eps_r: float = SIO2_EPS_R):
        """Standard planar trap: substrate paths scale the vacuum ones by eps_r."""
        return cls(C_shunt, eps_r * C_shunt, C_seg, eps_r * C_seg, eps_r)

    @classmethod
    def new_geometry(cls, C_shunt: float, C_seg: float, C_plate: float,
                     eps_r: float = SIO2_EPS_R):
        """Ground plane under each segment: the substrate path to the RF rail
        vanishes and the plate capacitor dominates the path to ground."""
        return cls(C_shunt, C_plate, C_seg, 0.0, eps_r)


def shunt_ratio(model: CapacitanceModel) -> float:
    """Fraction of the RF amplitude picked up by a DC segment."""
    return (model.C_seg + model.C_seg_prime) / (model.C_shunt + model.C_shunt_prime)
