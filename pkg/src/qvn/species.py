"""Ion species database and (qubit, detection, cooling) triple selection."""

from __future__ import annotations

import json
from dataclasses import dataclass, fields
from functools import lru_cache
from typing import Iterable, Optional

from .core import data_path
from .errors import EmptyResult, ValidationError

HC_EV_NM = 1239.84


@dataclass(frozen=True)
class SpeciesRecord:
    name: str
    element: str
    mass_amu: float
    nuclear_spin_I: float
    omega0_GHz: float
    lambda_half_nm: float
    gamma_half_MHz: float
    lambda_threehalf_nm: float
    lambda_fivehalf_nm: float = 0.0
    tau_fivehalf_s: float = 0.0
    source: str = "table"

    def __post_init__(self):
        if self.lambda_half_nm <= 0 or self.lambda_threehalf_nm <= 0:
            raise ValidationError(f"{self.name}: wavelengths must be > 0")
        if self.lambda_fivehalf_nm < 0 or self.tau_fivehalf_s < 0:
            raise ValidationError(f"{self.name}: D5/2 data must be >= 0")

    @property
    def has_d52(self) -> bool:
        return self.lambda_fivehalf_nm > 0 and self.tau_fivehalf_s > 0

    @property
    def label(self) -> str:
        return f"{int(self.mass_amu)}{self.element}+"


@dataclass(frozen=True)
class SurfaceMaterial:
    name: str
    work_function_eV: float
    cutoff_wavelength_nm: float

    def __post_init__(self):
        if abs(HC_EV_NM / self.work_function_eV - self.cutoff_wavelength_nm) > 1.0:
            raise ValidationError(f"{self.name}: cutoff inconsistent with work function")


@dataclass(frozen=True)
class SpeciesDB:
    species: tuple[SpeciesRecord, ...]
    surfaces: dict

    def get(self, name: str) -> SpeciesRecord:
        for s in self.species:
            if s.name == name:
                return s
        raise KeyError(name)

    def surface(self, name) -> SurfaceMaterial:
        if isinstance(name, SurfaceMaterial):
            return name
        try:
            return self.surfaces[name.lower()]
        except KeyError:
            raise ValidationError(f"unknown surface material {name!r}") from None


def db_from_dict(data: dict) -> SpeciesDB:
    names = {f.name for f in fields(SpeciesRecord)}
    try:
        recs = tuple(SpeciesRecord(**{k: v for k, v in row.items() if k in names})
                     for row in data["species"])
        surfaces = {s["name"]: SurfaceMaterial(s["name"], float(s["work_function_eV"]),
                                               float(s["cutoff_wavelength_nm"]))
                    for s in data["surfaces"]}
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"species database: {exc!r}") from None
    return SpeciesDB(recs, surfaces)


@lru_cache(maxsize=None)
def _load(path: str) -> SpeciesDB:
    with open(path, encoding="utf-8") as fh:
        return db_from_dict(json.load(fh))


def load_db(path=None) -> SpeciesDB:
    return _load(str(path or data_path("species.json")))


def allowed_species(material, db: Optional[SpeciesDB] = None) -> list[SpeciesRecord]:
    """Species whose S-P driving wavelengths all lie at or above the cutoff."""
    db = db or load_db()
    if isinstance(material, (int, float)):
        cutoff = float(material)
    else:
        cutoff = db.surface(material).cutoff_wavelength_nm
    return [s for s in db.species
            if s.lambda_half_nm >= cutoff and s.lambda_threehalf_nm >= cutoff]


@dataclass(frozen=True)
class TripleOptions:
    """Selection refinements on top of the plain spin/D-state/mass-ratio filter.

    reserve_detection_element: the element with the longest-lived D5/2 state
        is kept for detection only.
    best_detection_only: per (qubit, cooling) pair keep only the detection
        species with the longest D5/2 lifetime.
    spin_fallback_cooling: an element with no spin-0 isotope may still cool.
    distinct_elements: the three roles use three different elements.
    """

    reserve_detection_element: bool = True
    best_detection_only: bool = True
    spin_fallback_cooling: bool = True
    distinct_elements: bool = True


PLAIN_FILTER = TripleOptions(False, False, False, True)


@dataclass(frozen=True)
class Triple:
    qubit: SpeciesRecord
    detection: SpeciesRecord
    cooling: SpeciesRecord

    def names(self) -> tuple[str, str, str]:
        return (self.qubit.name, self.detection.name, self.cooling.name)

    def to_dict(self) -> dict:
        return {"qubit": self.qubit.name, "detection": self.detection.name,
                "cooling": self.cooling.name,
                "detection_tau_s": self.detection.tau_fivehalf_s,
                "ratio_qubit_cooling": mass_ratio(self.qubit, self.cooling),
                "ratio_qubit_detection": mass_ratio(self.qubit, self.detection)}


def mass_ratio(a: SpeciesRecord, b: SpeciesRecord) -> float:
    return a.mass_amu / b.mass_amu


def within_ratio(a: SpeciesRecord, b: SpeciesRecord, max_ratio: float) -> bool:
    r = mass_ratio(a, b)
    return 1 / max_ratio <= r <= max_ratio


def enumerate_triples(material, max_mass_ratio: float,
                      options: TripleOptions = TripleOptions(),
                      db: Optional[SpeciesDB] = None) -> list[Triple]:
    if not max_mass_ratio >= 1:
        raise ValueError("max_mass_ratio must be >= 1")
    db = db or load_db()
    pool = allowed_species(material, db)
    spin0_elements = {s.element for s in db.species if s.nuclear_spin_I == 0}

    reserved = None
    if options.reserve_detection_element:
        with_d = [s for s in pool if s.has_d52]
        if with_d:
            reserved = max(with_d, key=lambda s: s.tau_fivehalf_s).element

    qubits = [s for s in pool if s.nuclear_spin_I != 0 and s.element != reserved]
    detections = [s for s in pool if s.nuclear_spin_I == 0 and s.has_d52]
    coolers = [s for s in pool if s.element != reserved and (
        s.nuclear_spin_I == 0
        or (options.spin_fallback_cooling and s.element not in spin0_elements))]

    out = []
    for q in qubits:
        for c in coolers:
            if (options.distinct_elements and c.element == q.element) or c is q:
                continue
            if not within_ratio(q, c, max_mass_ratio):
                continue
            dets = [d for d in detections
                    if within_ratio(q, d, max_mass_ratio)
                    and not (options.distinct_elements and d.element in (q.element, c.element))]
            if options.best_detection_only and dets:
                best = max(d.tau_fivehalf_s for d in dets)
                dets = [d for d in dets if d.tau_fivehalf_s == best]
            out.extend(Triple(q, d, c) for d in dets)
    if not out:
        raise EmptyResult(f"no triple for {material} at mass ratio {max_mass_ratio}")
    out.sort(key=lambda t: (-t.detection.tau_fivehalf_s, t.qubit.mass_amu,
                            t.cooling.mass_amu, t.detection.mass_amu))
    return out


def audit_triple(t: Triple, max_mass_ratio: float) -> list[str]:
    """Re-check the pair constraints of a triple; returns the violations."""
    bad = []
    if t.qubit.nuclear_spin_I == 0:
        bad.append("qubit has no hyperfine structure")
    if t.detection.nuclear_spin_I != 0 or not t.detection.has_d52:
        bad.append("detection species lacks a spin-0 D5/2 level")
    for other, role in ((t.cooling, "cooling"), (t.detection, "detection")):
        if not within_ratio(t.qubit, other, max_mass_ratio):
            bad.append(f"qubit/{role} mass ratio {mass_ratio(t.qubit, other):.3f}")
    return bad


def be_exclusion_check(material="aluminum", max_mass_ratio: float = 3.0,
                       options: TripleOptions = TripleOptions(),
                       db: Optional[SpeciesDB] = None) -> bool:
    """True iff no triple uses beryllium in any role."""
    try:
        triples = enumerate_triples(material, max_mass_ratio, options, db)
    except EmptyResult:
        return True
    return not any("Be" in (t.qubit.element, t.detection.element, t.cooling.element)
                   for t in triples)


def triple_names(triples: Iterable[Triple]) -> list[tuple[str, str, str]]:
    return [t.names() for t in triples]
