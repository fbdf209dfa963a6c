"""Phase quantization and the divide-and-assemble manufacturing map.

A b-bit surface restricts every element phase to the grid {2 pi k / 2^b}.
Instead of manufacturing 2^b distinct element patterns, a small catalog of
base patterns is reused through cheap geometric transforms: mirroring a
pattern shifts its phase by 180 degrees, rotating it by 90 degrees shifts 90
degrees. With the default mirror-only transform set a b-bit grid needs
2^b / 2 base patterns (b = 2: two bases at 0 and 90 degrees); enabling
rotation as well cuts that to 2^b / 4. ``assemble`` turns a quantized
solution into a per-element (base pattern, transform) grid plus a bill of
materials.
"""

import json
from dataclasses import dataclass

import numpy as np

from .masks import build_samples
from .optimizer import BeamSolution, achieved_levels
from .scenario import digest
from .units import lin2db

TRANSFORM_SETS = {
    "mirror": ("identity", "mirror"),
    "mirror_rotation": ("identity", "rotate90", "mirror", "mirror_rotate90"),
}


@dataclass(frozen=True)
class PatternCatalog:
    """Base patterns plus the transform set that expands them to the full grid.

    Transform t applies a phase offset of t * 2 pi / len(transforms); base j
    carries phase j * 2 pi / 2^bits. Grid index k maps to (pattern, transform)
    = (k mod base_count, k div base_count), an exact bijection.
    """

    bits: int
    transforms: tuple
    base_phases_rad: tuple

    @property
    def base_count(self):
        return len(self.base_phases_rad)

    def phase_of(self, pattern, transform):
        return (self.base_phases_rad[pattern]
                + transform * 2.0 * np.pi / len(self.transforms))


@dataclass(frozen=True)
class QuantizedSolution:
    """Element phases snapped to the b-bit grid, with the achieved margin."""

    bits: int
    k_indices: np.ndarray  # shape (m_y*m_z,), ints in [0, 2^bits)
    phases: np.ndarray  # k * 2 pi / 2^bits
    rho_db: float
    m_y: int
    m_z: int
    parent_method: str
    parent_rho_db: float
    scenario_digest: str


@dataclass(frozen=True)
class AssemblyMap:
    """Per-element manufacturing instructions for a quantized surface."""

    catalog: PatternCatalog
    pattern: np.ndarray  # (m_y, m_z) base-pattern indices
    transform: np.ndarray  # (m_y, m_z) transform indices
    bom: tuple  # per-base-pattern element counts


def quantize(scn, sol, bits):
    """Snap a solution's phases to the b-bit grid and recompute the margin.

    Rounds to the nearest grid point with ties going to the lower index.
    Per-axis factors do not survive (the sum of separately quantized factors
    is not the quantized sum), so the result is a plain element-phase grid.
    """
    if not 1 <= bits <= 8:
        raise ValueError(f"bits must be in [1, 8], got {bits}")
    levels = 2 ** bits
    step = 2.0 * np.pi / levels
    x = np.mod(np.asarray(sol.phases, dtype=float), 2.0 * np.pi) / step
    k = np.ceil(x - 0.5).astype(int) % levels
    phases = k * step
    samples = build_samples(scn)
    rho, _, _ = achieved_levels(scn, samples, np.exp(1j * phases))
    return QuantizedSolution(
        bits=bits, k_indices=k, phases=phases, rho_db=lin2db(rho),
        m_y=sol.m_y, m_z=sol.m_z, parent_method=sol.method,
        parent_rho_db=sol.rho_db, scenario_digest=digest(scn))


def to_beam_solution(q):
    """View a quantized solution through the common solution record."""
    return BeamSolution(
        method=f"{q.parent_method}+q{q.bits}", m_y=q.m_y, m_z=q.m_z,
        phases=q.phases, rho_db=q.rho_db, scenario_digest=q.scenario_digest,
        traces={"bits": q.bits, "k_indices": [int(v) for v in q.k_indices],
                "parent_method": q.parent_method,
                "parent_rho_db": q.parent_rho_db})


def from_beam_solution(sol):
    """Recover a QuantizedSolution from a solution record with on-grid phases."""
    traces = sol.traces or {}
    if "bits" not in traces:
        raise ValueError("solution was not produced by quantize (no bits recorded)")
    bits = int(traces["bits"])
    levels = 2 ** bits
    step = 2.0 * np.pi / levels
    k = np.rint(sol.phases / step).astype(int)
    if np.max(np.abs(sol.phases - k * step)) > 1e-9:
        raise ValueError("solution phases are not on the quantization grid")
    return QuantizedSolution(
        bits=bits, k_indices=k % levels, phases=(k % levels) * step,
        rho_db=sol.rho_db, m_y=sol.m_y, m_z=sol.m_z,
        parent_method=str(traces.get("parent_method", sol.method)),
        parent_rho_db=float(traces.get("parent_rho_db", sol.rho_db)),
        scenario_digest=sol.scenario_digest)


def build_catalog(bits, transform_set="mirror"):
    """Catalog of base patterns covering the b-bit grid under a transform set.

    The transform offsets tile the circle evenly, so the grid splits into
    2^bits / len(transforms) cosets; each coset is one base pattern. Every
    grid phase is reachable exactly once (tested invariant).
    """
    if not 1 <= bits <= 8:
        raise ValueError(f"bits must be in [1, 8], got {bits}")
    if transform_set not in TRANSFORM_SETS:
        raise ValueError(
            f"unknown transform set {transform_set!r}; "
            f"choose from {sorted(TRANSFORM_SETS)}")
    transforms = TRANSFORM_SETS[transform_set]
    levels = 2 ** bits
    if levels % len(transforms):
        raise ValueError(
            f"{len(transforms)} transforms cannot tile {levels} phase levels")
    base_count = levels // len(transforms)
    step = 2.0 * np.pi / levels
    return PatternCatalog(bits=bits, transforms=transforms,
                          base_phases_rad=tuple(j * step for j in range(base_count)))


def assemble(q, catalog=None):
    """Map a quantized solution onto (base pattern, transform) per element.

    Element (iy, iz) sits at flat index iy*m_z + iz; grid index k becomes
    pattern k mod base_count and transform k div base_count. The bill of
    materials counts elements per base pattern and always sums to m_y*m_z.
    """
    catalog = catalog or build_catalog(q.bits)
    if catalog.bits != q.bits:
        raise ValueError(
            f"catalog is {catalog.bits}-bit but the solution is {q.bits}-bit")
    k = q.k_indices.reshape(q.m_y, q.m_z)
    pattern = k % catalog.base_count
    transform = k // catalog.base_count
    bom = tuple(int(np.sum(pattern == j)) for j in range(catalog.base_count))
    return AssemblyMap(catalog=catalog, pattern=pattern, transform=transform,
                       bom=bom)


def reconstruct_phases(asm):
    """Element phases implied by an assembly map (exact round trip)."""
    step = 2.0 * np.pi / 2 ** asm.catalog.bits
    k = asm.pattern + asm.transform * asm.catalog.base_count
    return (k * step).ravel()


def write_assembly_json(asm, path):
    """Manufacturing file: catalog plus per-element grids (row-major, y outer)."""
    payload = {
        "format": "irsbeam-assembly-v1",
        "bits": asm.catalog.bits,
        "transforms": list(asm.catalog.transforms),
        "base_phases_deg": [float(np.degrees(p)) for p in asm.catalog.base_phases_rad],
        "m_y": int(asm.pattern.shape[0]),
        "m_z": int(asm.pattern.shape[1]),
        "pattern": asm.pattern.tolist(),
        "transform": asm.transform.tolist(),
        "bill_of_materials": {f"P{j}": count for j, count in enumerate(asm.bom)},
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=1)


def write_bom_csv(asm, path):
    """Bill of materials: pattern_id,base_phase_deg,count."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("pattern_id,base_phase_deg,count\n")
        for j, count in enumerate(asm.bom):
            phase_deg = float(np.degrees(asm.catalog.base_phases_rad[j]))
            fh.write(f"P{j},{phase_deg!r},{count}\n")
