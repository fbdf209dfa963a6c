"""Scenario configuration: surface geometry, link gains, mask spec, solver knobs.

A scenario is a frozen record loaded from JSON. Every field has a default, so
``load_scenario`` on an empty object ``{}`` yields the reference configuration
(48x48 half-wavelength surface at 3.5 GHz with a rectangular wide-coverage
mainlobe). Angles are stored in degrees and converted to radians only inside
numeric kernels; dB quantities are converted to linear scale once, via cached
properties.
"""

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass
from functools import cached_property

from .errors import ScenarioParseError, ScenarioValidationError
from .units import SPEED_OF_LIGHT, db2lin


@dataclass(frozen=True)
class AnglePair:
    """Azimuth/elevation direction in degrees (phi in [-180, 180], theta in [0, 180])."""

    phi_deg: float
    theta_deg: float

    def radians(self):
        return math.radians(self.phi_deg), math.radians(self.theta_deg)


@dataclass(frozen=True)
class MaskRegion:
    """Mainlobe region: rectangle or symmetric trapezoid in (phi, theta).

    ``phi_deg`` is the azimuth interval at ``theta_deg[0]``. A rectangle keeps
    it for every elevation; a trapezoid interpolates linearly toward
    ``phi_deg_top`` at ``theta_deg[1]``.
    """

    phi_deg: tuple
    theta_deg: tuple
    phi_deg_top: tuple = None  # None -> rectangle

    @property
    def kind(self):
        return "rect" if self.phi_deg_top is None else "trapezoid"

    def phi_interval_at(self, theta_deg):
        """Azimuth interval (lo, hi) of the region at a given elevation."""
        lo0, hi0 = self.phi_deg
        if self.phi_deg_top is None:
            return lo0, hi0
        t_lo, t_hi = self.theta_deg
        if t_hi == t_lo:
            return lo0, hi0
        frac = (theta_deg - t_lo) / (t_hi - t_lo)
        lo1, hi1 = self.phi_deg_top
        return lo0 + frac * (lo1 - lo0), hi0 + frac * (hi1 - hi0)

    def contains(self, phi_deg, theta_deg, tol=1e-9):
        t_lo, t_hi = self.theta_deg
        if not (t_lo - tol <= theta_deg <= t_hi + tol):
            return False
        lo, hi = self.phi_interval_at(min(max(theta_deg, t_lo), t_hi))
        return lo - tol <= phi_deg <= hi + tol


@dataclass(frozen=True)
class MaskShape:
    """Mainlobe level shape: flat top or parabolic taper.

    Parabolic weights follow d = 10^(-l_db * ((dphi/phi_3db)^2 +
    (dtheta/theta_3db)^2) / 10) around the boresight; flat top is d = 1.
    When boresight or the 3 dB widths are omitted they default to the center
    and half-extent of the mainlobe bounding box.
    """

    kind: str = "flat_top"  # "flat_top" | "parabolic"
    l_db: float = 3.0
    boresight: AnglePair = None
    phi_3db_deg: float = None
    theta_3db_deg: float = None


@dataclass(frozen=True)
class MaskSpec:
    """Mainlobe regions plus sampling parameters for the constraint grid."""

    mainlobe: tuple = (MaskRegion(phi_deg=(-15.0, 15.0), theta_deg=(110.0, 140.0)),)
    shape: MaskShape = MaskShape()
    sample_step_deg: float = 10.0
    gap_deg: float = 10.0


@dataclass(frozen=True)
class Scenario:
    """Complete problem description consumed by the optimizer and tools."""

    # surface geometry
    m_y: int = 48
    m_z: int = 48
    d_y_m: float = None  # None -> half wavelength
    d_z_m: float = None
    f_c_hz: float = 3.5e9

    # link gains (dB)
    g_t_db: float = 14.5
    g_db: float = 4.0

    # geometry of the link
    incident: AnglePair = AnglePair(-45.0, 144.0)
    reflect_phi_deg: tuple = (-90.0, 90.0)
    reflect_theta_deg: tuple = (90.0, 180.0)

    # shaping requirements
    delta_db: float = 10.0
    mask: MaskSpec = MaskSpec()

    # solver knobs
    sigma: float = 20.0
    xi: float = 0.001
    zeta: int = 10
    max_sca_iters: int = 50
    residual_tol: float = 1e-6
    rank_ratio_tol: float = 1e-3
    admm_max_iters: int = 20000
    objective_mode: str = "db"  # "db" | "linear"
    joint_size_limit: int = 256

    # optional link distances (m), used only for link-budget reporting
    d1_m: float = None
    d2_m: float = None

    @cached_property
    def wavelength_m(self):
        return SPEED_OF_LIGHT / self.f_c_hz

    @cached_property
    def spacing_m(self):
        """Element spacings (d_y, d_z) with the half-wavelength default applied."""
        half = 0.5 * self.wavelength_m
        d_y = half if self.d_y_m is None else self.d_y_m
        d_z = half if self.d_z_m is None else self.d_z_m
        return d_y, d_z

    @cached_property
    def m_total(self):
        return self.m_y * self.m_z

    @cached_property
    def g_t_linear(self):
        return float(db2lin(self.g_t_db))

    @cached_property
    def g_linear(self):
        return float(db2lin(self.g_db))

    @cached_property
    def delta_linear(self):
        return float(db2lin(self.delta_db))


@dataclass(frozen=True)
class Violation:
    """One validation failure, naming the offending field."""

    field: str
    message: str


_ANGLE_FIELDS = {"incident_phi_deg", "incident_theta_deg"}
_SCALAR_FIELDS = {
    "m_y", "m_z", "d_y_m", "d_z_m", "f_c_hz", "g_t_db", "g_db",
    "delta_db", "sigma", "xi", "zeta", "max_sca_iters", "residual_tol",
    "rank_ratio_tol", "admm_max_iters", "objective_mode", "joint_size_limit",
    "d1_m", "d2_m",
}
_RANGE_FIELDS = {"reflect_phi_deg", "reflect_theta_deg"}
_KNOWN_KEYS = _ANGLE_FIELDS | _SCALAR_FIELDS | _RANGE_FIELDS | {"mask"}
_KNOWN_MASK_KEYS = {"mainlobe_regions", "shape", "sample_step_deg", "gap_deg"}
_KNOWN_REGION_KEYS = {"kind", "phi_deg", "theta_deg", "phi_deg_top"}
_KNOWN_SHAPE_KEYS = {"kind", "l_db", "boresight", "phi_3db_deg", "theta_3db_deg"}


def _pair(value, field, errors):
    try:
        lo, hi = float(value[0]), float(value[1])
        return (lo, hi)
    except (TypeError, ValueError, IndexError, KeyError):
        errors.append(Violation(field, f"expected a [lo, hi] pair, got {value!r}"))
        return None


def _region_from_dict(obj, field, errors):
    unknown = set(obj) - _KNOWN_REGION_KEYS
    for key in sorted(unknown):
        errors.append(Violation(f"{field}.{key}", "unknown key"))
    kind = obj.get("kind", "rect")
    phi = _pair(obj.get("phi_deg", (-15.0, 15.0)), f"{field}.phi_deg", errors)
    theta = _pair(obj.get("theta_deg", (110.0, 140.0)), f"{field}.theta_deg", errors)
    phi_top = None
    if kind == "trapezoid":
        phi_top = _pair(obj.get("phi_deg_top", phi), f"{field}.phi_deg_top", errors)
    elif kind != "rect":
        errors.append(Violation(f"{field}.kind", f"unknown region kind {kind!r}"))
    if phi is None or theta is None:
        return None
    return MaskRegion(phi_deg=phi, theta_deg=theta, phi_deg_top=phi_top)


def _shape_from_dict(obj, errors):
    unknown = set(obj) - _KNOWN_SHAPE_KEYS
    for key in sorted(unknown):
        errors.append(Violation(f"mask.shape.{key}", "unknown key"))
    kind = obj.get("kind", "flat_top")
    boresight = None
    if obj.get("boresight") is not None:
        pair = _pair(obj["boresight"], "mask.shape.boresight", errors)
        if pair is not None:
            boresight = AnglePair(pair[0], pair[1])
    return MaskShape(
        kind=kind,
        l_db=float(obj.get("l_db", 3.0)),
        boresight=boresight,
        phi_3db_deg=None if obj.get("phi_3db_deg") is None else float(obj["phi_3db_deg"]),
        theta_3db_deg=None if obj.get("theta_3db_deg") is None else float(obj["theta_3db_deg"]),
    )


def _mask_from_dict(obj, errors):
    unknown = set(obj) - _KNOWN_MASK_KEYS
    for key in sorted(unknown):
        errors.append(Violation(f"mask.{key}", "unknown key"))
    regions = []
    raw_regions = obj.get("mainlobe_regions")
    if raw_regions is None:
        regions = list(MaskSpec().mainlobe)
    else:
        if not isinstance(raw_regions, list) or not raw_regions:
            errors.append(Violation("mask.mainlobe_regions", "expected a non-empty list"))
        else:
            for i, robj in enumerate(raw_regions):
                region = _region_from_dict(robj, f"mask.mainlobe_regions[{i}]", errors)
                if region is not None:
                    regions.append(region)
    shape = _shape_from_dict(obj.get("shape", {}), errors)
    return MaskSpec(
        mainlobe=tuple(regions),
        shape=shape,
        sample_step_deg=float(obj.get("sample_step_deg", 10.0)),
        gap_deg=float(obj.get("gap_deg", 10.0)),
    )


def from_dict(obj):
    """Build a Scenario from a JSON-style dict, applying defaults, then validate.

    Raises ScenarioValidationError listing every violation; unknown keys are
    violations too, so typos fail loudly instead of silently using defaults.
    """
    if not isinstance(obj, dict):
        raise ScenarioParseError(f"scenario root must be an object, got {type(obj).__name__}")
    errors = []
    unknown = set(obj) - _KNOWN_KEYS
    for key in sorted(unknown):
        errors.append(Violation(key, "unknown key"))

    defaults = Scenario()
    kwargs = {}
    for key in ("d_y_m", "d_z_m", "d1_m", "d2_m"):
        if obj.get(key) is not None:
            kwargs[key] = float(obj[key])
    for key in ("f_c_hz", "g_t_db", "g_db", "delta_db", "sigma", "xi",
                "residual_tol", "rank_ratio_tol"):
        if key in obj:
            kwargs[key] = float(obj[key])
    for key in ("m_y", "m_z", "zeta", "max_sca_iters", "admm_max_iters",
                "joint_size_limit"):
        if key in obj:
            try:
                kwargs[key] = int(obj[key])
            except (TypeError, ValueError):
                errors.append(Violation(key, f"expected an integer, got {obj[key]!r}"))
    if "objective_mode" in obj:
        kwargs["objective_mode"] = str(obj["objective_mode"])
    if "incident_phi_deg" in obj or "incident_theta_deg" in obj:
        kwargs["incident"] = AnglePair(
            float(obj.get("incident_phi_deg", defaults.incident.phi_deg)),
            float(obj.get("incident_theta_deg", defaults.incident.theta_deg)),
        )
    for key in _RANGE_FIELDS:
        if key in obj:
            pair = _pair(obj[key], key, errors)
            if pair is not None:
                kwargs[key] = pair
    if "mask" in obj:
        if not isinstance(obj["mask"], dict):
            errors.append(Violation("mask", "expected an object"))
        else:
            kwargs["mask"] = _mask_from_dict(obj["mask"], errors)

    if errors:
        raise ScenarioValidationError(errors)
    scn = Scenario(**kwargs)
    violations = validate(scn)
    if violations:
        raise ScenarioValidationError(violations)
    return scn


def load_scenario(path):
    """Load and validate a scenario JSON file. ``{}`` yields the full default."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
    except OSError as exc:
        raise ScenarioParseError(f"cannot read scenario file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ScenarioParseError(f"scenario file {path} is not valid JSON: {exc}") from exc
    return from_dict(obj)


def _check_angle(out, field, phi_deg, theta_deg):
    if not (-180.0 <= phi_deg <= 180.0):
        out.append(Violation(field, f"phi {phi_deg} outside [-180, 180] deg"))
    if not (0.0 <= theta_deg <= 180.0):
        out.append(Violation(field, f"theta {theta_deg} outside [0, 180] deg"))


def validate(scn):
    """Return every constraint violation in the scenario (empty list if valid)."""
    out = []
    if scn.m_y < 1 or scn.m_z < 1:
        out.append(Violation("m_y/m_z", "element counts must be >= 1"))
    if not (math.isfinite(scn.f_c_hz) and scn.f_c_hz > 0):
        out.append(Violation("f_c_hz", "carrier frequency must be positive"))
    else:
        d_y, d_z = scn.spacing_m
        if d_y <= 0 or d_z <= 0:
            out.append(Violation("d_y_m/d_z_m", "element spacings must be positive"))
    for field in ("g_t_db", "g_db", "delta_db", "sigma", "xi",
                  "residual_tol", "rank_ratio_tol"):
        if not math.isfinite(getattr(scn, field)):
            out.append(Violation(field, "must be finite"))
    if scn.delta_db < 0:
        out.append(Violation("delta_db", "sidelobe suppression must be >= 0 dB"))
    if scn.sigma <= 0:
        out.append(Violation("sigma", "penalty weight must be positive"))
    if scn.xi <= 0:
        out.append(Violation("xi", "convergence threshold must be positive"))
    if scn.zeta < 1:
        out.append(Violation("zeta", "alternating rounds must be >= 1"))
    if scn.max_sca_iters < 1:
        out.append(Violation("max_sca_iters", "must be >= 1"))
    if scn.residual_tol <= 0:
        out.append(Violation("residual_tol", "must be positive"))
    if scn.rank_ratio_tol <= 0:
        out.append(Violation("rank_ratio_tol", "must be positive"))
    if scn.admm_max_iters < 1:
        out.append(Violation("admm_max_iters", "must be >= 1"))
    if scn.objective_mode not in ("db", "linear"):
        out.append(Violation("objective_mode", f"unknown mode {scn.objective_mode!r}"))
    if scn.joint_size_limit < 1:
        out.append(Violation("joint_size_limit", "must be >= 1"))
    for field in ("d1_m", "d2_m"):
        value = getattr(scn, field)
        if value is not None and value <= 0:
            out.append(Violation(field, "link distance must be positive"))

    _check_angle(out, "incident", scn.incident.phi_deg, scn.incident.theta_deg)
    phi_i, theta_i = scn.incident.radians()
    if math.sin(theta_i) * math.cos(phi_i) <= 1e-12:
        out.append(Violation("incident", "incident direction is outside the element pattern support"))

    for field, bounds in (("reflect_phi_deg", (-180.0, 180.0)),
                          ("reflect_theta_deg", (0.0, 180.0))):
        lo, hi = getattr(scn, field)
        if lo >= hi:
            out.append(Violation(field, f"range [{lo}, {hi}] is empty"))
        if lo < bounds[0] or hi > bounds[1]:
            out.append(Violation(field, f"range [{lo}, {hi}] outside {list(bounds)} deg"))

    mask = scn.mask
    if not mask.mainlobe:
        out.append(Violation("mask.mainlobe_regions", "at least one mainlobe region required"))
    if mask.sample_step_deg <= 0:
        out.append(Violation("mask.sample_step_deg", "must be positive"))
    if mask.gap_deg < 0:
        out.append(Violation("mask.gap_deg", "must be >= 0"))
    if mask.shape.kind not in ("flat_top", "parabolic"):
        out.append(Violation("mask.shape.kind", f"unknown shape {mask.shape.kind!r}"))
    if mask.shape.kind == "parabolic":
        if mask.shape.l_db <= 0:
            out.append(Violation("mask.shape.l_db", "taper depth must be positive"))
        for field in ("phi_3db_deg", "theta_3db_deg"):
            value = getattr(mask.shape, field)
            if value is not None and value <= 0:
                out.append(Violation(f"mask.shape.{field}", "3 dB width must be positive"))

    phi_rng = scn.reflect_phi_deg
    theta_rng = scn.reflect_theta_deg
    for i, region in enumerate(mask.mainlobe):
        field = f"mask.mainlobe_regions[{i}]"
        for name, pair in (("phi_deg", region.phi_deg), ("theta_deg", region.theta_deg)):
            if pair[0] > pair[1]:
                out.append(Violation(f"{field}.{name}", f"interval {list(pair)} is reversed"))
        if region.phi_deg_top is not None and region.phi_deg_top[0] > region.phi_deg_top[1]:
            out.append(Violation(f"{field}.phi_deg_top", f"interval {list(region.phi_deg_top)} is reversed"))
        phis = [region.phi_deg]
        if region.phi_deg_top is not None:
            phis.append(region.phi_deg_top)
        lo = min(p[0] for p in phis)
        hi = max(p[1] for p in phis)
        if lo < phi_rng[0] or hi > phi_rng[1]:
            out.append(Violation(field, "azimuth extent leaves the reflect range"))
        if region.theta_deg[0] < theta_rng[0] or region.theta_deg[1] > theta_rng[1]:
            out.append(Violation(field, "elevation extent leaves the reflect range"))
    return out


def to_dict(scn):
    """Canonical JSON-ready dict (inverse of from_dict, defaults included)."""
    mask = scn.mask
    regions = []
    for region in mask.mainlobe:
        obj = {"kind": region.kind,
               "phi_deg": list(region.phi_deg),
               "theta_deg": list(region.theta_deg)}
        if region.phi_deg_top is not None:
            obj["phi_deg_top"] = list(region.phi_deg_top)
        regions.append(obj)
    shape = {"kind": mask.shape.kind, "l_db": mask.shape.l_db,
             "boresight": None if mask.shape.boresight is None else
             [mask.shape.boresight.phi_deg, mask.shape.boresight.theta_deg],
             "phi_3db_deg": mask.shape.phi_3db_deg,
             "theta_3db_deg": mask.shape.theta_3db_deg}
    return {
        "m_y": scn.m_y, "m_z": scn.m_z,
        "d_y_m": scn.d_y_m, "d_z_m": scn.d_z_m,
        "f_c_hz": scn.f_c_hz,
        "g_t_db": scn.g_t_db, "g_db": scn.g_db,
        "incident_phi_deg": scn.incident.phi_deg,
        "incident_theta_deg": scn.incident.theta_deg,
        "reflect_phi_deg": list(scn.reflect_phi_deg),
        "reflect_theta_deg": list(scn.reflect_theta_deg),
        "delta_db": scn.delta_db,
        "mask": {"mainlobe_regions": regions, "shape": shape,
                 "sample_step_deg": mask.sample_step_deg, "gap_deg": mask.gap_deg},
        "sigma": scn.sigma, "xi": scn.xi, "zeta": scn.zeta,
        "max_sca_iters": scn.max_sca_iters,
        "residual_tol": scn.residual_tol,
        "rank_ratio_tol": scn.rank_ratio_tol,
        "admm_max_iters": scn.admm_max_iters,
        "objective_mode": scn.objective_mode,
        "joint_size_limit": scn.joint_size_limit,
        "d1_m": scn.d1_m, "d2_m": scn.d2_m,
    }


def digest(scn):
    """Stable hash of the resolved scenario, recorded in solution files."""
    payload = json.dumps(to_dict(scn), sort_keys=True).encode()
    return hashlib.sha256(payload).hexdigest()[:16]


def replace(scn, **changes):
    """dataclasses.replace wrapper that re-validates the result."""
    new = dataclasses.replace(scn, **changes)
    violations = validate(new)
    if violations:
        raise ScenarioValidationError(violations)
    return new
