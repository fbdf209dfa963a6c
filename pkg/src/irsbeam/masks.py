"""Constraint sampling: mainlobe/sidelobe grids and mainlobe level weights.

Builds the discrete angle sets the optimizer constrains: mainlobe samples P
(with per-sample level weights) on a grid anchored at each region's lower
bounds, and sidelobe samples Q on a grid anchored at the reflect-range lower
bounds, minus a gap-dilated copy of the mainlobe and minus directions outside
the element pattern support. Sample generation is deterministic: identical
specs give byte-identical sample lists.
"""

import warnings
from dataclasses import dataclass

from .channel import erp
from .errors import InternalInvariantError
from .scenario import AnglePair, MaskRegion, MaskShape, MaskSpec, Violation

__all__ = [
    "MaskRegion", "MaskShape", "MaskSpec", "MaskSamples",
    "build_samples", "shape_weight", "check_samples", "samples_to_csv",
]

_TOL = 1e-9


@dataclass(frozen=True)
class MaskSamples:
    """Discrete constraint sets: weighted mainlobe P, sidelobe Q.

    ``dropped`` records sidelobe grid points discarded because the element
    pattern is zero there (they cannot constrain anything).
    """

    mainlobe: tuple  # ((AnglePair, weight), ...)
    sidelobe: tuple  # (AnglePair, ...)
    dropped: tuple = ()


def _grid(lo, hi, step):
    """Inclusive grid lo, lo+step, ... anchored at lo; hi kept when on-grid."""
    count = int((hi - lo) / step + _TOL) + 1
    return [lo + k * step for k in range(count)]


def _region_distance(region, phi_deg, theta_deg):
    """Axis-aligned (dphi, dtheta) distance from a point to a region.

    Elevation is clamped into the region's range before reading the azimuth
    interval, which makes the dilation test exact for trapezoids too.
    """
    t_lo, t_hi = region.theta_deg
    d_theta = max(t_lo - theta_deg, theta_deg - t_hi, 0.0)
    lo, hi = region.phi_interval_at(min(max(theta_deg, t_lo), t_hi))
    d_phi = max(lo - phi_deg, phi_deg - hi, 0.0)
    return d_phi, d_theta


def _in_dilated(region, phi_deg, theta_deg, gap_deg):
    d_phi, d_theta = _region_distance(region, phi_deg, theta_deg)
    return d_phi <= gap_deg + _TOL and d_theta <= gap_deg + _TOL


def _mainlobe_bbox(mask):
    phis = []
    thetas = []
    for region in mask.mainlobe:
        phis.extend(region.phi_deg)
        if region.phi_deg_top is not None:
            phis.extend(region.phi_deg_top)
        thetas.extend(region.theta_deg)
    return (min(phis), max(phis)), (min(thetas), max(thetas))


def shape_weight(mask, angle):
    """Mainlobe level weight d at an angle inside the mainlobe.

    Flat top returns 1. The parabolic taper returns
    10^(-l_db ((dphi/phi_3db)^2 + (dtheta/theta_3db)^2) / 10) around the
    boresight, defaulting the boresight to the mainlobe bounding-box center
    and each 3 dB width to the box half-extent on that axis.

    Raises ValueError when the angle lies outside every mainlobe region.
    """
    if not any(r.contains(angle.phi_deg, angle.theta_deg, _TOL) for r in mask.mainlobe):
        raise ValueError(
            f"angle ({angle.phi_deg}, {angle.theta_deg}) deg is outside the mainlobe")
    shape = mask.shape
    if shape.kind == "flat_top":
        return 1.0
    if shape.kind != "parabolic":
        raise ValueError(f"unknown mask shape {shape.kind!r}")
    (phi_lo, phi_hi), (theta_lo, theta_hi) = _mainlobe_bbox(mask)
    if shape.boresight is not None:
        phi_0, theta_0 = shape.boresight.phi_deg, shape.boresight.theta_deg
    else:
        phi_0 = 0.5 * (phi_lo + phi_hi)
        theta_0 = 0.5 * (theta_lo + theta_hi)
    phi_w = shape.phi_3db_deg if shape.phi_3db_deg is not None else 0.5 * (phi_hi - phi_lo)
    theta_w = shape.theta_3db_deg if shape.theta_3db_deg is not None else 0.5 * (theta_hi - theta_lo)
    if phi_w <= 0 or theta_w <= 0:
        raise ValueError("parabolic taper needs positive 3 dB widths")
    quad = (((angle.phi_deg - phi_0) / phi_w) ** 2
            + ((angle.theta_deg - theta_0) / theta_w) ** 2)
    return float(10.0 ** (-shape.l_db * quad / 10.0))


def build_samples(scn):
    """Sample the scenario's mask into explicit mainlobe/sidelobe sets.

    Mainlobe grids are anchored at each region's lower bounds; duplicate
    angles from overlapping regions appear once. The sidelobe grid covers the
    reflect ranges, excluding points within ``gap_deg`` (Chebyshev, closed) of
    any mainlobe region and dropping points where the element pattern
    vanishes (warned, recorded in ``dropped``).
    """
    mask = scn.mask
    step = mask.sample_step_deg

    mainlobe = []
    seen = set()
    for region in mask.mainlobe:
        for theta in _grid(region.theta_deg[0], region.theta_deg[1], step):
            lo, hi = region.phi_interval_at(theta)
            for phi in _grid(lo, hi, step):
                key = (round(phi, 9), round(theta, 9))
                if key in seen:
                    continue
                seen.add(key)
                angle = AnglePair(phi, theta)
                mainlobe.append((angle, shape_weight(mask, angle)))

    sidelobe = []
    dropped = []
    for theta in _grid(scn.reflect_theta_deg[0], scn.reflect_theta_deg[1], step):
        for phi in _grid(scn.reflect_phi_deg[0], scn.reflect_phi_deg[1], step):
            if any(_in_dilated(r, phi, theta, mask.gap_deg) for r in mask.mainlobe):
                continue
            angle = AnglePair(phi, theta)
            if erp(angle, scn.g_linear) == 0.0:
                dropped.append(angle)
                continue
            sidelobe.append(angle)
    if dropped:
        warnings.warn(
            f"dropped {len(dropped)} sidelobe samples outside the element pattern support",
            stacklevel=2)
    if not sidelobe:
        warnings.warn("sidelobe sample set is empty; only mainlobe constraints apply",
                      stacklevel=2)

    samples = MaskSamples(mainlobe=tuple(mainlobe), sidelobe=tuple(sidelobe),
                          dropped=tuple(dropped))
    violations = check_samples(samples, scn)
    if violations:
        raise InternalInvariantError(
            "; ".join(f"{v.field}: {v.message}" for v in violations))
    return samples


def check_samples(samples, scn):
    """Cross-check an explicit sample set against the scenario's mask.

    Catches hand-built sets whose sidelobe points sit inside the gap-dilated
    mainlobe (the two constraint sets would fight each other), mainlobe points
    outside every region, nonpositive weights, and points outside the reflect
    ranges. Returns a list of Violations; empty for anything produced by
    ``build_samples``.
    """
    mask = scn.mask
    out = []
    phi_rng = scn.reflect_phi_deg
    theta_rng = scn.reflect_theta_deg
    for i, (angle, weight) in enumerate(samples.mainlobe):
        field = f"mainlobe[{i}]"
        if weight <= 0:
            out.append(Violation(field, f"weight {weight} is not positive"))
        if not any(r.contains(angle.phi_deg, angle.theta_deg, _TOL) for r in mask.mainlobe):
            out.append(Violation(field, "sample lies outside every mainlobe region"))
        if not (phi_rng[0] - _TOL <= angle.phi_deg <= phi_rng[1] + _TOL
                and theta_rng[0] - _TOL <= angle.theta_deg <= theta_rng[1] + _TOL):
            out.append(Violation(field, "sample lies outside the reflect ranges"))
    for i, angle in enumerate(samples.sidelobe):
        field = f"sidelobe[{i}]"
        for j, region in enumerate(mask.mainlobe):
            if _in_dilated(region, angle.phi_deg, angle.theta_deg, mask.gap_deg):
                out.append(Violation(
                    field,
                    f"sidelobe sample ({angle.phi_deg}, {angle.theta_deg}) deg lies "
                    f"within the {mask.gap_deg} deg gap of mainlobe region {j}"))
        if not (phi_rng[0] - _TOL <= angle.phi_deg <= phi_rng[1] + _TOL
                and theta_rng[0] - _TOL <= angle.theta_deg <= theta_rng[1] + _TOL):
            out.append(Violation(field, "sample lies outside the reflect ranges"))
    return out


def samples_to_csv(samples, path):
    """Write the sample sets as CSV rows phi_deg,theta_deg,set,weight."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("phi_deg,theta_deg,set,weight\n")
        for angle, weight in samples.mainlobe:
            fh.write(f"{angle.phi_deg!r},{angle.theta_deg!r},mainlobe,{weight!r}\n")
        for angle in samples.sidelobe:
            fh.write(f"{angle.phi_deg!r},{angle.theta_deg!r},sidelobe,\n")
