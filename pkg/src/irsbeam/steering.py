"""Steering vectors for the planar reflecting surface.

The surface lies in the y-z plane with its normal along +x. Element (iy, iz)
sits at [0, iy*d_y, iz*d_z] and elements are indexed row-major with y as the
outer axis: m = iy*m_z + iz. Every steering vector factors into a Kronecker
product of a y-axis and a z-axis component, which is what makes the
axis-decomposed optimizer possible.
"""

import numpy as np

from .units import SPEED_OF_LIGHT


def unit_direction(angle):
    """Unit propagation vector [x, y, z] for a direction in degrees.

    x = cos(phi) sin(theta), y = sin(phi) sin(theta), z = cos(theta).
    """
    phi, theta = angle.radians()
    sin_t = np.sin(theta)
    return np.array([np.cos(phi) * sin_t, np.sin(phi) * sin_t, np.cos(theta)])


def steering_component(angle, count, spacing_m, f_c_hz, axis):
    """Per-axis steering vector exp(j k m d u_axis) for m = 0..count-1.

    Parameters
    ----------
    angle : AnglePair
        Propagation direction.
    count : int
        Number of elements along the axis.
    spacing_m : float
        Element spacing in meters.
    f_c_hz : float
        Carrier frequency.
    axis : str
        "y" or "z"; selects the matching component of the unit direction.

    Returns
    -------
    ndarray, complex, shape (count,) with unit-modulus entries; entry 0 is
    exactly 1.
    """
    if axis not in ("y", "z"):
        raise ValueError(f"axis must be 'y' or 'z', got {axis!r}")
    u = unit_direction(angle)
    component = u[1] if axis == "y" else u[2]
    k = 2.0 * np.pi * f_c_hz / SPEED_OF_LIGHT
    phases = k * spacing_m * component * np.arange(count)
    return np.exp(1j * phases)


def axis_factors(scn, reflect):
    """Combined incident+reflect per-axis steering factors (a_y, a_z).

    Each factor is the elementwise product of the incident and reflect
    components; phases are summed before the single exp so entries stay
    exactly unit modulus.
    """
    d_y, d_z = scn.spacing_m
    k = 2.0 * np.pi * scn.f_c_hz / SPEED_OF_LIGHT
    u_i = unit_direction(scn.incident)
    u_r = unit_direction(reflect)
    a_y = np.exp(1j * k * d_y * (u_i[1] + u_r[1]) * np.arange(scn.m_y))
    a_z = np.exp(1j * k * d_z * (u_i[2] + u_r[2]) * np.arange(scn.m_z))
    return a_y, a_z


def full_steering(scn, reflect):
    """Length m_y*m_z combined steering vector plus its axis factors.

    Returns (a, a_y, a_z) with a = kron(a_y, a_z), i.e. element m = iy*m_z+iz
    carries phase a_y[iy]*a_z[iz].
    """
    a_y, a_z = axis_factors(scn, reflect)
    return np.kron(a_y, a_z), a_y, a_z
