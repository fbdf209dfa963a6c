"""Element pattern, reflected-path gain, and link-budget arithmetic."""

import numpy as np

from .steering import full_steering, axis_factors
from .units import SPEED_OF_LIGHT, lin2db


# Directions within this of the support edge count as outside it. Degree
# inputs like phi = 90 land at ~6e-17 after radian conversion, not at 0.
SUPPORT_TOL = 1e-12


def erp(angle, g_linear):
    """Element radiation pattern value F at a direction.

    F = (sin(theta) cos(phi))^(g_linear/2 - 1) on the front half-space
    (sin(theta) cos(phi) > 0) and 0 elsewhere. ``g_linear`` is the linear
    element gain and must be positive; values below 2 give a negative
    exponent, so F grows without bound toward the support edge instead of
    tapering. That regime is legal but unusual.
    """
    if g_linear <= 0:
        raise ValueError(f"element gain must be positive, got {g_linear}")
    phi, theta = angle.radians()
    base = np.sin(theta) * np.cos(phi)
    if base <= SUPPORT_TOL:
        return 0.0
    return float(base ** (g_linear / 2.0 - 1.0))


def eta_sq(scn, reflect):
    """Angle-dependent amplitude-squared factor G_t G^2 F(inc) F(refl)."""
    return (scn.g_t_linear * scn.g_linear ** 2
            * erp(scn.incident, scn.g_linear) * erp(reflect, scn.g_linear))


def coefficient_matrix(a):
    """Quadratic-form coefficient A = conj(a) a^T for a steering vector.

    A is Hermitian PSD with trace equal to len(a); tiny asymmetry from the
    outer product is removed so downstream eigensolvers see an exactly
    Hermitian matrix.
    """
    A = np.outer(np.conj(a), a)
    return 0.5 * (A + A.conj().T)


def trace_gain(scn, reflect, W):
    """Shaped gain of a lifted matrix variable: eta^2 Re(Tr(A W)).

    Equals ``gamma(scn, reflect, w)`` when W = w w^H. W must be Hermitian
    (within 1e-9 relative); PSD inputs always give a nonnegative result
    because Tr(A W) = b^H W b with b = conj(a).
    """
    W = np.asarray(W, dtype=complex)
    scale = max(float(np.abs(W).max()), 1.0)
    if np.abs(W - W.conj().T).max() > 1e-9 * scale:
        raise ValueError("lifted matrix must be Hermitian within 1e-9")
    a, _, _ = full_steering(scn, reflect)
    A = coefficient_matrix(a)
    return float(eta_sq(scn, reflect) * np.trace(A @ W).real)


def gamma(scn, reflect, w):
    """Shaped reflection gain eta^2 |a^T w|^2 for a full phase vector w."""
    a, _, _ = full_steering(scn, reflect)
    return float(eta_sq(scn, reflect) * np.abs(a @ w) ** 2)


def gamma_factored(scn, reflect, w_y, w_z):
    """Shaped gain from per-axis vectors: eta^2 |a_y^T w_y|^2 |a_z^T w_z|^2.

    Identical to ``gamma`` on w = kron(w_y, w_z).
    """
    a_y, a_z = axis_factors(scn, reflect)
    return float(eta_sq(scn, reflect)
                 * np.abs(a_y @ w_y) ** 2 * np.abs(a_z @ w_z) ** 2)


def link_budget(scn, gamma_db=0.0):
    """Received-power offset (dB relative to transmit power) over the two hops.

    Adds free-space spreading 20 log10(lambda / (4 pi d)) for each hop to the
    shaped reflection gain. Requires d1_m and d2_m in the scenario.
    """
    if scn.d1_m is None or scn.d2_m is None:
        raise ValueError("link_budget requires scenario fields d1_m and d2_m")
    lam = SPEED_OF_LIGHT / scn.f_c_hz
    spread = (20.0 * np.log10(lam / (4.0 * np.pi * scn.d1_m))
              + 20.0 * np.log10(lam / (4.0 * np.pi * scn.d2_m)))
    return float(spread + gamma_db)
