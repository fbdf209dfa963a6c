"""Shared fixtures and independent oracle helpers.

Oracle policy: wherever a test checks a numeric contract, the expected value
comes from a re-derivation that does not call the code path under test —
hand-evaluated closed forms, brute-force enumeration, dense linear algebra,
or (for the conic solver) an external convex solver when available.
"""

import json
import math
from pathlib import Path

import numpy as np
import pytest

from irsbeam.scenario import AnglePair, from_dict

ROOT = Path(__file__).resolve().parents[1]
FIXTURES = Path(__file__).resolve().parent / "fixtures"
SCENARIOS = ROOT / "scenarios"

SPEED_OF_LIGHT = 299792458.0

try:
    import cvxpy  # noqa: F401

    HAS_CVXPY = True
except ImportError:  # pragma: no cover
    HAS_CVXPY = False

needs_cvxpy = pytest.mark.skipif(
    not HAS_CVXPY, reason="cvxpy unavailable for independent cross-check")

# Acceptance-gate reporting: each criterion test records one PASS/FAIL
# line; the terminal summary replays them so the verdict survives capture.
_ACCEPTANCE_LINES = {}


def record_criterion(num, ok, detail):
    line = f"CRITERION {num}: {'PASS' if ok else 'FAIL'} ({detail})"
    _ACCEPTANCE_LINES[num] = line
    print(line)
    return line


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for num in sorted(_ACCEPTANCE_LINES):
            terminalreporter.write_line(_ACCEPTANCE_LINES[num])


@pytest.fixture(scope="session")
def default_scn():
    return from_dict({})


@pytest.fixture(scope="session")
def table1_scn():
    """4x4 narrow-mask comparison scenario (resize via scenario.replace)."""
    with open(SCENARIOS / "table1_4x4.json", encoding="utf-8") as fh:
        return from_dict(json.load(fh))


@pytest.fixture(scope="session")
def table1_fixture():
    with open(FIXTURES / "table1.json", encoding="utf-8") as fh:
        return json.load(fh)


@pytest.fixture(scope="session")
def ao16_solution():
    from irsbeam.optimizer import load_solution

    return load_solution(FIXTURES / "ao16_default.json")


@pytest.fixture(scope="session")
def ao48_solution():
    from irsbeam.optimizer import load_solution

    return load_solution(FIXTURES / "ao48_default.json")


# ---------------------------------------------------------------------------
# Independent oracles (no calls into the modules they check)


def oracle_unit_direction(phi_deg, theta_deg):
    phi, theta = math.radians(phi_deg), math.radians(theta_deg)
    return np.array([math.cos(phi) * math.sin(theta),
                     math.sin(phi) * math.sin(theta),
                     math.cos(theta)])


def oracle_full_steering(scn, reflect):
    """Length-M steering vector from the element-position definition.

    Element (i_y, i_z) sits at r = (0, i_y d_y, i_z d_z) with flat index
    i_y * m_z + i_z; the entry is exp(j (2 pi f/c) r . (u_i + u_r)).
    """
    d_y, d_z = scn.spacing_m
    k = 2.0 * math.pi * scn.f_c_hz / SPEED_OF_LIGHT
    u = (oracle_unit_direction(scn.incident.phi_deg, scn.incident.theta_deg)
         + oracle_unit_direction(reflect.phi_deg, reflect.theta_deg))
    out = np.empty(scn.m_y * scn.m_z, dtype=complex)
    for i_y in range(scn.m_y):
        for i_z in range(scn.m_z):
            phase = k * (i_y * d_y * u[1] + i_z * d_z * u[2])
            out[i_y * scn.m_z + i_z] = complex(math.cos(phase), math.sin(phase))
    return out


def oracle_erp(phi_deg, theta_deg, g_linear):
    base = math.sin(math.radians(theta_deg)) * math.cos(math.radians(phi_deg))
    if base <= 1e-12:
        return 0.0
    return base ** (g_linear / 2.0 - 1.0)


def oracle_gamma(scn, reflect, w):
    """eta^2 |a^T w|^2 evaluated from first principles."""
    eta2 = (scn.g_t_linear * scn.g_linear ** 2
            * oracle_erp(scn.incident.phi_deg, scn.incident.theta_deg, scn.g_linear)
            * oracle_erp(reflect.phi_deg, reflect.theta_deg, scn.g_linear))
    a = oracle_full_steering(scn, reflect)
    return eta2 * abs(np.dot(a, w)) ** 2


def random_angles(rng, n, reflect_only=False):
    """Random valid angle pairs: reflect ranges, or the full front sphere."""
    if reflect_only:
        phis = rng.uniform(-90.0, 90.0, n)
        thetas = rng.uniform(90.0, 180.0, n)
    else:
        phis = rng.uniform(-180.0, 180.0, n)
        thetas = rng.uniform(0.0, 180.0, n)
    return [AnglePair(float(p), float(t)) for p, t in zip(phis, thetas)]
