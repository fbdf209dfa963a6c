"""Physical constants and dB helpers shared across the package."""

import numpy as np

SPEED_OF_LIGHT = 299792458.0  # m/s

# floor used when converting a zero power gain to dB (outside pattern support)
NEG_GAIN_DB = -400.0


def db2lin(x_db):
    """Convert a dB power quantity to linear scale."""
    return 10.0 ** (np.asarray(x_db, dtype=float) / 10.0)


def lin2db(x, floor_db=NEG_GAIN_DB):
    """Convert a linear power quantity to dB, mapping nonpositive values to `floor_db`."""
    x = np.asarray(x, dtype=float)
    out = np.full_like(x, floor_db)
    np.log10(x, out=out, where=x > 0.0)
    out = np.where(x > 0.0, 10.0 * out, floor_db)
    if out.ndim == 0:
        return float(out)
    return out
