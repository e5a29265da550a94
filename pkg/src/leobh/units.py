"""Unit conversions shared by all modules.

All internal arithmetic is carried out in linear units (W, Hz, km, bits);
dB values appear only at configuration boundaries and in debug output.
"""

import numpy as np

SPEED_OF_LIGHT_M_S = 2.99792458e8
BOLTZMANN_J_K = 1.380649e-23


def db_to_linear(x_db):
    return 10.0 ** (np.asarray(x_db, dtype=float) / 10.0)


def linear_to_db(x_lin):
    return 10.0 * np.log10(np.maximum(np.asarray(x_lin, dtype=float), 1e-300))


def dbw_to_w(p_dbw: float) -> float:
    return float(10.0 ** (p_dbw / 10.0))


def w_to_dbw(p_w: float) -> float:
    return float(10.0 * np.log10(max(p_w, 1e-300)))
