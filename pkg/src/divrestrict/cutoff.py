"""The cutoff profile H: 0 below 1/4, 1 above 3/4, quintic in between.

H(Z) = S(2Z - 1/2) with S(s) = s^3 (10 - 15 s + 6 s^2).  Writing m = Z - 1/2
gives the odd polynomial H = 1/2 + (15/8) t - 5 t^3 + 6 t^5 with t = 2m, and
H'(Z) = 60 (1/4 - 4 m^2)^2, which depends on m only through m^2.

For the derivative, Z below 1/2 is first reflected to fl(1 - Z).  Above 1/2
the reflection 1 - Z is exact, so both Z and fl(1 - Z) land on the same
representative and H'(Z) == H'(1 - Z) holds bit for bit.
"""
from __future__ import annotations

import numpy as np

LOWER = 0.25
UPPER = 0.75


def h_value(z):
    z = np.asarray(z, dtype=float)
    t = 2.0 * (z - 0.5)
    t2 = t * t
    inner = 0.5 + t * (15.0 / 8.0 + t2 * (-5.0 + 6.0 * t2))
    out = np.where(z <= LOWER, 0.0, np.where(z >= UPPER, 1.0, inner))
    return out if out.ndim else float(out)


def h_prime(z):
    z = np.asarray(z, dtype=float)
    m = np.where(z >= 0.5, z, 1.0 - z) - 0.5
    q = 0.25 - 4.0 * m * m
    out = np.where((z > LOWER) & (z < UPPER), 60.0 * q * q, 0.0)
    return out if out.ndim else float(out)


class CutoffProfile:
    """Namespace object bundling the fixed profile and its derivative."""

    lower = LOWER
    upper = UPPER

    @staticmethod
    def value(z):
        return h_value(z)

    @staticmethod
    def derivative(z):
        return h_prime(z)

    __call__ = value
