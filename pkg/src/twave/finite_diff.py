"""Finite-difference helpers on uniform grids."""

import numpy as np


def derivative(f: np.ndarray, h: float) -> np.ndarray:
    """d/dx along axis 0: sixth-order central differences in the interior,
    fourth order on the three points nearest each end."""
    f = np.asarray(f)
    d = np.empty_like(f)
    d[3:-3] = (-f[:-6] + 9 * f[1:-5] - 45 * f[2:-4] + 45 * f[4:-2] - 9 * f[5:-1] + f[6:]) / (60 * h)
    d[2] = (f[0] - 8 * f[1] + 8 * f[3] - f[4]) / (12 * h)
    d[-3] = (f[-5] - 8 * f[-4] + 8 * f[-2] - f[-1]) / (12 * h)
    d[0] = (-25 * f[0] + 48 * f[1] - 36 * f[2] + 16 * f[3] - 3 * f[4]) / (12 * h)
    d[1] = (-3 * f[0] - 10 * f[1] + 18 * f[2] - 6 * f[3] + f[4]) / (12 * h)
    d[-1] = -(-25 * f[-1] + 48 * f[-2] - 36 * f[-3] + 16 * f[-4] - 3 * f[-5]) / (12 * h)
    d[-2] = -(-3 * f[-1] - 10 * f[-2] + 18 * f[-3] - 6 * f[-4] + f[-5]) / (12 * h)
    return d
