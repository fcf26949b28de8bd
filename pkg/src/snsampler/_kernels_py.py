"""Pure-numpy fallback for the compiled kernels in ``_kernels.pyx``.

Same contract as the compiled module; used when the extension was not
built or when SNSAMPLER_PURE_PYTHON is set.
"""

from __future__ import annotations

import numpy as np
from scipy.special import gammaln


def poisson_fgh(u, y):
    """Poisson log-pmf (log link) and its first two derivatives wrt u.

    Returns per-observation arrays (f0, g0, h0). Raises OverflowError when
    any |u| exceeds 700, before exp could silently produce inf.
    """
    u = np.ascontiguousarray(u, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    if u.shape != y.shape:
        raise ValueError("u and y must have the same length")
    oob = np.abs(u) > 700.0
    if oob.any():
        i = int(np.argmax(oob))
        raise OverflowError(
            f"linear predictor {u[i]} at index {i} is outside the "
            f"exp-safe range [-700, 700]"
        )
    mu = np.exp(u)
    f0 = y * u - mu - gammaln(y + 1.0)
    g0 = y - mu
    h0 = -mu
    return f0, g0, h0
