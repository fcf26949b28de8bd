# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled per-observation Poisson log-likelihood kernel.

One fused pass over the linear predictor; the numpy fallback in
``_kernels_py`` needs several vectorised passes and temporaries for the
same result.
"""

from libc.math cimport exp, fabs, lgamma

import numpy as np


def poisson_fgh(u, y):
    """Poisson log-pmf (log link) and its first two derivatives wrt u.

    Returns per-observation arrays (f0, g0, h0). Raises OverflowError when
    any |u| exceeds 700, before exp could silently produce inf.
    """
    cdef double[::1] uv = np.ascontiguousarray(u, dtype=np.float64)
    cdef double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef Py_ssize_t n = uv.shape[0]
    if yv.shape[0] != n:
        raise ValueError("u and y must have the same length")

    f0 = np.empty(n)
    g0 = np.empty(n)
    h0 = np.empty(n)
    cdef double[::1] fv = f0
    cdef double[::1] gv = g0
    cdef double[::1] hv = h0

    cdef Py_ssize_t i
    cdef double ui, yi, mu
    for i in range(n):
        ui = uv[i]
        if fabs(ui) > 700.0:
            raise OverflowError(
                f"linear predictor {uv[i]} at index {i} is outside the "
                f"exp-safe range [-700, 700]"
            )
        yi = yv[i]
        mu = exp(ui)
        fv[i] = yi * ui - mu - lgamma(yi + 1.0)
        gv[i] = yi - mu
        hv[i] = -mu
    return f0, g0, h0
