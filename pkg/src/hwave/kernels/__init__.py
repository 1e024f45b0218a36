"""Backend dispatch for the hot numeric kernels.

The numba path is used when numba imports cleanly and the environment
variable ``HW_NO_NUMBA`` is unset/0; otherwise the pure-numpy reference
implementations are used.  ``HW_THREADS`` caps numba's thread pool.
Both paths are kept importable so the benchmark and the parity tests can
compare them directly.
"""

import os

import numpy as np

from . import pure

_BACKEND = "numpy"
_impl = pure

if os.environ.get("HW_NO_NUMBA", "0") not in ("1", "true", "yes"):
    try:
        import numba

        threads = os.environ.get("HW_THREADS")
        if threads:
            numba.set_num_threads(max(1, min(int(threads), numba.config.NUMBA_NUM_THREADS)))
        from . import fast

        _impl = fast
        _BACKEND = "numba"
    except ImportError:
        pass


def backend():
    """Name of the active kernel backend ('numba' or 'numpy')."""
    return _BACKEND


def gauss_legendre(n):
    """Gauss-Legendre nodes and weights on [-1, 1]."""
    return np.polynomial.legendre.leggauss(n)


def cubic_interp(xg, yg, x):
    return _impl.cubic_interp(
        np.ascontiguousarray(xg, dtype=np.float64),
        np.ascontiguousarray(yg, dtype=np.complex128),
        np.ascontiguousarray(x, dtype=np.float64),
    )


def self_convolution(sig_out, xg, yg, glx, glw):
    return _impl.self_convolution(
        np.ascontiguousarray(sig_out, dtype=np.float64),
        np.ascontiguousarray(xg, dtype=np.float64),
        np.ascontiguousarray(yg, dtype=np.complex128),
        np.ascontiguousarray(glx, dtype=np.float64),
        np.ascontiguousarray(glw, dtype=np.float64),
    )


def el_correlation(tau_out, xg_g, yg_g, xg_f, yg_f, upper, edges, glx, glw):
    return _impl.el_correlation(
        np.ascontiguousarray(tau_out, dtype=np.float64),
        np.ascontiguousarray(xg_g, dtype=np.float64),
        np.ascontiguousarray(yg_g, dtype=np.complex128),
        np.ascontiguousarray(xg_f, dtype=np.float64),
        np.ascontiguousarray(yg_f, dtype=np.complex128),
        float(upper),
        np.ascontiguousarray(edges, dtype=np.float64),
        np.ascontiguousarray(glx, dtype=np.float64),
        np.ascontiguousarray(glw, dtype=np.float64),
    )


def filon_weights(sigma0, h, nsig, svals):
    return _impl.filon_weights(
        float(sigma0), float(h), int(nsig), np.ascontiguousarray(svals, dtype=np.float64)
    )
