"""Special functions and the Grunwald-Letnikov oracle.

Everything downstream multiplies by ratios of Gamma values, so ``gamma``
and ``recip_gamma`` are the trust anchors of the package.  The
Grunwald-Letnikov sum is an independent numerical realization of the
same derivative (initial point 0) and is used only to cross-check the
symbolic rules.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

__all__ = ["gamma", "recip_gamma", "gl_derivative"]

#: tolerance used to decide "is a non-positive integer" for pole handling
_POLE_EPS = 1e-12


def _is_nonpositive_int(x: float) -> bool:
    return x <= _POLE_EPS and abs(x - round(x)) <= _POLE_EPS


def gamma(x: float) -> float:
    """Gamma function, relative error ~1e-15 on [-170, 170] away from poles.

    Raises ValueError at the poles (0, -1, -2, ...) and OverflowError
    beyond the representable range.
    """
    if _is_nonpositive_int(x):
        raise ValueError(f"gamma pole at x={x!r}")
    return math.gamma(x)


def recip_gamma(x: float) -> float:
    """1/Gamma(x), entire: returns exactly 0.0 at non-positive integers.

    The zero return is load-bearing: the power rule multiplies by
    Gamma(e+1)/Gamma(e+1-alpha) and relies on denominator poles killing
    kernel terms rather than raising.
    """
    if _is_nonpositive_int(x):
        return 0.0
    try:
        return 1.0 / math.gamma(x)
    except OverflowError:
        # Gamma overflowed (x > ~171.6): reciprocal underflows to 0
        return 0.0
    except ZeroDivisionError:
        pass
    # Gamma underflowed to +-0.0 (large negative non-integer x):
    # recover magnitude from lgamma, sign from the reflection parity.
    sign = -1.0 if int(math.floor(x)) % 2 else 1.0
    try:
        return sign * math.exp(-math.lgamma(x))
    except OverflowError:
        return sign * math.inf


def gl_derivative(f: Callable[[float], float], alpha: float, x: float, h: float) -> float:
    """Grunwald-Letnikov fractional derivative of order ``alpha`` at ``x``.

    Computes sum_{j=0}^{N} w_j f(x - j h) / h^alpha with N = x/h,
    w_0 = 1 and w_j = w_{j-1} (j - 1 - alpha) / j.  Initial point is 0,
    so the grid must reach down to it: x/h has to be an integer >= 2.
    Converges with order h to the Riemann-Liouville value on power
    functions.
    """
    if x <= 0.0:
        raise ValueError(f"gl_derivative needs x > 0, got x={x!r}")
    if h >= x:
        raise ValueError(f"gl_derivative needs h < x, got h={h!r}, x={x!r}")
    n = round(x / h)
    if n < 2 or abs(x / h - n) > 1e-9 * n:
        raise ValueError(f"x/h must be an integer >= 2, got {x / h!r}")

    j = np.arange(1, n + 1, dtype=np.float64)
    w = np.empty(n + 1, dtype=np.float64)
    w[0] = 1.0
    np.cumprod((j - 1.0 - alpha) / j, out=w[1:])

    pts = x - j * h
    pts[-1] = 0.0  # guard the endpoint against rounding drift
    try:
        fv = np.asarray(f(pts), dtype=np.float64)
        if fv.shape != pts.shape:
            raise TypeError
    except (TypeError, ValueError):
        fv = np.array([f(float(p)) for p in pts], dtype=np.float64)
    acc = w[0] * f(x) + float(np.dot(w[1:], fv))
    return acc / h**alpha
