"""Principal-value exponential integral Ei(x) for real arguments.

Three regimes, all self-contained (no external special-function library):

* convergent power series  Ei(x) = gamma + ln|x| + sum_n x^n/(n n!)
  for x in [-6, 40]; on the negative side the alternating sum loses
  roughly e^{2|x|} eps of relative accuracy, so the series is only used
  where that loss stays below ~1e-12,
* a continued fraction for E1(-x) = -Ei(x) when x < -6 (modified Lentz),
* the divergent asymptotic expansion e^x/x sum_n n!/x^n, optimally
  truncated, for x > 40.

Adjacent regimes are compared in overlap windows by the test suite.
"""

import numpy as np

from ._backend import njit

EULER_GAMMA = 0.5772156649015328606

# exp overflows just above this; the operation must signal, not saturate
OVERFLOW_ARG = 709.0

_SERIES_MAX_POS = 40.0
_SERIES_MIN_NEG = -6.0


@njit
def _ei_series(x):
    acc = 0.0
    term = 1.0
    for n in range(1, 500):
        term *= x / n
        prev = acc
        acc += term / n
        if acc == prev:
            break
    return EULER_GAMMA + np.log(abs(x)) + acc


@njit
def _ei_asymptotic(x):
    # e^x/x * sum n!/x^n, truncated at the smallest term
    s = 1.0
    term = 1.0
    for n in range(1, 120):
        nxt = term * n / x
        if abs(nxt) >= abs(term):
            break
        term = nxt
        s += term
    return np.exp(x) * s / x


@njit
def _e1_contfrac(x):
    # E1(x) = e^{-x} / (x + 1 - 1/(x + 3 - 4/(x + 5 - 9/(...)))), x > 0
    # evaluated by modified Lentz
    tiny = 1e-300
    f = tiny
    c = f
    d = 0.0
    b = x + 1.0
    a = 1.0
    for n in range(1, 200):
        d = b + a * d
        if abs(d) < tiny:
            d = tiny
        c = b + a / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = c * d
        f *= delta
        if abs(delta - 1.0) < 1e-16:
            break
        a = -float(n * n)
        b = x + 2.0 * n + 1.0
    return np.exp(-x) * f


@njit
def _ei_scalar(x):
    if x > _SERIES_MAX_POS:
        return _ei_asymptotic(x)
    if x < _SERIES_MIN_NEG:
        return -_e1_contfrac(-x)
    return _ei_series(x)


@njit
def ei_grid(x):
    """Ei evaluated elementwise on a float64 array; x must be nonzero and
    below the overflow bound (internal helper, unchecked)."""
    out = np.empty_like(x)
    for i in range(x.shape[0]):
        out[i] = _ei_scalar(x[i])
    return out


def exp_integral_ei(x: float) -> float:
    """Principal-value exponential integral Ei(x), x real and nonzero.

    Relative error below 1e-10 over |x| in [1e-6, 700]. Raises
    OverflowError for x > ~709 where e^x exceeds the float range.
    """
    x = float(x)
    if x == 0.0:
        raise ValueError("Ei(x) requires x != 0")
    if not np.isfinite(x):
        raise ValueError("Ei(x) requires finite x")
    if x > OVERFLOW_ARG:
        raise OverflowError(f"Ei({x}) overflows double precision")
    return float(_ei_scalar(x))
