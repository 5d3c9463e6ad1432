"""Self-contained statistical primitives for the sampling engine.

Everything the decision, adaptation and evaluation loops need: Bernoulli
trials, Student-t equality verdicts, standard normal quantiles, minimum
sample sizes with finite population correction and exponential confidence
decay.  Pure stdlib; p-values go through the regularized incomplete beta
function and the normal quantile through a rational approximation refined
with one Halley step, both good to well under 1e-6 absolute error.
"""

from __future__ import annotations

import math
from typing import Sequence

from .errors import InsufficientDataError, ParameterError

__all__ = [
    "bernoulli",
    "paired_t_p_value",
    "paired_t_test",
    "one_sample_t_p_value",
    "one_sample_t_p_value_from_stats",
    "one_sample_t_test",
    "normal_quantile",
    "cochran_sample_size",
    "decayed_confidence",
    "student_t_two_sided_p",
]


def _check_alpha(alpha: float) -> None:
    if not 0.0 < alpha < 1.0:
        raise ParameterError(f"significance level must be in (0, 1), got {alpha}")


def bernoulli(p: float, rng) -> bool:
    """One Bernoulli trial with success probability ``p``.

    Consumes exactly one uniform draw from ``rng`` (any object with a
    ``random()`` method), so replaying a recorded tape of draws replays
    the decisions.
    """
    if not 0.0 <= p <= 1.0:
        raise ParameterError(f"probability must be in [0, 1], got {p}")
    return rng.random() < p


# --- Student t machinery -------------------------------------------------

def _betacf(a: float, b: float, x: float) -> float:
    # Continued fraction for the incomplete beta function (Lentz's method).
    tiny = 1e-300
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, 300):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-14:
            break
    return h


def _betainc(a: float, b: float, x: float) -> float:
    # Regularized incomplete beta I_x(a, b).
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def student_t_two_sided_p(t: float, df: float) -> float:
    """Two-sided p-value of a Student t statistic with ``df`` degrees of freedom."""
    if df <= 0:
        raise ParameterError(f"degrees of freedom must be positive, got {df}")
    if math.isinf(t):
        return 0.0
    return _betainc(df / 2.0, 0.5, df / (df + t * t))


def paired_t_p_value(xs: Sequence[float], ys: Sequence[float]) -> float:
    """p-value behind :func:`paired_t_test`.

    Operates on paired measurement vectors.  Degenerate pairs where every
    difference is identical short-circuit: p = 1 when the vectors are
    equal, 0 otherwise (a constant shift is treated as a sure difference).
    Otherwise the two groups' means are compared with the two-sample
    Student statistic (pooled variance, df = 2n - 2), which is the
    comparison the equality verdicts of the adaptation loop are built on.
    """
    n = len(xs)
    if n != len(ys):
        raise InsufficientDataError(
            f"paired vectors must have equal length, got {n} and {len(ys)}"
        )
    if n < 2:
        raise InsufficientDataError(f"need at least 2 pairs, got {n}")
    diffs = [float(x) - float(y) for x, y in zip(xs, ys)]
    if max(diffs) == min(diffs):
        return 1.0 if diffs[0] == 0.0 else 0.0
    mean_x = math.fsum(xs) / n
    mean_y = math.fsum(ys) / n
    ss_x = math.fsum((x - mean_x) ** 2 for x in xs)
    ss_y = math.fsum((y - mean_y) ** 2 for y in ys)
    pooled_var = (ss_x + ss_y) / (2 * n - 2)
    if pooled_var <= 0.0:
        # Both groups constant; covered by the degenerate branch above,
        # kept as a guard against pathological float input.
        return 1.0 if mean_x == mean_y else 0.0
    t = (mean_x - mean_y) / math.sqrt(pooled_var * (2.0 / n))
    return student_t_two_sided_p(t, 2 * n - 2)


def paired_t_test(xs: Sequence[float], ys: Sequence[float], alpha: float) -> bool:
    """True when the two paired vectors are statistically "equal".

    Equal means the equality hypothesis is not rejected at level
    ``alpha`` (two-sided).
    """
    _check_alpha(alpha)
    return paired_t_p_value(xs, ys) > alpha


def one_sample_t_p_value_from_stats(n: int, mean: float, m2: float, mu0: float) -> float:
    """One-sample two-sided p-value from running moments.

    ``m2`` is the sum of squared deviations from ``mean`` (Welford's M2),
    so callers that update moments incrementally get the same verdicts as
    callers passing full sequences.
    """
    if n < 2:
        raise InsufficientDataError(f"need at least 2 values, got {n}")
    if m2 <= 0.0:
        return 1.0 if mean == mu0 else 0.0
    var = m2 / (n - 1)
    t = (mean - mu0) / math.sqrt(var / n)
    return student_t_two_sided_p(t, n - 1)


def one_sample_t_p_value(values: Sequence[float], mu0: float) -> float:
    n = len(values)
    if n < 2:
        raise InsufficientDataError(f"need at least 2 values, got {n}")
    mean = math.fsum(values) / n
    m2 = math.fsum((v - mean) ** 2 for v in values)
    return one_sample_t_p_value_from_stats(n, mean, m2, mu0)


def one_sample_t_test(values: Sequence[float], mu0: float, alpha: float) -> bool:
    """True when the sample mean is statistically "equal" to ``mu0``."""
    _check_alpha(alpha)
    return one_sample_t_p_value(values, mu0) > alpha


# --- Normal quantile ------------------------------------------------------

# Acklam's rational approximation of the inverse standard normal CDF.
_PPF_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
          1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_PPF_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
          6.680131188771972e+01, -1.328068155288572e+01)
_PPF_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
          -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_PPF_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
          3.754408661907416e+00)

_SQRT2 = math.sqrt(2.0)
_SQRT2PI = math.sqrt(2.0 * math.pi)


def _norm_ppf(p: float) -> float:
    plow = 0.02425
    if p < plow:
        q = math.sqrt(-2.0 * math.log(p))
        a, b, c, d, e, f = _PPF_C
        g, h, i, j = _PPF_D
        x = (((((a * q + b) * q + c) * q + d) * q + e) * q + f) / (
            (((g * q + h) * q + i) * q + j) * q + 1.0
        )
    elif p <= 1.0 - plow:
        q = p - 0.5
        r = q * q
        a, b, c, d, e, f = _PPF_A
        g, h, i, j, k = _PPF_B
        x = (((((a * r + b) * r + c) * r + d) * r + e) * r + f) * q / (
            ((((g * r + h) * r + i) * r + j) * r + k) * r + 1.0
        )
    else:
        q = math.sqrt(-2.0 * math.log(1.0 - p))
        a, b, c, d, e, f = _PPF_C
        g, h, i, j = _PPF_D
        x = -(((((a * q + b) * q + c) * q + d) * q + e) * q + f) / (
            (((g * q + h) * q + i) * q + j) * q + 1.0
        )
    # One Halley refinement against the exact CDF.
    err = 0.5 * math.erfc(-x / _SQRT2) - p
    u = err * _SQRT2PI * math.exp(x * x / 2.0)
    return x - u / (1.0 + x * u / 2.0)


def normal_quantile(conf: float) -> float:
    """Two-sided z-score for confidence ``conf``: Phi^-1(1 - (1 - conf) / 2).

    conf = 0.95 gives 1.96.  Diverges at conf = 1, which is rejected.
    """
    if not 0.0 < conf < 1.0:
        raise ParameterError(f"confidence must be in (0, 1), got {conf}")
    return _norm_ppf(1.0 - (1.0 - conf) / 2.0)


def cochran_sample_size(
    conf: float, variability_p: float, margin_e: float, population_size: float
) -> float:
    """Cochran's minimum sample size with finite population correction.

    n_inf = z^2 p (1-p) / e^2, corrected to n = n_inf / (1 + (n_inf - 1) / N).
    Returned as a real number; callers compare with a strict ``>``.
    ``population_size`` may be ``math.inf`` for the uncorrected value.
    """
    if not 0.0 < variability_p < 1.0:
        raise ParameterError(f"variability must be in (0, 1), got {variability_p}")
    if not 0.0 < margin_e < 1.0:
        raise ParameterError(f"margin of error must be in (0, 1), got {margin_e}")
    if population_size < 1:
        raise ParameterError(f"population size must be >= 1, got {population_size}")
    z = normal_quantile(conf)
    n_inf = z * z * variability_p * (1.0 - variability_p) / (margin_e * margin_e)
    return n_inf / (1.0 + (n_inf - 1.0) / population_size)


def decayed_confidence(t: float, max_length: float) -> float:
    """Exponentially decaying confidence e^(-t / max_length), in (0, 1].

    Starts at 1 when a monitoring cycle begins and reaches e^-1 at the
    cycle timeout, loosening the representativeness requirements as the
    cycle ages.
    """
    if t < 0:
        raise ParameterError(f"elapsed time must be >= 0, got {t}")
    if max_length <= 0:
        raise ParameterError(f"max length must be positive, got {max_length}")
    return math.exp(-t / max_length)
