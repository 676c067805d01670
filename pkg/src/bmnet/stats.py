"""Paired t-test on fold AUCs and DeLong's test for two correlated AUCs."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional, Tuple

import numpy as np

from .errors import ContractError


@dataclass
class ComparisonResult:
    test_name: str  # "paired_t" or "delong"
    statistic: float
    p_value: float
    auc_a: float
    auc_b: float
    degenerate: bool = False
    dof: Optional[int] = None
    covariance: Optional[list] = None  # 2x2 DeLong covariance of (auc_a, auc_b)

    def to_dict(self) -> dict:
        d = asdict(self)
        if not math.isfinite(d["statistic"]):
            d["statistic"] = None
        return d


# ---------------------------------------------------------------------------
# Student t distribution via the regularized incomplete beta function


def _betacf(a: float, b: float, x: float, eps: float = 1e-16, max_iter: int = 1000) -> float:
    """Continued fraction for I_x(a, b), modified Lentz evaluation."""
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    d = 1.0 / (d if abs(d) > tiny else tiny)
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > tiny else tiny)
        c = 1.0 + aa / c
        c = c if abs(c) > tiny else tiny
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > tiny else tiny)
        c = 1.0 + aa / c
        c = c if abs(c) > tiny else tiny
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < eps:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def betainc(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b) for a, b > 0 and 0 <= x <= 1."""
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    log_front = math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b) + a * math.log(x) + b * math.log1p(-x)
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def t_two_sided_p(t: float, dof: float) -> float:
    """P(|T| >= |t|) for Student's t with ``dof`` degrees of freedom."""
    if math.isinf(t):
        return 0.0
    x = dof / (dof + t * t)
    return min(1.0, max(0.0, betainc(0.5 * dof, 0.5, x)))


def normal_two_sided_p(z: float) -> float:
    return math.erfc(abs(z) / math.sqrt(2.0))


def paired_t_test(auc_a, auc_b) -> ComparisonResult:
    """Two-tailed paired t-test on per-fold AUC differences ``a - b``.

    Zero-variance differences are flagged degenerate with p = 1 when the
    mean difference is 0 and p = 0 otherwise.
    """
    a = np.asarray(auc_a, dtype=np.float64)
    b = np.asarray(auc_b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ContractError(f"paired_t_test: fold vectors must align, got {a.shape} and {b.shape}")
    k = a.size
    if k < 2:
        raise ContractError("paired_t_test: need at least 2 folds")
    d = a - b
    mean_d = float(d.mean())
    sd = float(d.std(ddof=1))
    if sd == 0.0:
        if mean_d == 0.0:
            return ComparisonResult("paired_t", 0.0, 1.0, float(a.mean()), float(b.mean()), True, k - 1)
        return ComparisonResult("paired_t", math.copysign(math.inf, mean_d), 0.0, float(a.mean()), float(b.mean()), True, k - 1)
    t = mean_d / (sd / math.sqrt(k))
    return ComparisonResult("paired_t", t, t_two_sided_p(t, k - 1), float(a.mean()), float(b.mean()), False, k - 1)


# ---------------------------------------------------------------------------
# DeLong


def midrank(x: np.ndarray) -> np.ndarray:
    """1-based ranks with ties sharing the average rank."""
    order = np.argsort(x, kind="mergesort")
    xs = x[order]
    ranks = np.empty(x.size, dtype=np.float64)
    i = 0
    n = x.size
    while i < n:
        j = i
        while j < n and xs[j] == xs[i]:
            j += 1
        ranks[i:j] = 0.5 * (i + j - 1) + 1.0
        i = j
    out = np.empty(x.size, dtype=np.float64)
    out[order] = ranks
    return out


def delong_components(scores, labels) -> Tuple[float, np.ndarray, np.ndarray]:
    """AUC and the per-positive / per-negative placement values of one score vector.

    ``v10[i]`` is the fraction of negatives ranked below positive ``i`` (ties
    count half); ``v01[j]`` the fraction of positives ranked above negative ``j``.
    """
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels).astype(int)
    pos, neg = s[y == 1], s[y == 0]
    m, n = pos.size, neg.size
    if m == 0 or n == 0:
        raise ContractError("DeLong needs both classes")
    tz = midrank(np.concatenate([pos, neg]))
    tx, ty = midrank(pos), midrank(neg)
    v10 = (tz[:m] - tx) / n
    v01 = 1.0 - (tz[m:] - ty) / m
    # midranks are half-integers, so twice the rank-sum statistic is an exact integer
    twice_u = int(round(2.0 * tz[:m].sum())) - m * (m + 1)
    return twice_u / (2 * m * n), v10, v01


def delong_covariance(scores_a, scores_b, labels) -> Tuple[np.ndarray, np.ndarray]:
    """Return ``(aucs, cov)`` for two score vectors on the same samples."""
    auc_a, x_a, y_a = delong_components(scores_a, labels)
    auc_b, x_b, y_b = delong_components(scores_b, labels)
    m, n = x_a.size, y_a.size
    if m < 2 or n < 2:
        raise ContractError("DeLong variance needs at least 2 samples per class")
    s10 = np.cov(np.vstack([x_a, x_b]), ddof=1)
    s01 = np.cov(np.vstack([y_a, y_b]), ddof=1)
    return np.array([auc_a, auc_b]), s10 / m + s01 / n


def delong_test(scores_a, scores_b, labels) -> ComparisonResult:
    s_a = np.asarray(scores_a, dtype=np.float64)
    s_b = np.asarray(scores_b, dtype=np.float64)
    if s_a.shape != s_b.shape or s_a.size != np.asarray(labels).size:
        raise ContractError("delong_test: score vectors and labels must cover the same samples")
    aucs, cov = delong_covariance(s_a, s_b, labels)
    diff = float(aucs[0] - aucs[1])
    var = float(cov[0, 0] + cov[1, 1] - 2.0 * cov[0, 1])
    if var <= 0.0:
        p = 1.0 if diff == 0.0 else 0.0
        z = 0.0 if diff == 0.0 else math.copysign(math.inf, diff)
        return ComparisonResult("delong", z, p, float(aucs[0]), float(aucs[1]), True, None, cov.tolist())
    z = diff / math.sqrt(var)
    return ComparisonResult("delong", z, normal_two_sided_p(z), float(aucs[0]), float(aucs[1]), False, None, cov.tolist())
