"""Statistical test utilities used by the verification batteries."""

from __future__ import annotations

import math

import numpy as np
from scipy import stats as sps


def mean_and_se(values) -> tuple[float, float]:
    """Sample mean and standard error of the mean."""
    x = np.asarray(values, dtype=float)
    n = x.size
    if n == 0:
        raise ValueError("empty sample")
    if n == 1:
        return float(x[0]), math.inf
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(n))


def ks_two_sample(xs, ys) -> tuple[float, float]:
    """Two-sample Kolmogorov-Smirnov statistic and asymptotic p-value."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.size == 0 or ys.size == 0:
        raise ValueError("empty sample")
    res = sps.ks_2samp(xs, ys, method="asymp")
    return float(res.statistic), float(res.pvalue)


def ks_one_sample(xs, cdf) -> tuple[float, float]:
    """One-sample KS test of a sample against a callable CDF."""
    xs = np.asarray(xs, dtype=float)
    if xs.size == 0:
        raise ValueError("empty sample")
    res = sps.kstest(xs, cdf)
    return float(res.statistic), float(res.pvalue)


def z_test(mean_a: float, se_a: float, mean_b: float, se_b: float) -> float:
    """|difference of means| in combined standard errors."""
    denom = math.hypot(se_a, se_b)
    diff = abs(mean_a - mean_b)
    if denom == 0.0:
        return 0.0 if diff == 0.0 else math.inf
    return diff / denom


def z_p_value(z: float) -> float:
    """Two-sided normal p-value of a z-score."""
    return float(2.0 * sps.norm.sf(abs(z)))


def count_histogram(samples, k_max: int | None = None) -> np.ndarray:
    """Empirical probability vector of non-negative integer samples."""
    x = np.asarray(samples, dtype=int)
    if x.size == 0:
        raise ValueError("empty sample")
    if (x < 0).any():
        raise ValueError("counts must be non-negative")
    length = (int(x.max()) if k_max is None else k_max) + 1
    hist = np.bincount(x, minlength=length).astype(float)
    return hist / hist.sum()


def tv_distance(hist_a, hist_b) -> float:
    """Total variation distance between two probability vectors.

    Vectors are padded to a common length and renormalized, so raw count
    histograms are accepted too.
    """
    a = np.asarray(hist_a, dtype=float)
    b = np.asarray(hist_b, dtype=float)
    if a.size == 0 or b.size == 0:
        raise ValueError("empty histogram")
    length = max(a.size, b.size)
    a = np.pad(a, (0, length - a.size)) / a.sum()
    b = np.pad(b, (0, length - b.size)) / b.sum()
    return float(0.5 * np.abs(a - b).sum())


def tv_permutation_test(
    counts_a,
    counts_b,
    rng: np.random.Generator,
    n_permutations: int = 500,
) -> tuple[float, float]:
    """TV distance between two count samples with a permutation p-value.

    Under the null (same law) the pooled relabelling preserves the
    distribution of the statistic; the p-value is the add-one-smoothed
    fraction of permuted TVs at or above the observed one.
    """
    a = np.asarray(counts_a, dtype=int)
    b = np.asarray(counts_b, dtype=int)
    if a.size == 0 or b.size == 0:
        raise ValueError("empty sample")
    k_max = int(max(a.max(), b.max()))
    observed = tv_distance(
        count_histogram(a, k_max), count_histogram(b, k_max)
    )
    pooled = np.concatenate([a, b])
    hits = 0
    for _ in range(n_permutations):
        rng.shuffle(pooled)
        pa, pb = pooled[: a.size], pooled[a.size:]
        k = int(pooled.max())
        tv = tv_distance(count_histogram(pa, k), count_histogram(pb, k))
        if tv >= observed - 1e-15:
            hits += 1
    return observed, (hits + 1.0) / (n_permutations + 1.0)


def poisson_counts_gof(counts, lam: float, min_expected: float = 5.0) -> tuple[float, float]:
    """Chi-square goodness of fit of integer counts to Poisson(lam).

    Bins with expected mass below ``min_expected`` are pooled into their
    neighbours; no parameters are fitted, so dof = bins - 1.
    """
    x = np.asarray(counts, dtype=int)
    n = x.size
    if n == 0:
        raise ValueError("empty sample")
    k_hi = max(int(x.max()), int(math.ceil(lam + 10 * math.sqrt(lam + 1.0))))
    ks = np.arange(k_hi + 1)
    pmf = sps.poisson.pmf(ks, lam)
    pmf[-1] += sps.poisson.sf(k_hi, lam)
    observed = np.bincount(x, minlength=k_hi + 1).astype(float)
    expected = n * pmf
    # pool from the right, then from the left, until all bins are heavy enough
    obs_bins, exp_bins = [], []
    acc_o = acc_e = 0.0
    for o, e in zip(observed, expected):
        acc_o += o
        acc_e += e
        if acc_e >= min_expected:
            obs_bins.append(acc_o)
            exp_bins.append(acc_e)
            acc_o = acc_e = 0.0
    if acc_e > 0:
        if obs_bins:
            obs_bins[-1] += acc_o
            exp_bins[-1] += acc_e
        else:
            obs_bins, exp_bins = [acc_o], [acc_e]
    if len(obs_bins) < 2:
        return 0.0, 1.0
    res = sps.chisquare(obs_bins, f_exp=exp_bins)
    return float(res.statistic), float(res.pvalue)


def trend_toward(values, ses, target: float, sigma_slack: float = 2.0) -> bool:
    """True when |value - target| is non-increasing along the sequence,
    allowing combined-noise slack on each consecutive pair."""
    v = np.asarray(values, dtype=float)
    s = np.asarray(ses, dtype=float)
    gaps = np.abs(v - target)
    for k in range(v.size - 1):
        slack = sigma_slack * math.hypot(s[k], s[k + 1])
        if gaps[k + 1] > gaps[k] + slack:
            return False
    return True
