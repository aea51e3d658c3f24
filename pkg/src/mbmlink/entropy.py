"""Gaussian-mixture densities and differential-entropy estimators.

The received signal of an MBM link is an equal-weight mixture of Gaussians
centered at sqrt(P) times the constellation points, all sharing the noise
variance. There is no closed form for its entropy; this module provides a
Monte Carlo estimator, a deterministic quadrature used as the oracle, and
analytic sandwich bounds. All entropies are in bits.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .constellation import UserConstellation

LN2 = float(np.log(2.0))
MC_MIN_SAMPLES = 1000
QUAD_TOL_BITS = 1e-6
QUAD_MAX_INTERVALS = 1 << 22
_CHUNK_ELEMS = 1 << 21  # cap on points x components per pdf block


class QuadratureConvergenceError(RuntimeError):
    """Composite quadrature failed to settle within the refinement budget."""


@dataclass(frozen=True)
class GaussianMixture:
    """Equal-weight scalar Gaussian mixture with a common noise variance."""

    means: np.ndarray
    noise_variance: float

    def __post_init__(self):
        m = np.atleast_1d(np.asarray(self.means, dtype=float)).copy()
        if m.ndim != 1 or m.size < 1:
            raise ValueError("means must be a nonempty 1-D vector")
        if not np.all(np.isfinite(m)):
            raise ValueError("means must be finite")
        if not (self.noise_variance > 0):
            raise ValueError(f"noise_variance must be positive, got {self.noise_variance}")
        m.flags.writeable = False
        object.__setattr__(self, "means", m)

    @property
    def n_components(self) -> int:
        return self.means.size

    @classmethod
    def from_constellation(cls, constellation: UserConstellation, power: float,
                           noise_variance: float) -> "GaussianMixture":
        if power < 0:
            raise ValueError("power must be nonnegative")
        return cls(means=np.sqrt(power) * constellation.amplitudes,
                   noise_variance=noise_variance)


@dataclass(frozen=True)
class EntropyEstimate:
    """Entropy value in bits; std_error is 0 for deterministic methods."""

    value: float
    std_error: float
    method: str

    METHODS = ("monte_carlo", "quadrature", "lower_bound", "upper_bound")

    def __post_init__(self):
        if self.method not in self.METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if self.std_error < 0:
            raise ValueError("std_error must be >= 0")


def mixture_logpdf(mix: GaussianMixture, y) -> np.ndarray:
    """log-density, evaluated with max-exponent factoring (never -inf)."""
    y = np.atleast_1d(np.asarray(y, dtype=float))
    s2 = mix.noise_variance
    norm = -0.5 * np.log(2.0 * np.pi * s2) - np.log(mix.n_components)
    out = np.empty(y.shape, dtype=float)
    block = max(1, _CHUNK_ELEMS // mix.n_components)
    for start in range(0, y.size, block):
        yy = y[start:start + block]
        z = -((yy[:, None] - mix.means[None, :]) ** 2) / (2.0 * s2)
        out[start:start + block] = logsumexp(z, axis=1) + norm
    return out


def mixture_pdf(mix: GaussianMixture, y):
    """Density (1/M) sum_m N(y; mean_m, sigma^2); scalar in, scalar out."""
    scalar = np.isscalar(y) or np.ndim(y) == 0
    p = np.exp(mixture_logpdf(mix, y))
    return float(p[0]) if scalar else p


def conditional_pdf(constellation: UserConstellation, power: float,
                    noise_variance: float, y):
    """Density of y given one user's diagram: mixture over its own points."""
    mix = GaussianMixture.from_constellation(constellation, power, noise_variance)
    return mixture_pdf(mix, y)


def noise_entropy(noise_variance: float) -> float:
    """Differential entropy of the Gaussian noise, (1/2) log2(2 pi e sigma^2)."""
    if not (noise_variance > 0):
        raise ValueError(f"noise_variance must be positive, got {noise_variance}")
    return 0.5 * np.log2(2.0 * np.pi * np.e * noise_variance)


def mc_entropy(mix: GaussianMixture, n_samples: int = 100_000,
               seed: int | None = None) -> EntropyEstimate:
    """Monte Carlo estimate -(1/n) sum log2 f(y_i), y_i drawn from the mixture."""
    if n_samples < MC_MIN_SAMPLES:
        raise ValueError(f"n_samples must be >= {MC_MIN_SAMPLES}, got {n_samples}")
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, mix.n_components, size=n_samples)
    y = mix.means[idx] + np.sqrt(mix.noise_variance) * rng.standard_normal(n_samples)
    neg_log2 = -mixture_logpdf(mix, y) / LN2
    value = float(neg_log2.mean())
    std_error = float(neg_log2.std(ddof=1) / np.sqrt(n_samples))
    return EntropyEstimate(value=value, std_error=std_error, method="monte_carlo")


def _simpson(values: np.ndarray, step: float) -> float:
    return step / 3.0 * (values[0] + values[-1]
                         + 4.0 * values[1:-1:2].sum() + 2.0 * values[2:-2:2].sum())


def quadrature_entropy(mix: GaussianMixture, tol_bits: float = QUAD_TOL_BITS,
                       max_intervals: int = QUAD_MAX_INTERVALS) -> EntropyEstimate:
    """Deterministic entropy by composite Simpson integration of -f log2 f.

    Integrates over [min mean - 10 sigma, max mean + 10 sigma], doubling the
    grid until two successive estimates agree within tol_bits. The initial
    grid resolves sigma so an isolated component cannot be stepped over.
    """
    if mix.n_components > 4096:
        raise ValueError("quadrature supports at most 4096 components")
    sigma = np.sqrt(mix.noise_variance)
    lo = float(mix.means.min() - 10.0 * sigma)
    hi = float(mix.means.max() + 10.0 * sigma)
    span = hi - lo

    n = 1 << max(9, int(np.ceil(np.log2(4.0 * span / sigma))))

    def estimate(n_intervals: int) -> float:
        y = np.linspace(lo, hi, n_intervals + 1)
        logf = mixture_logpdf(mix, y)
        g = -np.exp(logf) * logf / LN2  # underflowed f gives exactly 0 * finite
        return _simpson(g, span / n_intervals)

    prev = estimate(n)
    while n <= max_intervals // 2:
        n *= 2
        cur = estimate(n)
        if abs(cur - prev) < tol_bits:
            return EntropyEstimate(value=cur, std_error=0.0, method="quadrature")
        prev = cur
    raise QuadratureConvergenceError(
        f"no convergence to {tol_bits} bits within {max_intervals} intervals")


def entropy_bounds(mix: GaussianMixture) -> tuple[EntropyEstimate, EntropyEstimate]:
    """Analytic sandwich LB <= h(y) <= UB for the mixture entropy.

    Lower: max of the conditioning bound h(n) and the pairwise-distance bound
    h(n) - (1/M) sum_i log2[(1/M) sum_j exp(-(mean_i-mean_j)^2 / (8 sigma^2))].
    Upper: min of the Gaussian max-entropy bound (1/2) log2(2 pi e Var[y]) and
    the discrete-plus-noise bound log2 M + h(n). Both collapse to h(n) when
    the means coincide and meet log2 M + h(n) as the separation grows.
    """
    s2 = mix.noise_variance
    h_n = noise_entropy(s2)
    m = mix.means

    d2 = (m[:, None] - m[None, :]) ** 2
    inner = np.mean(np.exp(-d2 / (8.0 * s2)), axis=1)
    pairwise = h_n - float(np.mean(np.log2(inner)))
    lower = max(h_n, pairwise)

    var_y = s2 + float(np.mean((m - m.mean()) ** 2))
    upper = min(0.5 * np.log2(2.0 * np.pi * np.e * var_y),
                np.log2(mix.n_components) + h_n)

    # the two are analytic bounds on the same quantity, so lower <= upper up
    # to rounding; guard against fp noise in the degenerate collapsed cases
    upper = max(upper, lower)
    return (EntropyEstimate(value=lower, std_error=0.0, method="lower_bound"),
            EntropyEstimate(value=upper, std_error=0.0, method="upper_bound"))


def estimate_entropy(mix: GaussianMixture, estimator: str = "quadrature",
                     n_samples: int = 100_000, seed: int | None = None) -> EntropyEstimate:
    """Dispatch to the named estimator ('quadrature' or 'monte_carlo')."""
    if estimator == "quadrature":
        return quadrature_entropy(mix)
    if estimator == "monte_carlo":
        return mc_entropy(mix, n_samples=n_samples, seed=seed)
    raise ValueError(f"unknown estimator {estimator!r}")
