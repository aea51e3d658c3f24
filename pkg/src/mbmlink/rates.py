"""Achievable rates: single-user, K-user MAC constraints, AWGN baselines.

Every subset constraint reduces to a mixture entropy minus the noise
entropy: conditioning on the complement users only shifts the mixture, and
mixture entropy is shift invariant, so the conditional rate equals the rate
of the subset-only superposition. That reduction is itself verified against
a brute-force conditional computation in the test suite.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace

import numpy as np

from .constellation import (
    ConstellationSampler,
    CorrelationModel,
    UserConstellation,
    build_user_covariance,
    superpose,
)
from .entropy import GaussianMixture, entropy_bounds, estimate_entropy, noise_entropy

DEFAULT_REALIZATIONS = 200
DEFAULT_MC_SAMPLES = 100_000


@dataclass(frozen=True)
class LinkConfig:
    """Parameters of one MBM link configuration.

    P is linear transmit power per user; with the default noise_variance of
    1.0 it equals the SNR. M is the per-user constellation size (2^N_P).
    """

    K: int = 1
    M: int = 2
    P: float = 1.0
    noise_variance: float = 1.0
    correlation: CorrelationModel = field(default_factory=CorrelationModel)
    realizations: int = DEFAULT_REALIZATIONS
    estimator: str = "quadrature"
    mc_samples: int = DEFAULT_MC_SAMPLES

    def __post_init__(self):
        if self.K < 1:
            raise ValueError("K must be >= 1")
        if self.M < 1:
            raise ValueError("M must be >= 1")
        if self.P < 0:
            raise ValueError("P must be >= 0")
        if not (self.noise_variance > 0):
            raise ValueError("noise_variance must be positive")
        if self.realizations < 1:
            raise ValueError("realizations must be >= 1")
        if self.estimator not in ("quadrature", "monte_carlo"):
            raise ValueError(f"unknown estimator {self.estimator!r}")

    @property
    def snr(self) -> float:
        return self.P / self.noise_variance

    def with_snr_db(self, snr_db: float) -> "LinkConfig":
        return replace(self, P=self.noise_variance * 10.0 ** (snr_db / 10.0))


@dataclass(frozen=True)
class SubsetRate:
    """One constraint of the MAC region: sum of rates over `subset`."""

    subset: frozenset
    rate_bits: float
    std_error_bits: float = 0.0
    lower_bound_bits: float = 0.0
    upper_bound_bits: float = 0.0

    @property
    def label(self) -> str:
        return "R" + "".join(str(k) for k in sorted(self.subset))


@dataclass(frozen=True)
class RateRegion:
    """All 2^K - 1 subset constraints; corner points for the 2-user pentagon."""

    constraints: dict
    corner_points: tuple = ()

    def constraint(self, *users) -> SubsetRate:
        return self.constraints[frozenset(users)]

    @property
    def sum_rate(self) -> float:
        full = max(self.constraints, key=len)
        return self.constraints[full].rate_bits


def all_subsets(K: int):
    """Nonempty subsets of {1..K}, smallest first, lexicographic within size."""
    users = range(1, K + 1)
    for size in range(1, K + 1):
        for combo in itertools.combinations(users, size):
            yield frozenset(combo)


def subset_label(subset) -> str:
    return "R" + "".join(str(k) for k in sorted(subset))


def draw_users(config: LinkConfig, seeds) -> list[UserConstellation]:
    """One constellation per user from the config's correlation model."""
    cov = build_user_covariance(config.M, config.correlation)
    sampler = ConstellationSampler(cov)
    return [sampler.sample(s) for s in seeds]


def _mixture_for_subset(config: LinkConfig, users, subset) -> GaussianMixture:
    chosen = [users[k - 1] for k in sorted(subset)]
    joint = superpose(chosen)
    return GaussianMixture(means=np.sqrt(config.P) * joint.points,
                           noise_variance=config.noise_variance)


def subset_rate(config: LinkConfig, users: list[UserConstellation], subset,
                seed: int | None = None) -> SubsetRate:
    """I(x_S; y | x_{S^c}) = h(subset-superposition mixture) - h(n), >= 0."""
    subset = frozenset(subset)
    if not subset or not subset <= set(range(1, config.K + 1)):
        raise ValueError(f"subset must be a nonempty subset of 1..{config.K}")
    if len(users) != config.K:
        raise ValueError(f"need {config.K} user constellations")
    mix = _mixture_for_subset(config, users, subset)
    est = estimate_entropy(mix, estimator=config.estimator,
                           n_samples=config.mc_samples, seed=seed)
    h_n = noise_entropy(config.noise_variance)
    lo, hi = entropy_bounds(mix)
    return SubsetRate(
        subset=subset,
        rate_bits=max(0.0, est.value - h_n),
        std_error_bits=est.std_error,
        lower_bound_bits=max(0.0, lo.value - h_n),
        upper_bound_bits=max(0.0, hi.value - h_n),
    )


def single_user_rate(config: LinkConfig, constellation: UserConstellation,
                     seed: int | None = None) -> SubsetRate:
    """I(x(m); y) = h(y) - h(n) for a single-user link."""
    if config.K != 1:
        raise ValueError("single_user_rate requires K = 1")
    return subset_rate(config, [constellation], {1}, seed=seed)


def mac_region(config: LinkConfig, users: list[UserConstellation],
               seeds=None) -> RateRegion:
    """All subset constraints; for K=2 also the two pentagon corners."""
    if config.K < 2:
        raise ValueError("mac_region requires K >= 2")
    subsets = list(all_subsets(config.K))
    if seeds is None:
        seeds = [None] * len(subsets)
    constraints = {
        s: subset_rate(config, users, s, seed=seed)
        for s, seed in zip(subsets, seeds)
    }
    corners = ()
    if config.K == 2:
        corners = _two_user_corners(constraints)
    return RateRegion(constraints=constraints, corner_points=corners)


def _two_user_corners(constraints) -> tuple:
    r1 = constraints[frozenset({1})].rate_bits
    r2 = constraints[frozenset({2})].rate_bits
    rs = constraints[frozenset({1, 2})].rate_bits
    corner1 = (r1, max(0.0, rs - r1))
    corner2 = (max(0.0, rs - r2), r2)
    return (corner1, corner2)


def awgn_capacity(P: float, noise_variance: float, complex_channel: bool = False) -> float:
    """Gaussian-codebook capacity; real channel (1/2) log2(1 + SNR) by default."""
    if not (noise_variance > 0):
        raise ValueError("noise_variance must be positive")
    c = np.log2(1.0 + P / noise_variance)
    return float(c if complex_channel else 0.5 * c)


def awgn_mac_region(K: int, P: float, noise_variance: float,
                    complex_channel: bool = False) -> RateRegion:
    """Equal-power AWGN MAC region: constraint(S) = (1/2) log2(1 + |S| SNR)."""
    if K < 1:
        raise ValueError("K must be >= 1")
    constraints = {}
    for s in all_subsets(K):
        c = awgn_capacity(len(s) * P, noise_variance, complex_channel)
        constraints[s] = SubsetRate(subset=s, rate_bits=c,
                                    lower_bound_bits=c, upper_bound_bits=c)
    corners = _two_user_corners(constraints) if K == 2 else ()
    return RateRegion(constraints=constraints, corner_points=corners)


@dataclass(frozen=True)
class ErgodicRate:
    """Mean constraint over constellation draws, with its standard error."""

    subset: frozenset
    mean_bits: float
    std_error_bits: float
    lower_mean_bits: float
    upper_mean_bits: float
    realizations: int

    @property
    def label(self) -> str:
        return subset_label(self.subset)


def ergodic_average(config: LinkConfig, master_seed: int = 0) -> dict:
    """Average each subset constraint over R independent constellation draws.

    Deterministic given master_seed: per-realization user seeds and estimator
    seeds all derive from one SeedSequence. The reported standard error is the
    spread across realizations (the estimator is exact under quadrature).
    """
    R = config.realizations
    subsets = list(all_subsets(config.K))
    n_sub = len(subsets)
    seed_pool = np.random.SeedSequence(master_seed).generate_state(
        R * (config.K + n_sub), dtype=np.uint64).reshape(R, config.K + n_sub)

    samples = {s: np.empty(R) for s in subsets}
    lowers = {s: np.empty(R) for s in subsets}
    uppers = {s: np.empty(R) for s in subsets}
    for r in range(R):
        users = draw_users(config, seed_pool[r, :config.K])
        for j, s in enumerate(subsets):
            sr = subset_rate(config, users, s, seed=int(seed_pool[r, config.K + j]))
            samples[s][r] = sr.rate_bits
            lowers[s][r] = sr.lower_bound_bits
            uppers[s][r] = sr.upper_bound_bits

    out = {}
    for s in subsets:
        x = samples[s]
        se = float(x.std(ddof=1) / np.sqrt(R)) if R > 1 else 0.0
        out[s] = ErgodicRate(subset=s, mean_bits=float(x.mean()), std_error_bits=se,
                             lower_mean_bits=float(lowers[s].mean()),
                             upper_mean_bits=float(uppers[s].mean()),
                             realizations=R)
    return out
