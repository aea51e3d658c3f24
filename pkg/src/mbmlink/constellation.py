"""Constellation diagrams, their covariance structure and spectra.

A user's diagram is a vector of M real amplitudes drawn from N(0, Sigma).
K user diagrams superpose into a joint diagram with M^K points whose
covariance has a characteristic low-rank structure: for uncorrelated
per-user entries the spectrum is {K*M^(K-1); M^(K-1) x K(M-1); 0 x rest}.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

SYMMETRY_TOL = 1e-12
PSD_TOL = 1e-9           # eigenvalues >= -PSD_TOL * lambda_max
TRACE_RTOL = 1e-8
MAJORIZE_TOL = 1e-9
DEFAULT_DIM_CAP = 4096   # refuse to materialize joint matrices beyond this


class NotComparableError(ValueError):
    """Spectra with unequal totals are outside the majorization order."""


@dataclass(frozen=True)
class CorrelationModel:
    """Generative model for a user's M x M correlation matrix.

    kind: 'uncorrelated', 'uniform' (every off-diagonal equals rho) or
    'exponential' (entry (n, l) equals rho^|n-l|). rho must lie in [0, 1),
    which keeps all three variants positive semidefinite for every M.
    """

    kind: str = "uncorrelated"
    rho: float = 0.0

    KINDS = ("uncorrelated", "uniform", "exponential")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown correlation kind {self.kind!r}")
        if not (0.0 <= self.rho < 1.0):
            raise ValueError(f"rho must be in [0, 1), got {self.rho}")

    def coefficient(self, n: int, l: int) -> float:
        """Correlation between entries n and l of one user's diagram."""
        if n == l:
            return 1.0
        if self.kind == "uncorrelated":
            return 0.0
        if self.kind == "uniform":
            return self.rho
        return self.rho ** abs(n - l)

    def matrix(self, M: int) -> np.ndarray:
        idx = np.arange(M)
        if self.kind == "uncorrelated":
            return np.eye(M)
        if self.kind == "uniform":
            return (1.0 - self.rho) * np.eye(M) + self.rho * np.ones((M, M))
        return self.rho ** np.abs(idx[:, None] - idx[None, :]).astype(float)

    @property
    def label(self) -> str:
        if self.kind == "uncorrelated" or self.rho == 0.0:
            return "uncorrelated"
        return f"{self.kind}{self.rho:g}"


@dataclass(frozen=True)
class CovarianceMatrix:
    """Symmetric PSD matrix (within tolerance); entries are read-only."""

    entries: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise ValueError(f"covariance must be square and nonempty, got shape {a.shape}")
        if not np.all(np.abs(a - a.T) <= SYMMETRY_TOL):
            raise ValueError("covariance matrix is not symmetric within 1e-12")
        a = a.copy()
        a.flags.writeable = False
        object.__setattr__(self, "entries", a)
        w = np.linalg.eigvalsh(a)
        lam_max = max(w[-1], 0.0)
        if w[0] < -PSD_TOL * max(lam_max, 1.0):
            raise ValueError(f"covariance has negative eigenvalue {w[0]:.3e}")

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class UserConstellation:
    """One user's M realized amplitudes plus the seed that produced them."""

    amplitudes: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        a = np.asarray(self.amplitudes, dtype=float)
        if a.ndim != 1 or a.size < 1:
            raise ValueError("amplitudes must be a nonempty 1-D vector")
        if not np.all(np.isfinite(a)):
            raise ValueError("amplitudes must be finite")
        a = a.copy()
        a.flags.writeable = False
        object.__setattr__(self, "amplitudes", a)

    @property
    def M(self) -> int:
        return self.amplitudes.size


@dataclass(frozen=True)
class JointConstellation:
    """M^K superposed points, row-major over message tuples (m_1 slowest)."""

    K: int
    M: int
    points: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.points, dtype=float)
        if p.size != self.M ** self.K:
            raise ValueError(f"expected {self.M ** self.K} points, got {p.size}")
        p = p.copy()
        p.flags.writeable = False
        object.__setattr__(self, "points", p)

    def point(self, messages: tuple[int, ...]) -> float:
        if len(messages) != self.K:
            raise ValueError(f"need {self.K} message indices")
        flat = 0
        for m in messages:
            flat = flat * self.M + m
        return float(self.points[flat])


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues sorted descending."""

    eigenvalues: np.ndarray = field(default_factory=lambda: np.array([]))

    def __post_init__(self):
        w = np.sort(np.asarray(self.eigenvalues, dtype=float))[::-1].copy()
        w.flags.writeable = False
        object.__setattr__(self, "eigenvalues", w)

    def __len__(self):
        return self.eigenvalues.size

    @property
    def total(self) -> float:
        return float(self.eigenvalues.sum())

    def zero_count(self, tol: float = 1e-8) -> int:
        scale = max(abs(self.eigenvalues[0]), 1.0) if len(self) else 1.0
        return int(np.sum(np.abs(self.eigenvalues) <= tol * scale))


def build_user_covariance(M: int, model: CorrelationModel) -> CovarianceMatrix:
    """Unit-diagonal M x M covariance under the given correlation model."""
    if M < 1:
        raise ValueError(f"M must be >= 1, got {M}")
    return CovarianceMatrix(model.matrix(M))


def _psd_factor(cov: CovarianceMatrix) -> np.ndarray:
    # eigendecomposition factor so rank-deficient matrices are accepted;
    # Cholesky would reject exactly the singular joint matrices we care about
    w, v = np.linalg.eigh(cov.entries)
    w = np.clip(w, 0.0, None)
    return v * np.sqrt(w)[None, :]


def sample_constellation(cov: CovarianceMatrix, seed: int) -> UserConstellation:
    """Draw one diagram x = L z with z standard normal and L L^T = cov."""
    rng = np.random.default_rng(seed)
    z = rng.standard_normal(cov.dim)
    return UserConstellation(amplitudes=_psd_factor(cov) @ z, seed=int(seed))


class ConstellationSampler:
    """Reusable sampler: factorizes the covariance once, then draws cheaply."""

    def __init__(self, cov: CovarianceMatrix):
        self.cov = cov
        self._factor = _psd_factor(cov)

    def sample(self, seed) -> UserConstellation:
        rng = np.random.default_rng(seed)
        z = rng.standard_normal(self.cov.dim)
        stored = int(seed) if np.isscalar(seed) else None
        return UserConstellation(amplitudes=self._factor @ z, seed=stored)


def superpose(users: list[UserConstellation]) -> JointConstellation:
    """All M^K sums x_1(m_1) + ... + x_K(m_K), row-major (m_1 slowest)."""
    if not users:
        raise ValueError("need at least one user")
    M = users[0].M
    if any(u.M != M for u in users):
        raise ValueError(f"all users must share M={M}")
    points = users[0].amplitudes
    for u in users[1:]:
        points = np.add.outer(points, u.amplitudes).ravel()
    return JointConstellation(K=len(users), M=M, points=points)


def joint_covariance(
    K: int,
    M: int,
    models: CorrelationModel | list[CorrelationModel] | None = None,
    dim_cap: int = DEFAULT_DIM_CAP,
) -> CovarianceMatrix:
    """Covariance of the joint diagram: entry((m),(m')) = sum_k rho_k(m_k, m'_k).

    With row-major indexing this is sum_k 1 x ... x R_k x ... x 1 (Kronecker
    factors of all-ones except R_k in slot k), which reproduces the 2-user
    block pattern (D blocks on the diagonal, I blocks elsewhere) literally.
    """
    if K < 1:
        raise ValueError(f"K must be >= 1, got {K}")
    if M < 1:
        raise ValueError(f"M must be >= 1, got {M}")
    dim = M ** K
    if dim > dim_cap:
        raise ValueError(f"joint dimension M^K = {dim} exceeds cap {dim_cap}")
    if models is None:
        models = CorrelationModel()
    if isinstance(models, CorrelationModel):
        models = [models] * K
    if len(models) != K:
        raise ValueError(f"need {K} per-user models, got {len(models)}")

    ones = np.ones((M, M))
    total = np.zeros((dim, dim))
    for k, model in enumerate(models):
        block = np.ones((1, 1))
        for slot in range(K):
            block = np.kron(block, model.matrix(M) if slot == k else ones)
        total += block
    return CovarianceMatrix(total)


def lemma1_spectrum(K: int, M: int) -> Spectrum:
    """Analytic spectrum of the uncorrelated joint covariance.

    One eigenvalue K*M^(K-1), K(M-1) eigenvalues M^(K-1), and
    M^K - 1 - K(M-1) zeros.
    """
    if K < 1 or M < 1:
        raise ValueError("K and M must be >= 1")
    big = float(K * M ** (K - 1))
    mid = float(M ** (K - 1))
    n_zero = M ** K - 1 - K * (M - 1)
    values = [big] + [mid] * (K * (M - 1)) + [0.0] * n_zero
    return Spectrum(np.array(values))


def eigen_spectrum(cov: CovarianceMatrix | np.ndarray) -> Spectrum:
    """Numeric spectrum (descending) of a symmetric matrix."""
    a = cov.entries if isinstance(cov, CovarianceMatrix) else np.asarray(cov, float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("matrix must be square")
    if not np.allclose(a, a.T, atol=1e-10, rtol=0.0):
        raise ValueError("matrix is not symmetric")
    return Spectrum(np.linalg.eigvalsh(a))


def majorizes(a: Spectrum, b: Spectrum, tol: float = MAJORIZE_TOL) -> bool:
    """True iff a majorizes b: partial sums dominate, totals equal.

    Raises NotComparableError when the totals disagree beyond tolerance
    (majorization is only defined on equal-sum vectors).
    """
    if len(a) != len(b):
        raise ValueError(f"length mismatch: {len(a)} vs {len(b)}")
    scale = max(abs(a.total), abs(b.total), 1.0)
    if abs(a.total - b.total) > tol * scale:
        raise NotComparableError(
            f"totals differ ({a.total:.12g} vs {b.total:.12g}); spectra not comparable"
        )
    ca = np.cumsum(a.eigenvalues)
    cb = np.cumsum(b.eigenvalues)
    return bool(np.all(ca[:-1] >= cb[:-1] - tol * max(scale, 1.0)))


def message_tuples(K: int, M: int):
    """Row-major iteration order of the joint diagram (m_1 slowest)."""
    return itertools.product(range(M), repeat=K)
