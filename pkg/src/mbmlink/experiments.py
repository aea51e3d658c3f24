"""Config-driven experiment runner emitting CSV datasets plus a manifest.

Spec files are flat key-value text with dotted section prefixes:

    # fig2.spec
    experiment = fig2_single_user
    snr_grid_db = -5, 0, 5, 10, 15, 20, 25, 30
    master_seed = 1234
    output_path = out
    link.M = 256
    link.realizations = 200
    link.estimator = quadrature
    link.correlation.kind = exponential
    link.correlation.rho = 0.9

Lines are `key = value`; `#` starts a comment; blank lines are ignored.
List values are comma separated. Unknown keys are validation errors.

The CSV contract: UTF-8, LF line endings, '.' decimal separator, header
    experiment,snr_db,subset,estimator,rate_bits,std_error_bits,
    lower_bound_bits,upper_bound_bits,realizations,seed
Rows are sorted by (experiment, snr_db, subset, estimator) before writing,
so parallel execution never changes the output bytes. Fields that do not
apply to a row (e.g. bounds on eigenvalue rows) are left empty. Identical
spec + seed produce byte-identical files.
"""

from __future__ import annotations

import hashlib
import os
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
import scipy

from . import __version__
from .constellation import (
    CorrelationModel,
    build_user_covariance,
    eigen_spectrum,
    joint_covariance,
    lemma1_spectrum,
    sample_constellation,
)
from .entropy import GaussianMixture, entropy_bounds, mc_entropy, noise_entropy, quadrature_entropy
from .rates import LinkConfig, awgn_mac_region, ergodic_average

EXPERIMENTS = (
    "fig1_mac_sumrate",
    "fig2_single_user",
    "fig3_mac_region",
    "lemma1_check",
    "bounds_check",
)
SWEEP_EXPERIMENTS = ("fig1_mac_sumrate", "fig2_single_user", "fig3_mac_region", "bounds_check")

CSV_COLUMNS = ("experiment", "snr_db", "subset", "estimator", "rate_bits",
               "std_error_bits", "lower_bound_bits", "upper_bound_bits",
               "realizations", "seed")

FIG1_USER_POINTS = (2, 4, 16)  # joint diagrams of 4, 16 and 256 points
OUT_DIR_ENV = "MBMLINK_OUT_DIR"


class SpecFormatError(ValueError):
    """Raised for unparseable spec text (syntax, not semantics)."""


@dataclass(frozen=True)
class ExperimentSpec:
    experiment: str
    snr_grid_db: tuple = ()
    link: LinkConfig = field(default_factory=LinkConfig)
    output_path: str = "."
    master_seed: int = 0

    def canonical_text(self) -> str:
        corr = self.link.correlation
        lines = [
            f"experiment = {self.experiment}",
            "snr_grid_db = " + ", ".join(f"{v:.12g}" for v in self.snr_grid_db),
            f"master_seed = {self.master_seed}",
            f"link.K = {self.link.K}",
            f"link.M = {self.link.M}",
            f"link.noise_variance = {self.link.noise_variance:.12g}",
            f"link.correlation.kind = {corr.kind}",
            f"link.correlation.rho = {corr.rho:.12g}",
            f"link.realizations = {self.link.realizations}",
            f"link.estimator = {self.link.estimator}",
            f"link.mc_samples = {self.link.mc_samples}",
        ]
        return "\n".join(lines) + "\n"

    def sha256(self) -> str:
        return hashlib.sha256(self.canonical_text().encode()).hexdigest()


@dataclass(frozen=True)
class ResultRow:
    experiment: str
    snr_db: float | None
    subset: str
    estimator: str
    rate_bits: float
    std_error_bits: float = 0.0
    lower_bound_bits: float | None = None
    upper_bound_bits: float | None = None
    realizations: int = 1
    seed: int = 0


def parse_kv(text: str) -> dict:
    """Parse the flat key-value grammar into a string->string mapping."""
    mapping = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise SpecFormatError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        if not key:
            raise SpecFormatError(f"line {lineno}: empty key")
        if key in mapping:
            raise SpecFormatError(f"line {lineno}: duplicate key {key!r}")
        mapping[key] = value.strip()
    return mapping


_EXPERIMENT_LINK_DEFAULTS = {
    # per-experiment defaults applied when the spec file omits the key
    "fig1_mac_sumrate": {"link.K": 2, "link.M": 2,
                         "link.correlation.kind": "exponential",
                         "link.correlation.rho": 0.9},
    "fig2_single_user": {"link.K": 1, "link.M": 256,
                         "link.correlation.kind": "exponential",
                         "link.correlation.rho": 0.9},
    "fig3_mac_region": {"link.K": 2, "link.M": 8},
    "lemma1_check": {"link.K": 3, "link.M": 3},
    "bounds_check": {"link.K": 1, "link.M": 16},
}

_REQUIRED_K = {"fig1_mac_sumrate": 2, "fig2_single_user": 1,
               "fig3_mac_region": 2, "bounds_check": 1}


def build_spec(mapping: dict) -> tuple[ExperimentSpec | None, list]:
    """Typed spec from a raw mapping; returns (spec, violations).

    Violations carry the offending field path; on any violation the spec
    is None. Unknown keys are violations too (typo safety).
    """
    violations = []
    known = {"experiment", "snr_grid_db", "output_path", "master_seed",
             "link.K", "link.M", "link.P", "link.noise_variance",
             "link.realizations", "link.estimator", "link.mc_samples",
             "link.correlation.kind", "link.correlation.rho"}
    for key in mapping:
        if key not in known:
            violations.append(f"{key}: unknown field")

    experiment = mapping.get("experiment", "")
    if experiment not in EXPERIMENTS:
        violations.append(
            f"experiment: must be one of {', '.join(EXPERIMENTS)}; got {experiment!r}")
        return None, violations

    merged = dict(_EXPERIMENT_LINK_DEFAULTS[experiment])
    merged.update(mapping)

    def take(key, cast, default, check=None, message=""):
        raw = merged.get(key, default)
        try:
            value = cast(raw)
        except (TypeError, ValueError):
            violations.append(f"{key}: cannot parse {raw!r}")
            return default
        if check is not None and not check(value):
            violations.append(f"{key}: {message} (got {value})")
        return value

    K = take("link.K", int, 1, lambda v: v >= 1, "must be >= 1")
    M = take("link.M", int, 2, lambda v: v >= 1, "must be >= 1")
    noise_variance = take("link.noise_variance", float, 1.0,
                          lambda v: v > 0, "must be positive")
    realizations = take("link.realizations", int, 200,
                        lambda v: v >= 1, "must be >= 1")
    estimator = take("link.estimator", str, "quadrature",
                     lambda v: v in ("quadrature", "monte_carlo"),
                     "must be quadrature or monte_carlo")
    mc_samples = take("link.mc_samples", int, 100_000,
                      lambda v: v >= 1000, "must be >= 1000")
    kind = take("link.correlation.kind", str, "uncorrelated",
                lambda v: v in CorrelationModel.KINDS,
                f"must be one of {', '.join(CorrelationModel.KINDS)}")
    rho = take("link.correlation.rho", float, 0.0,
               lambda v: 0.0 <= v < 1.0, "must be in [0, 1)")
    P = take("link.P", float, 1.0, lambda v: v >= 0, "must be >= 0")
    master_seed = take("master_seed", int, 0, lambda v: v >= 0, "must be >= 0")
    output_path = str(merged.get("output_path", "."))

    grid_raw = merged.get("snr_grid_db", "")
    grid = []
    if str(grid_raw).strip():
        try:
            grid = [float(v) for v in str(grid_raw).split(",")]
        except ValueError:
            violations.append(f"snr_grid_db: cannot parse {grid_raw!r}")
    if experiment in SWEEP_EXPERIMENTS and not grid:
        violations.append("snr_grid_db: must be a nonempty list for sweep experiments")

    want_k = _REQUIRED_K.get(experiment)
    if want_k is not None and K != want_k:
        violations.append(f"link.K: {experiment} requires K = {want_k}")
    if experiment in ("fig3_mac_region", "lemma1_check"):
        if M ** K > 4096:
            violations.append(f"link.M: joint size M^K = {M ** K} exceeds the 4096 cap")

    if violations:
        return None, violations

    link = LinkConfig(K=K, M=M, P=P, noise_variance=noise_variance,
                      correlation=CorrelationModel(kind=kind, rho=rho),
                      realizations=realizations, estimator=estimator,
                      mc_samples=mc_samples)
    spec = ExperimentSpec(experiment=experiment, snr_grid_db=tuple(grid),
                          link=link, output_path=output_path,
                          master_seed=master_seed)
    return spec, []


def load_spec(path) -> tuple[ExperimentSpec | None, list]:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    try:
        mapping = parse_kv(text)
    except SpecFormatError as exc:
        return None, [str(exc)]
    return build_spec(mapping)


def validate(source) -> list:
    """Violations for a mapping or spec-file path; empty list means ok."""
    if isinstance(source, dict):
        return build_spec(source)[1]
    return load_spec(source)[1]


# --- experiment bodies ------------------------------------------------------

def _task_seeds(master_seed: int, n: int) -> np.ndarray:
    return np.random.SeedSequence(master_seed).generate_state(n, dtype=np.uint64)


def _curve_models(link: LinkConfig) -> list:
    """Uncorrelated reference plus the configured correlated model."""
    correlated = link.correlation
    if correlated.kind == "uncorrelated":
        correlated = CorrelationModel(kind="exponential", rho=0.9)
    return [CorrelationModel(), correlated]


def _run_fig2(spec: ExperimentSpec, threads: int) -> list:
    link = spec.link
    curves = _curve_models(link)
    tasks = [(c, s) for c in range(len(curves)) for s in range(len(spec.snr_grid_db))]
    seeds = _task_seeds(spec.master_seed, len(tasks))

    def work(i):
        c, s = tasks[i]
        snr_db = spec.snr_grid_db[s]
        config = replace(link, correlation=curves[c]).with_snr_db(snr_db)
        stats = ergodic_average(config, master_seed=int(seeds[i]))
        er = stats[frozenset({1})]
        return [ResultRow(
            experiment=spec.experiment, snr_db=snr_db,
            subset=f"R1|{curves[c].label}", estimator=link.estimator,
            rate_bits=er.mean_bits, std_error_bits=er.std_error_bits,
            lower_bound_bits=er.lower_mean_bits, upper_bound_bits=er.upper_mean_bits,
            realizations=link.realizations, seed=int(seeds[i]))]

    return _gather(work, len(tasks), threads)


def _run_fig1(spec: ExperimentSpec, threads: int) -> list:
    link = spec.link
    curves = _curve_models(link)
    combos = [(mu, c) for mu in FIG1_USER_POINTS for c in range(len(curves))]
    tasks = [(j, s) for j in range(len(combos)) for s in range(len(spec.snr_grid_db))]
    seeds = _task_seeds(spec.master_seed, len(tasks))

    def work(i):
        j, s = tasks[i]
        mu, c = combos[j]
        snr_db = spec.snr_grid_db[s]
        config = replace(link, M=mu, correlation=curves[c]).with_snr_db(snr_db)
        stats = ergodic_average(config, master_seed=int(seeds[i]))
        er = stats[frozenset({1, 2})]
        return [ResultRow(
            experiment=spec.experiment, snr_db=snr_db,
            subset=f"Rsum|M{mu}|{curves[c].label}", estimator=link.estimator,
            rate_bits=er.mean_bits, std_error_bits=er.std_error_bits,
            lower_bound_bits=er.lower_mean_bits, upper_bound_bits=er.upper_mean_bits,
            realizations=link.realizations, seed=int(seeds[i]))]

    return _gather(work, len(tasks), threads)


_FIG3_LABELS = {frozenset({1}): "R1", frozenset({2}): "R2", frozenset({1, 2}): "Rsum"}


def _region_rows(spec, snr_db, estimator, rates, seed, realizations) -> list:
    """Constraint + corner rows for one 2-user region series."""
    rows = []
    for sub, label in _FIG3_LABELS.items():
        mean, se, lo, hi = rates[sub]
        rows.append(ResultRow(
            experiment=spec.experiment, snr_db=snr_db, subset=label,
            estimator=estimator, rate_bits=mean, std_error_bits=se,
            lower_bound_bits=lo, upper_bound_bits=hi,
            realizations=realizations, seed=seed))
    r1 = rates[frozenset({1})][0]
    r2 = rates[frozenset({2})][0]
    rs = rates[frozenset({1, 2})][0]
    corners = {"corner1.R1": r1, "corner1.R2": max(0.0, rs - r1),
               "corner2.R1": max(0.0, rs - r2), "corner2.R2": r2}
    for label, value in corners.items():
        rows.append(ResultRow(
            experiment=spec.experiment, snr_db=snr_db, subset=label,
            estimator=estimator, rate_bits=value,
            realizations=realizations, seed=seed))
    return rows


def _run_fig3(spec: ExperimentSpec, threads: int) -> list:
    link = spec.link
    seeds = _task_seeds(spec.master_seed, len(spec.snr_grid_db))

    def work(s):
        snr_db = spec.snr_grid_db[s]
        config = link.with_snr_db(snr_db)
        stats = ergodic_average(config, master_seed=int(seeds[s]))
        mbm = {sub: (er.mean_bits, er.std_error_bits, er.lower_mean_bits,
                     er.upper_mean_bits) for sub, er in stats.items()}
        rows = _region_rows(spec, snr_db, link.estimator, mbm,
                            int(seeds[s]), link.realizations)
        awgn = awgn_mac_region(2, config.P, config.noise_variance)
        ref = {sub: (sr.rate_bits, 0.0, sr.rate_bits, sr.rate_bits)
               for sub, sr in awgn.constraints.items()}
        rows += _region_rows(spec, snr_db, "awgn", ref, int(seeds[s]), 1)
        return rows

    return _gather(work, len(spec.snr_grid_db), threads)


def _run_lemma1(spec: ExperimentSpec, threads: int) -> list:
    link = spec.link
    numeric = eigen_spectrum(joint_covariance(link.K, link.M))
    analytic = lemma1_spectrum(link.K, link.M)
    rows = []
    for name, spectrum in (("eigh", numeric), ("analytic", analytic)):
        for i, lam in enumerate(spectrum.eigenvalues):
            rows.append(ResultRow(
                experiment=spec.experiment, snr_db=None, subset=f"eig{i:04d}",
                estimator=name, rate_bits=float(lam), seed=spec.master_seed))
    return rows


def _run_bounds(spec: ExperimentSpec, threads: int) -> list:
    link = spec.link
    seeds = _task_seeds(spec.master_seed, 2 * len(spec.snr_grid_db))
    cov = build_user_covariance(link.M, link.correlation)

    def work(s):
        snr_db = spec.snr_grid_db[s]
        config = link.with_snr_db(snr_db)
        constellation = sample_constellation(cov, int(seeds[2 * s]))
        mix = GaussianMixture.from_constellation(
            constellation, config.P, config.noise_variance)
        h_n = noise_entropy(config.noise_variance)
        lo, hi = entropy_bounds(mix)
        lo_rate = max(0.0, lo.value - h_n)
        hi_rate = max(0.0, hi.value - h_n)
        quad = quadrature_entropy(mix)
        mc = mc_entropy(mix, n_samples=link.mc_samples, seed=int(seeds[2 * s + 1]))
        rows = []
        for est in (quad, mc):
            rows.append(ResultRow(
                experiment=spec.experiment, snr_db=snr_db, subset="R1",
                estimator=est.method, rate_bits=max(0.0, est.value - h_n),
                std_error_bits=est.std_error, lower_bound_bits=lo_rate,
                upper_bound_bits=hi_rate, realizations=1, seed=int(seeds[2 * s])))
        return rows

    return _gather(work, len(spec.snr_grid_db), threads)


_RUNNERS = {
    "fig1_mac_sumrate": _run_fig1,
    "fig2_single_user": _run_fig2,
    "fig3_mac_region": _run_fig3,
    "lemma1_check": _run_lemma1,
    "bounds_check": _run_bounds,
}


def _gather(work, n_tasks: int, threads: int) -> list:
    if threads > 1 and n_tasks > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(work, range(n_tasks)))
    else:
        chunks = [work(i) for i in range(n_tasks)]
    return [row for chunk in chunks for row in chunk]


# --- output -----------------------------------------------------------------

def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


def rows_to_csv(rows: list) -> str:
    ordered = sorted(rows, key=lambda r: (
        r.experiment, r.snr_db if r.snr_db is not None else float("-inf"),
        r.subset, r.estimator))
    lines = [",".join(CSV_COLUMNS)]
    for r in ordered:
        lines.append(",".join(_fmt(v) for v in (
            r.experiment, r.snr_db, r.subset, r.estimator, r.rate_bits,
            r.std_error_bits, r.lower_bound_bits, r.upper_bound_bits,
            r.realizations, r.seed)))
    return "\n".join(lines) + "\n"


def _atomic_write(path: str, data: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", text=False)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


@dataclass(frozen=True)
class RunResult:
    rows: list
    csv_path: str
    manifest_path: str
    manifest: dict


def run(spec: ExperimentSpec, out_dir: str | None = None, threads: int = 1) -> RunResult:
    """Execute the experiment; write CSV + manifest atomically.

    Nothing is written unless the whole computation succeeds. Output
    directory precedence: explicit out_dir, then $MBMLINK_OUT_DIR, then
    the spec's output_path.
    """
    violations = validate_spec_object(spec)
    if violations:
        raise ValueError("invalid spec: " + "; ".join(violations))
    directory = out_dir or os.environ.get(OUT_DIR_ENV) or spec.output_path

    rows = _RUNNERS[spec.experiment](spec, threads)
    csv_text = rows_to_csv(rows)

    csv_path = os.path.join(directory, f"{spec.experiment}.csv")
    manifest_path = os.path.join(directory, f"{spec.experiment}.manifest.txt")
    manifest = {
        "experiment": spec.experiment,
        "spec_sha256": spec.sha256(),
        "master_seed": spec.master_seed,
        "realizations": spec.link.realizations,
        "estimator": spec.link.estimator,
        "rows": len(rows),
        "csv": os.path.basename(csv_path),
        "csv_sha256": hashlib.sha256(csv_text.encode()).hexdigest(),
        "mbmlink_version": __version__,
        "numpy_version": np.__version__,
        "scipy_version": scipy.__version__,
    }
    manifest_text = "".join(f"{k} = {v}\n" for k, v in manifest.items())
    _atomic_write(csv_path, csv_text)
    _atomic_write(manifest_path, manifest_text)
    return RunResult(rows=rows, csv_path=csv_path,
                     manifest_path=manifest_path, manifest=manifest)


def validate_spec_object(spec: ExperimentSpec) -> list:
    """Re-check a constructed spec (mirrors build_spec's cross-field rules)."""
    violations = []
    if spec.experiment not in EXPERIMENTS:
        violations.append(f"experiment: unknown {spec.experiment!r}")
        return violations
    if spec.experiment in SWEEP_EXPERIMENTS and not spec.snr_grid_db:
        violations.append("snr_grid_db: must be a nonempty list for sweep experiments")
    want_k = _REQUIRED_K.get(spec.experiment)
    if want_k is not None and spec.link.K != want_k:
        violations.append(f"link.K: {spec.experiment} requires K = {want_k}")
    if spec.experiment in ("fig3_mac_region", "lemma1_check"):
        if spec.link.M ** spec.link.K > 4096:
            violations.append("link.M: joint size exceeds the 4096 cap")
    return violations
