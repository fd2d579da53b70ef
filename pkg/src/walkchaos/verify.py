"""Statistical harness: streaming estimates, distribution tests, convergence
ladders, and the machinery that turns check functions into a reproducible
suite report.

Every threshold and sample size is a parameter; check logic never hard-codes
them. Reports are plain dataclasses serialized to JSON; a report's status can
be recomputed offline from its recorded numbers (including the regime flag),
so the JSON is the artifact of record.
"""

from __future__ import annotations

import hashlib
import json
import math
import time
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import special

from .errors import InsufficientSamplesError

MIN_KS_SAMPLES = 100


def derived_rng(master_seed: int, tag: str) -> np.random.Generator:
    """Independent generator for a named check, stable across runs and
    unaffected by which other checks run (filter invariance)."""
    digest = hashlib.sha256(tag.encode("utf-8")).digest()
    word = int.from_bytes(digest[:8], "little")
    return np.random.default_rng(np.random.SeedSequence([master_seed, word]))


# ---------------------------------------------------------------- estimates

@dataclass(frozen=True)
class EstimateCI:
    mean: float
    stderr: float
    n: int
    ci_level: float = 0.95

    def __post_init__(self) -> None:
        if self.n < 2:
            raise InsufficientSamplesError("need at least 2 samples")
        if not 0.0 < self.ci_level < 1.0:
            raise ValueError("ci_level must lie in (0, 1)")

    @property
    def halfwidth(self) -> float:
        z = float(special.ndtri(0.5 + self.ci_level / 2.0))
        return z * self.stderr

    def covers(self, target: float) -> bool:
        return abs(self.mean - target) <= self.halfwidth

    def z_score(self, target: float) -> float:
        if self.stderr == 0.0:
            return 0.0 if self.mean == target else math.inf
        return (self.mean - target) / self.stderr


def mc_mean(stream: Iterable[float], ci_level: float = 0.95) -> EstimateCI:
    """Single-pass mean and standard error (Welford update).

    Accepts any iterable; numpy arrays take a vectorized path with identical
    semantics (sample variance, ddof=1).
    """
    if isinstance(stream, np.ndarray):
        arr = stream.astype(float).ravel()
        n = arr.size
        if n < 2:
            raise InsufficientSamplesError("need at least 2 samples")
        return EstimateCI(
            float(arr.mean()), float(arr.std(ddof=1) / math.sqrt(n)), n, ci_level
        )
    n = 0
    mean = 0.0
    m2 = 0.0
    for x in stream:
        n += 1
        delta = x - mean
        mean += delta / n
        m2 += delta * (x - mean)
    if n < 2:
        raise InsufficientSamplesError("need at least 2 samples")
    stderr = math.sqrt(m2 / (n - 1)) / math.sqrt(n)
    return EstimateCI(mean, stderr, n, ci_level)


# ---------------------------------------------------------------- KS tests

class KsResult:
    __slots__ = ("distance", "p_value", "n_effective")

    def __init__(self, distance: float, p_value: float, n_effective: float):
        self.distance = distance
        self.p_value = p_value
        self.n_effective = n_effective

    def __repr__(self) -> str:
        return f"KsResult(distance={self.distance:.6g}, p_value={self.p_value:.6g})"


def ks_exponential(samples: Sequence[float], mean: float) -> KsResult:
    """One-sample Kolmogorov-Smirnov against Exponential(mean).

    The p-value uses the asymptotic Kolmogorov distribution, hence the n >= 100
    floor; exact small-sample tables are out of scope.
    """
    arr = np.asarray(samples, dtype=float)
    if arr.size < MIN_KS_SAMPLES:
        raise InsufficientSamplesError(f"need at least {MIN_KS_SAMPLES} samples")
    if mean <= 0:
        raise ValueError("exponential mean must be positive")
    if np.any(arr <= 0):
        raise ValueError("samples must be positive")
    arr = np.sort(arr)
    n = arr.size
    cdf = 1.0 - np.exp(-arr / mean)
    d_plus = np.max(np.arange(1, n + 1) / n - cdf)
    d_minus = np.max(cdf - np.arange(0, n) / n)
    d = float(max(d_plus, d_minus))
    p = float(special.kolmogorov(math.sqrt(n) * d))
    return KsResult(d, p, float(n))


def ks_two_sample(a: Sequence[float], b: Sequence[float]) -> KsResult:
    """Two-sample KS with the asymptotic p-value at the effective sample size."""
    xa = np.sort(np.asarray(a, dtype=float))
    xb = np.sort(np.asarray(b, dtype=float))
    if xa.size < MIN_KS_SAMPLES or xb.size < MIN_KS_SAMPLES:
        raise InsufficientSamplesError(f"need at least {MIN_KS_SAMPLES} samples per side")
    pooled = np.concatenate([xa, xb])
    cdf_a = np.searchsorted(xa, pooled, side="right") / xa.size
    cdf_b = np.searchsorted(xb, pooled, side="right") / xb.size
    d = float(np.max(np.abs(cdf_a - cdf_b)))
    n_eff = xa.size * xb.size / (xa.size + xb.size)
    p = float(special.kolmogorov(math.sqrt(n_eff) * d))
    return KsResult(d, p, n_eff)


# ---------------------------------------------------------------- independence

@dataclass(frozen=True)
class IndependenceResult:
    max_z: float
    bin_counts: tuple[int, ...]
    bin_means: tuple[float, ...]
    merged_bins: int


def independence_check(
    angles: Sequence[float],
    values: Sequence[float],
    n_bins: int = 8,
    min_per_bin: int = 20,
) -> IndependenceResult:
    """Deviation of conditional means of ``values`` across angular bins.

    Bins the angles into ``n_bins`` equal sectors, merges underfilled bins
    into their clockwise neighbor, and returns the largest z-score of a bin
    mean against the global mean. Independence of (angle, value) keeps the
    z-scores at noise level.
    """
    ang = np.mod(np.asarray(angles, dtype=float), 2.0 * math.pi)
    val = np.asarray(values, dtype=float)
    if ang.size != val.size or ang.size == 0:
        raise ValueError("angles and values must be equal-length and nonempty")
    idx = np.minimum((ang / (2.0 * math.pi) * n_bins).astype(int), n_bins - 1)
    groups = [val[idx == k] for k in range(n_bins)]
    merged = 0
    out: list[np.ndarray] = []
    pending = np.empty(0)
    for g in groups:
        g = np.concatenate([pending, g])
        if g.size < min_per_bin:
            pending = g
            merged += 1
            continue
        out.append(g)
        pending = np.empty(0)
    if pending.size:
        if out:
            out[-1] = np.concatenate([out[-1], pending])
        else:
            out.append(pending)
    global_mean = float(val.mean())
    if len(out) <= 1:
        only = out[0] if out else val
        return IndependenceResult(0.0, (int(only.size),), (float(only.mean()),), merged)
    zs = []
    for g in out:
        se = g.std(ddof=1) / math.sqrt(g.size) if g.size > 1 else 0.0
        if se == 0.0:
            zs.append(0.0 if float(g.mean()) == global_mean else math.inf)
        else:
            zs.append(abs(float(g.mean()) - global_mean) / se)
    return IndependenceResult(
        float(max(zs)),
        tuple(int(g.size) for g in out),
        tuple(float(g.mean()) for g in out),
        merged,
    )


# ---------------------------------------------------------------- ladders

@dataclass(frozen=True)
class LadderResult:
    rungs: tuple[float, ...]
    values: tuple[float, ...]
    residuals: tuple[float, ...]
    passed: bool


def convergence_ladder(
    estimator: Callable[[float], float],
    rungs: Sequence[float],
    target: float | None = None,
    strict: bool = False,
) -> LadderResult:
    """Evaluate an estimator along a ladder and test the trend contract.

    With a target, residuals |value - target| must be non-increasing along the
    ladder (strictly decreasing when ``strict``); without one, the raw values
    themselves must be non-increasing. Needs at least 3 rungs to call a trend.
    """
    if len(rungs) < 3:
        raise ValueError("a convergence ladder needs at least 3 rungs")
    values = [float(estimator(r)) for r in rungs]
    if target is None:
        resid = list(values)
    else:
        resid = [abs(v - target) for v in values]
    if strict:
        ok = all(resid[i + 1] < resid[i] for i in range(len(resid) - 1))
    else:
        ok = all(resid[i + 1] <= resid[i] + 1e-15 for i in range(len(resid) - 1))
    return LadderResult(tuple(float(r) for r in rungs), tuple(values), tuple(resid), ok)


# ---------------------------------------------------------------- reports

@dataclass
class CheckReport:
    check_id: str
    claim: str
    observed: float | list
    expected: float | list
    tolerance: float
    status: str
    runtime_s: float = 0.0
    in_regime: bool = True
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def evaluate_status(
    observed: float | list,
    expected: float | list,
    tolerance: float,
    in_regime: bool = True,
) -> str:
    """Recompute a report's status from its recorded numbers.

    Scalar or componentwise |observed - expected| <= tolerance. Out-of-regime
    checks report "regime-flagged" instead of a hard verdict.
    """
    obs = np.atleast_1d(np.asarray(observed, dtype=float))
    exp = np.atleast_1d(np.asarray(expected, dtype=float))
    if obs.shape != exp.shape:
        raise ValueError("observed and expected must have matching shape")
    ok = bool(np.all(np.abs(obs - exp) <= tolerance))
    if not in_regime:
        return "regime-flagged"
    return "pass" if ok else "fail"


def make_report(
    check_id: str,
    claim: str,
    observed,
    expected,
    tolerance: float,
    runtime_s: float = 0.0,
    in_regime: bool = True,
    extra: dict | None = None,
) -> CheckReport:
    status = evaluate_status(observed, expected, tolerance, in_regime)
    return CheckReport(
        check_id=check_id,
        claim=claim,
        observed=observed,
        expected=expected,
        tolerance=tolerance,
        status=status,
        runtime_s=runtime_s,
        in_regime=in_regime,
        extra=extra or {},
    )


RUNTIME_FIELDS = ("runtime_s",)


def canonical_fingerprint(reports: Sequence[CheckReport]) -> str:
    """Deterministic serialization of a suite run, runtime fields stripped.

    Two runs with the same seed must produce identical fingerprints; this is
    the byte-level determinism contract.
    """
    stripped = []
    for r in sorted(reports, key=lambda r: r.check_id):
        d = r.to_dict()
        for k in RUNTIME_FIELDS:
            d.pop(k, None)
        stripped.append(d)
    return json.dumps(stripped, sort_keys=True, separators=(",", ":"))


def write_suite_json(reports: Sequence[CheckReport], path) -> None:
    payload = [r.to_dict() for r in sorted(reports, key=lambda r: r.check_id)]
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_suite_markdown(reports: Sequence[CheckReport], path) -> None:
    lines = [
        "| check | status | observed | expected | tol | runtime (s) |",
        "|---|---|---|---|---|---|",
    ]
    for r in sorted(reports, key=lambda r: r.check_id):
        obs = r.observed if isinstance(r.observed, (int, float)) else list(r.observed)
        exp = r.expected if isinstance(r.expected, (int, float)) else list(r.expected)
        lines.append(
            f"| {r.check_id} | {r.status} | {obs} | {exp} | {r.tolerance} | {r.runtime_s:.2f} |"
        )
    failures = [r.check_id for r in reports if r.status == "fail"]
    lines.append("")
    lines.append(
        "All checks passed." if not failures else f"Failures: {', '.join(sorted(failures))}"
    )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def suite_exit_code(reports: Sequence[CheckReport]) -> int:
    return 0 if all(r.status != "fail" for r in reports) else 1


def run_acceptance_suite(
    checks: Sequence[tuple[str, Callable[[], CheckReport]]],
) -> list[CheckReport]:
    """Execute named checks, recording wall time; a raising check is itself a
    failure (never silently skipped). Reports come back sorted by check_id."""
    reports: list[CheckReport] = []
    for check_id, fn in checks:
        t0 = time.perf_counter()
        try:
            rep = fn()
        except Exception as exc:  # noqa: BLE001 - diagnostics belong in the report
            rep = CheckReport(
                check_id=check_id,
                claim="check raised instead of reporting",
                observed=0.0,
                expected=1.0,
                tolerance=0.0,
                status="fail",
                extra={"error": f"{type(exc).__name__}: {exc}"},
            )
        rep.runtime_s = time.perf_counter() - t0
        reports.append(rep)
    return sorted(reports, key=lambda r: r.check_id)
