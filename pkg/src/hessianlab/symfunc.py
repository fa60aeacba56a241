"""Elementary symmetric polynomials and the positive cones they generate.

The cone of interest is

    Gamma_m = { lam in R^n : S_1(lam) > 0, ..., S_m(lam) > 0 },

the natural ellipticity domain of the m-Hessian operator.  Conventions:
S_0 = 1 and S_k = 0 for k < 0 or k > n.  The reduced function S_{k;I} is
S_k evaluated with the entries listed in I removed; indices are 0-based.

All evaluators accept arrays with an arbitrary batch shape in the leading
axes and the vector entries in the last axis.  Everything here is a pure
function; the randomized verification suite at the bottom shards cleanly
across workers because its report merge is associative.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError

__all__ = [
    "elementary_symmetric",
    "elementary_symmetric_table",
    "reduced_symmetric",
    "symmetric_gradient",
    "in_cone",
    "cone_mask",
    "cone_margin",
    "sample_cone",
    "verify_cone_inequalities",
    "ConeReport",
    "InequalityResult",
    "ConeSuiteReport",
]


def elementary_symmetric_table(lam, kmax):
    """S_0 .. S_kmax of each vector, by the Newton-triangle recurrence.

    ``lam`` has shape ``(..., n)``; the result has shape ``(..., kmax+1)``.
    The prefix dynamic program is numerically stable for n well beyond 64,
    unlike subset enumeration which is exponential.
    """
    lam = np.asarray(lam, dtype=float)
    n = lam.shape[-1]
    out = np.zeros(lam.shape[:-1] + (kmax + 1,), dtype=float)
    out[..., 0] = 1.0
    kcap = min(kmax, n)
    for i in range(n):
        x = lam[..., i]
        for k in range(min(i + 1, kcap), 0, -1):
            out[..., k] += x * out[..., k - 1]
    return out


def elementary_symmetric(lam, k):
    """S_k(lam).  Returns 1 for k = 0 and 0 for k > n or k < 0."""
    lam = np.asarray(lam, dtype=float)
    if not np.all(np.isfinite(lam)):
        raise InputError("entries must be finite")
    n = lam.shape[-1]
    scalar = lam.ndim == 1
    if k < 0 or k > n:
        val = np.zeros(lam.shape[:-1])
    elif k == 0:
        val = np.ones(lam.shape[:-1])
    else:
        val = elementary_symmetric_table(lam, k)[..., k]
    return float(val) if scalar else val


def reduced_symmetric(lam, k, excluded):
    """S_{k;excluded}(lam): delete the listed entries, then take S_k."""
    lam = np.asarray(lam, dtype=float)
    n = lam.shape[-1]
    idx = sorted(set(int(i) for i in excluded))
    if len(idx) != len(list(excluded)):
        raise InputError("excluded indices must be distinct")
    if idx and (idx[0] < 0 or idx[-1] >= n):
        raise InputError(f"excluded index out of range for n={n}")
    rest = np.delete(lam, idx, axis=-1)
    return elementary_symmetric(rest, k)


def symmetric_gradient(lam, m):
    """Gradient of S_m: the vector (S_{m-1;0}, ..., S_{m-1;n-1}).

    Strictly positive at every index when lam lies in Gamma_m.
    """
    lam = np.asarray(lam, dtype=float)
    n = lam.shape[-1]
    if not 1 <= m <= n:
        raise InputError(f"m={m} out of range 1..{n}")
    scalar = lam.ndim == 1
    lam2 = lam[None, :] if scalar else lam
    out = np.empty(lam2.shape, dtype=float)
    for i in range(n):
        rest = np.delete(lam2, i, axis=-1)
        out[..., i] = elementary_symmetric_table(rest, m - 1)[..., m - 1]
    return out[0] if scalar else out


@dataclass
class ConeReport:
    in_cone: bool
    s_values: np.ndarray  # S_1 .. S_m
    margin: float  # min_k S_k(lam) / S_k(1,...,1)


def in_cone(lam, m):
    """Strict Gamma_m membership test with the normalized margin."""
    lam = np.asarray(lam, dtype=float)
    n = lam.shape[-1]
    if not 1 <= m <= n:
        raise InputError(f"m={m} out of range 1..{n}")
    table = elementary_symmetric_table(lam, m)
    s = table[..., 1 : m + 1]
    norm = np.array([math.comb(n, k) for k in range(1, m + 1)], dtype=float)
    margin = np.min(s / norm, axis=-1)
    ok = bool(np.all(s > 0.0)) if lam.ndim == 1 else np.all(s > 0.0, axis=-1)
    if lam.ndim == 1:
        return ConeReport(in_cone=ok, s_values=s, margin=float(margin))
    return ConeReport(in_cone=ok, s_values=s, margin=margin)


def cone_mask(lam, m):
    """Boolean strict-membership mask for a batch of vectors."""
    table = elementary_symmetric_table(np.asarray(lam, dtype=float), m)
    return np.all(table[..., 1 : m + 1] > 0.0, axis=-1)


def cone_margin(lam, m):
    """min_k S_k / C(n,k) over k = 1..m, batched."""
    lam = np.asarray(lam, dtype=float)
    n = lam.shape[-1]
    table = elementary_symmetric_table(lam, m)
    norm = np.array([math.comb(n, k) for k in range(1, m + 1)], dtype=float)
    return np.min(table[..., 1 : m + 1] / norm, axis=-1)


def sample_cone(rng, n, m, count, low=-1.0, high=3.0, batch=8192):
    """Rejection-sample ``count`` vectors from Gamma_m within [low, high]^n.

    The box deliberately reaches negative entries: the cone bounds are only
    nontrivial when some lambda_i < 0.
    """
    out = np.empty((count, n), dtype=float)
    got = 0
    while got < count:
        cand = rng.uniform(low, high, size=(batch, n))
        keep = cand[cone_mask(cand, m)]
        take = keep[: count - got]
        out[got : got + take.shape[0]] = take
        got += take.shape[0]
    return out


# --------------------------------------------------------------------------
# Randomized verification of the pointwise cone inequalities.
# --------------------------------------------------------------------------


@dataclass
class InequalityResult:
    passes: int = 0
    fails: int = 0
    worst_slack: float | None = None  # None when the check is vacuous
    witness: list[float] | None = None

    def merge(self, other):
        self.passes += other.passes
        self.fails += other.fails
        if other.worst_slack is not None and (
            self.worst_slack is None or other.worst_slack < self.worst_slack
        ):
            self.worst_slack = other.worst_slack
            self.witness = other.witness


@dataclass
class ConeSuiteReport:
    n: int
    m: int
    samples: int
    seed: int
    tol: float
    theta_hat: float
    theta_explicit: float
    results: dict[str, InequalityResult] = field(default_factory=dict)

    def all_pass(self):
        return all(r.fails == 0 for r in self.results.values())

    def to_dict(self):
        doc = {
            name: {
                "pass": r.passes,
                "fail": r.fails,
                "worst_slack": r.worst_slack,
                "witness": r.witness,
            }
            for name, r in sorted(self.results.items())
        }
        doc["_meta"] = {
            "n": self.n,
            "m": self.m,
            "samples": self.samples,
            "seed": self.seed,
            "tol": self.tol,
            "theta_hat": self.theta_hat,
            "theta_explicit": self.theta_explicit,
        }
        return doc

    def to_json(self, indent=2):
        return json.dumps(self.to_dict(), indent=indent, sort_keys=True)


def _slack_result(lhs, rhs, lam, tol):
    """Result for lhs <= rhs checked with relative slack.

    Slack is (rhs - lhs) / max(1, |lhs|, |rhs|); S_k spans many orders of
    magnitude so an absolute tolerance would be meaningless.
    """
    scale = np.maximum(1.0, np.maximum(np.abs(lhs), np.abs(rhs)))
    slack = (rhs - lhs) / scale
    worst = int(np.argmin(slack))
    fails = int(np.count_nonzero(slack < -tol))
    return InequalityResult(
        passes=slack.shape[0] - fails,
        fails=fails,
        worst_slack=float(slack[worst]),
        witness=[float(x) for x in lam[worst]],
    )


def _equality_result(diff, lam, tol):
    """Result for an identity |diff| <= tol (relative scaling already applied)."""
    slack = -np.abs(diff)
    worst = int(np.argmin(slack))
    fails = int(np.count_nonzero(slack < -tol))
    return InequalityResult(
        passes=slack.shape[0] - fails,
        fails=fails,
        worst_slack=float(slack[worst]),
        witness=[float(x) for x in lam[worst]],
    )


def _reduced_tables(lam, kmax):
    """Stack of S_{k;i} tables: shape (batch, n, kmax+1)."""
    n = lam.shape[-1]
    out = np.empty(lam.shape[:-1] + (n, kmax + 1), dtype=float)
    for i in range(n):
        rest = np.delete(lam, i, axis=-1)
        out[..., i, :] = elementary_symmetric_table(rest, kmax)
    return out


def _shard_checks(n, m, count, seed, tol):
    rng = np.random.default_rng(seed)
    lam = sample_cone(rng, n, m, count)
    mu = sample_cone(rng, n, m, count)
    avec = rng.normal(size=(count, n))
    lam_gn = sample_cone(rng, n, n, count)  # Gamma_n samples for Maclaurin

    ls = np.sort(lam, axis=-1)[:, ::-1]  # paper convention: non-increasing
    table = elementary_symmetric_table(lam, m)
    table_s = elementary_symmetric_table(ls, m)
    red = _reduced_tables(lam, m)
    red_s = _reduced_tables(ls, m)
    s_m = table[:, m]
    theta_explicit = 1.0 / ((n - m) ** m * math.comb(n, m))

    results: dict[str, InequalityResult] = {}

    # (1) monotonicity of S_m along the cone: S_m(lam) <= S_m(lam + mu).
    results["monotonicity"] = _slack_result(
        s_m, elementary_symmetric_table(lam + mu, m)[:, m], lam, tol
    )

    # (2) positivity of every reduced function S_{k;I} with k + |I| <= m.
    if m >= 2:
        best = np.full(count, np.inf)
        from itertools import combinations

        for t in range(1, m):
            for subset in combinations(range(n), t):
                rest = np.delete(lam, subset, axis=-1)
                tab = elementary_symmetric_table(rest, m - t)
                for k in range(1, m - t + 1):
                    val = tab[:, k]
                    scale = np.maximum(1.0, np.abs(val))
                    best = np.minimum(best, val / scale)
        worst = int(np.argmin(best))
        fails = int(np.count_nonzero(best < -tol))
        results["restricted_positivity"] = InequalityResult(
            passes=count - fails,
            fails=fails,
            worst_slack=float(best[worst]),
            witness=[float(x) for x in lam[worst]],
        )
    else:
        results["restricted_positivity"] = InequalityResult(passes=count)

    # (3) expansion identity S_k = S_{k;i} + lam_i S_{k-1;i} for all i, k <= m,
    #     plus the full cascade down to the bare product on sorted entries.
    diff = np.zeros(count)
    for k in range(1, m + 1):
        lhs = table[:, k][:, None]
        rhs = red[:, :, k] + lam * red[:, :, k - 1]
        scale = np.maximum(1.0, np.maximum(np.abs(lhs), np.abs(rhs)))
        diff = np.maximum(diff, np.max(np.abs(lhs - rhs) / scale, axis=-1))
    cascade = np.zeros(count)
    prefix = np.ones(count)
    for j in range(m - 1):
        rest = np.delete(ls, range(j + 1), axis=-1)
        cascade += prefix * elementary_symmetric_table(rest, m - 1 - j)[:, m - 1 - j]
        prefix = prefix * ls[:, j]
    cascade += prefix  # final term lam_1 ... lam_{m-1}
    lhs = table_s[:, m - 1] if m >= 1 else np.ones(count)
    scale = np.maximum(1.0, np.maximum(np.abs(lhs), np.abs(cascade)))
    diff = np.maximum(diff, np.abs(lhs - cascade) / scale)
    results["expansion_identity"] = _equality_result(diff, lam, tol)

    # (4) S_{m-1}(lam) >= lam_1 ... lam_{m-1} on sorted entries.
    prod_top = np.prod(ls[:, : m - 1], axis=-1) if m >= 2 else np.ones(count)
    results["product_lower_bound"] = _slack_result(
        prod_top, table_s[:, m - 1], lam, tol
    )

    # (5) |lam_{i_1} ... lam_{i_k}| <= (n-k)^k S_k for k <= m-1; the worst
    #     subset is the product of the k largest magnitudes.
    if m >= 2:
        mag = np.sort(np.abs(lam), axis=-1)[:, ::-1]
        best = np.full(count, np.inf)
        worst_val = None
        for k in range(1, m):
            lhs = np.prod(mag[:, :k], axis=-1)
            rhs = (n - k) ** k * table[:, k]
            scale = np.maximum(1.0, np.maximum(np.abs(lhs), np.abs(rhs)))
            best = np.minimum(best, (rhs - lhs) / scale)
        worst = int(np.argmin(best))
        fails = int(np.count_nonzero(best < -tol))
        results["product_bound"] = InequalityResult(
            passes=count - fails,
            fails=fails,
            worst_slack=float(best[worst]),
            witness=[float(x) for x in lam[worst]],
        )
    else:
        results["product_bound"] = InequalityResult(passes=count)

    # (6) lam_j S_{m-1;j} >= theta S_m for j <= m.  The existence proof gives
    #     theta = 1 on the branch S_{m;j} <= 0 and 1/((n-m)^m C(n,m)) otherwise;
    #     we check the branch-wise explicit bound and record the empirical
    #     infimum theta_hat.
    ratios = np.empty((count, m))
    best = np.full(count, np.inf)
    sm_sorted = table_s[:, m]
    for j in range(m):
        smj = red_s[:, j, : m + 1]
        lhs_j = ls[:, j] * smj[:, m - 1]
        ratios[:, j] = lhs_j / sm_sorted
        bound = np.where(smj[:, m] <= 0.0, 1.0, theta_explicit)
        rhs_j = bound * sm_sorted
        scale = np.maximum(1.0, np.maximum(np.abs(lhs_j), np.abs(rhs_j)))
        best = np.minimum(best, (lhs_j - rhs_j) / scale)
    worst = int(np.argmin(best))
    fails = int(np.count_nonzero(best < -tol))
    results["gradient_lower_bound"] = InequalityResult(
        passes=count - fails,
        fails=fails,
        worst_slack=float(best[worst]),
        witness=[float(x) for x in ls[worst]],
    )
    theta_hat = float(np.min(ratios))

    # (7) weighted Cauchy-Schwarz bound:
    #     (n S_1 / S_m) sum a_i^2 S_{m-1;i} >= theta sum a_i^2.
    grad = red[:, :, m - 1]
    lhs = (n * table[:, 1] / s_m) * np.sum(avec**2 * grad, axis=-1)
    rhs = theta_explicit * np.sum(avec**2, axis=-1)
    results["weighted_cauchy_schwarz"] = _slack_result(rhs, lhs, lam, tol)

    # (8) Maclaurin-type mixed inequality on Gamma_n:
    #     (S_m / C(n,m))^{1/m} >= S_n^{1/n}.
    tab_n = elementary_symmetric_table(lam_gn, n)
    lhs = tab_n[:, n] ** (1.0 / n)
    rhs = (tab_n[:, m] / math.comb(n, m)) ** (1.0 / m)
    results["maclaurin"] = _slack_result(lhs, rhs, lam_gn, tol)

    return results, theta_hat


def verify_cone_inequalities(n, m, samples, seed, tol=1e-10, workers=1):
    """Sample Gamma_m and check every pointwise inequality of the cone algebra.

    Returns a :class:`ConeSuiteReport`; every inequality must hold with
    relative slack >= -tol.  ``workers`` shards the sample budget; shard
    results merge associatively so the report is independent of scheduling.
    """
    if not 1 <= m < n:
        raise InputError(f"require 1 <= m < n, got n={n}, m={m}")
    if samples < 1:
        raise InputError("samples must be >= 1")
    workers = max(1, int(workers))
    shards = min(workers, samples)
    counts = [samples // shards + (1 if i < samples % shards else 0) for i in range(shards)]
    child_seeds = np.random.SeedSequence(seed).spawn(shards)

    def run(i):
        return _shard_checks(n, m, counts[i], child_seeds[i], tol)

    if shards == 1:
        partials = [run(0)]
    else:
        with ThreadPoolExecutor(max_workers=shards) as ex:
            partials = list(ex.map(run, range(shards)))

    report = ConeSuiteReport(
        n=n,
        m=m,
        samples=samples,
        seed=seed,
        tol=tol,
        theta_hat=math.inf,
        theta_explicit=1.0 / ((n - m) ** m * math.comb(n, m)),
    )
    for results, theta_hat in partials:  # merge in shard order: deterministic
        report.theta_hat = min(report.theta_hat, theta_hat)
        for name, res in results.items():
            if name in report.results:
                report.results[name].merge(res)
            else:
                report.results[name] = res
    return report
