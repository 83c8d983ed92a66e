"""Empirical Lipschitz bounds and distortion of embedding handles.

Pair evaluation is chunked with a fixed chunk size and merged in chunk order,
so a report depends only on the seed, never on the worker count.
"""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from . import group_actions as ga
from .embeddings import EmbeddingHandle
from .errors import BadMix, NoValidPairs

DEGENERATE = 1e-12
COLLAPSE_TOL = 1e-9
REL_SLACK = 1e-6
ABS_SLACK = 1e-9
MAX_STORED_VIOLATIONS = 100
CHUNK = 4096
DEFAULT_MIX = (0.4, 0.3, 0.3)
NEAR_EPS = (1e-3, 1e-6)
TIGHTNESS = 0.99
# Below this relative pair distance the ratio is dominated by round-off, so the search ignores it.
ADV_REL_FLOOR = 1e-6


# ---------------------------------------------------------------------------
# Pair sampling


def _mix_counts(n: int, mix) -> list[int]:
    mix = tuple(float(w) for w in mix)
    if len(mix) != 3 or any(w < 0 or not math.isfinite(w) for w in mix) or abs(sum(mix) - 1) > 1e-9:
        raise BadMix(f"mix must be three nonnegative weights summing to 1, got {mix}")
    counts = [int(math.floor(n * w)) for w in mix]
    counts[int(np.argmax(mix))] += n - sum(counts)
    return counts


def _perturb(handle: EmbeddingHandle, x: np.ndarray, eps: np.ndarray, rng) -> np.ndarray:
    """``x + eps * |x| * u`` with ``u`` a random unit direction (glue flags untouched)."""
    glued = handle.input_kind == "glued"
    core = x[..., :-1] if glued else x
    flat = core.reshape(len(x), -1)
    if np.iscomplexobj(flat):
        u = rng.standard_normal(flat.shape) + 1j * rng.standard_normal(flat.shape)
    else:
        u = rng.standard_normal(flat.shape)
    u /= np.linalg.norm(u, axis=-1, keepdims=True)
    size = np.maximum(np.linalg.norm(flat, axis=-1), 1e-3)
    moved = (flat + (eps * size)[:, None] * u).reshape(core.shape)
    return np.concatenate([moved, x[..., -1:]], axis=-1) if glued else moved


def sample_pairs(handle: EmbeddingHandle, n: int, mix=DEFAULT_MIX, seed: int = 0, scale: float = 1.0):
    """Pairs ``(X, Y)`` mixing independent, near-diagonal and near-orbit draws."""
    n_ind, n_diag, n_orb = _mix_counts(n, mix)
    if n == 0:
        empty = handle.sample_points(ga.make_rng(seed), 0, scale)
        return empty, empty.copy()
    streams = [ga.make_rng(s) for s in np.random.SeedSequence(seed).spawn(3)]
    xs, ys = [], []
    if n_ind:
        xs.append(handle.sample_points(streams[0], n_ind, scale))
        ys.append(handle.sample_points(streams[0], n_ind, scale))
    if n_diag:
        x = handle.sample_points(streams[1], n_diag, scale)
        eps = np.array(NEAR_EPS)[np.arange(n_diag) % len(NEAR_EPS)]
        xs.append(x)
        ys.append(_perturb(handle, x, eps, streams[1]))
    if n_orb:
        x = handle.sample_points(streams[2], n_orb, scale)
        eps = np.array(NEAR_EPS)[np.arange(n_orb) % len(NEAR_EPS)]
        xs.append(x)
        ys.append(handle.orbit_images(streams[2], _perturb(handle, x, eps, streams[2])))
    return np.concatenate(xs), np.concatenate(ys)


# ---------------------------------------------------------------------------
# Reports


def encode_array(a) -> dict[str, Any]:
    a = np.asarray(a)
    if np.iscomplexobj(a):
        data = np.stack([a.real, a.imag], axis=-1).ravel()
    else:
        data = a.astype(float).ravel()
    return {"shape": list(a.shape), "complex": bool(np.iscomplexobj(a)), "data": [float(v) for v in data]}


def decode_array(rec: dict[str, Any]) -> np.ndarray:
    flat = np.array(rec["data"], dtype=float)
    if rec.get("complex"):
        flat = flat[0::2] + 1j * flat[1::2]
    return flat.reshape(rec["shape"])


@dataclass
class Witness:
    x: np.ndarray
    y: np.ndarray
    ratio: float

    def to_json(self) -> dict[str, Any]:
        return {"x": encode_array(self.x), "y": encode_array(self.y), "ratio": self.ratio}


@dataclass
class DistortionReport:
    alpha_hat: float
    beta_hat: float
    witness_min: Witness
    witness_max: Witness
    n_pairs: int
    n_valid: int
    seed: int | None
    violations: list[dict[str, Any]] = field(default_factory=list)
    violation_count: int = 0
    runtime_seconds: float = 0.0
    label: str = ""
    claim: Any = None

    @property
    def kappa_hat(self) -> float:
        return self.beta_hat / self.alpha_hat if self.alpha_hat > 0 else math.inf

    def to_json(self) -> dict[str, Any]:
        return {
            "label": self.label,
            "claim": self.claim,
            "alpha_hat": self.alpha_hat,
            "beta_hat": self.beta_hat,
            "kappa_hat": self.kappa_hat,
            "n_pairs": self.n_pairs,
            "n_valid": self.n_valid,
            "seed": self.seed,
            "witnesses": {"min": self.witness_min.to_json(), "max": self.witness_max.to_json()},
            "violations": self.violations,
            "violation_count": self.violation_count,
            "runtime_seconds": self.runtime_seconds,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)

    def csv_row(self) -> dict[str, Any]:
        lo, hi = claim_bounds(self.claim)
        return {
            "label": self.label,
            "alpha_hat": self.alpha_hat,
            "beta_hat": self.beta_hat,
            "kappa_hat": self.kappa_hat,
            "claim_low": lo,
            "claim_high": hi,
            "n_pairs": self.n_pairs,
            "violations": self.violation_count,
            "seed": self.seed,
        }


def claim_bounds(claim) -> tuple[float | None, float | None]:
    if claim is None:
        return None, None
    if isinstance(claim, (tuple, list)):
        return float(claim[0]), float(claim[1])
    return float(claim), float(claim)


@dataclass
class _ChunkStats:
    lo: float
    lo_idx: int
    hi: float
    hi_idx: int
    valid: int
    violations: list
    violation_count: int


def _evaluate_chunk(handle, metric, X, Y, offset) -> tuple[np.ndarray, np.ndarray]:
    d = np.asarray(metric(X, Y), dtype=float)
    e = np.asarray(handle.output_distance(handle.evaluate(X), handle.evaluate(Y)), dtype=float)
    return d, e


def _violations(handle, d, e, offset):
    alpha, beta = handle.alpha_claim, handle.beta_claim
    slack = ABS_SLACK * (1 + d)
    bad = []
    degenerate = d <= DEGENERATE
    collapse = degenerate & (e > COLLAPSE_TOL)
    bad.append((collapse, "collapse", 0.0))
    if alpha is not None:
        bad.append((~degenerate & (e < alpha * d * (1 - REL_SLACK) - slack), "lower", alpha))
    if beta is not None:
        bad.append((~degenerate & (e > beta * d * (1 + REL_SLACK) + slack), "upper", beta))
    found = []
    for mask, kind, bound in bad:
        for i in np.flatnonzero(mask):
            found.append((int(i) + offset, kind, float(bound), float(d[i]), float(e[i])))
    found.sort()
    return found


def _ratio_floor(X, Y, rel_floor: float):
    """Smallest quotient distance whose ratio enters the statistics."""
    if not rel_floor:
        return DEGENERATE
    size = np.linalg.norm(np.asarray(X).reshape(len(X), -1), axis=-1)
    size += np.linalg.norm(np.asarray(Y).reshape(len(Y), -1), axis=-1)
    return np.maximum(DEGENERATE, rel_floor * np.maximum(size, 1.0))


def _chunk_stats(handle, metric, X, Y, offset, rel_floor: float = 0.0) -> _ChunkStats:
    d, e = _evaluate_chunk(handle, metric, X, Y, offset)
    valid = d > _ratio_floor(X, Y, rel_floor)
    found = _violations(handle, d, e, offset)
    if not valid.any():
        return _ChunkStats(math.inf, -1, -math.inf, -1, 0, found[:MAX_STORED_VIOLATIONS], len(found))
    ratio = np.where(valid, e / np.where(valid, d, 1.0), np.nan)
    i_lo = int(np.nanargmin(ratio))
    i_hi = int(np.nanargmax(ratio))
    return _ChunkStats(
        float(ratio[i_lo]), i_lo + offset, float(ratio[i_hi]), i_hi + offset, int(valid.sum()),
        found[:MAX_STORED_VIOLATIONS], len(found),
    )


def estimate_distortion(
    handle: EmbeddingHandle,
    pairs,
    oracle=None,
    threads: int = 1,
    seed: int | None = None,
    label: str | None = None,
    rel_floor: float = 0.0,
) -> DistortionReport:
    """Extreme ratios ``|f(x) - f(y)| / d([x],[y])`` over the pairs, with bound violations.

    Ratios use pairs with ``d > 1e-12``. A positive ``rel_floor`` further drops
    pairs with ``d <= rel_floor * max(|x| + |y|, 1)``, where float64 round-off in
    ``f`` and ``d`` (about ``eps * |x|``) swamps the ratio; violation checks
    still see every pair.
    """
    start = time.perf_counter()
    X, Y = pairs
    X = np.asarray(X)
    Y = np.asarray(Y)
    metric = oracle if oracle is not None else handle.metric
    n = len(X)
    bounds = [(s, min(s + CHUNK, n)) for s in range(0, n, CHUNK)]
    task = lambda b: _chunk_stats(handle, metric, X[b[0] : b[1]], Y[b[0] : b[1]], b[0], rel_floor)  # noqa: E731
    if threads > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            stats = list(pool.map(task, bounds))
    else:
        stats = [task(b) for b in bounds]
    merged = _merge(stats)
    if merged.valid == 0:
        raise NoValidPairs("every pair has quotient distance below the ratio floor")
    viol = [
        {
            "index": i,
            "kind": kind,
            "bound": bound,
            "distance": dist,
            "embedded": emb,
            "x": encode_array(X[i]),
            "y": encode_array(Y[i]),
        }
        for i, kind, bound, dist, emb in merged.violations[:MAX_STORED_VIOLATIONS]
    ]
    return DistortionReport(
        alpha_hat=merged.lo,
        beta_hat=merged.hi,
        witness_min=Witness(X[merged.lo_idx], Y[merged.lo_idx], merged.lo),
        witness_max=Witness(X[merged.hi_idx], Y[merged.hi_idx], merged.hi),
        n_pairs=n,
        n_valid=merged.valid,
        seed=seed,
        violations=viol,
        violation_count=merged.violation_count,
        runtime_seconds=time.perf_counter() - start,
        label=label if label is not None else handle.name,
        claim=_claim_json(handle.kappa_claim),
    )


def _claim_json(claim):
    return list(claim) if isinstance(claim, tuple) else claim


def _merge(stats: list[_ChunkStats]) -> _ChunkStats:
    lo, lo_idx, hi, hi_idx, valid = math.inf, -1, -math.inf, -1, 0
    violations: list = []
    count = 0
    for s in stats:
        # Strict comparisons keep the earliest index on ties, as a sequential scan would.
        if s.valid and s.lo < lo:
            lo, lo_idx = s.lo, s.lo_idx
        if s.valid and s.hi > hi:
            hi, hi_idx = s.hi, s.hi_idx
        valid += s.valid
        count += s.violation_count
        if len(violations) < MAX_STORED_VIOLATIONS:
            violations.extend(s.violations[: MAX_STORED_VIOLATIONS - len(violations)])
    return _ChunkStats(lo, lo_idx, hi, hi_idx, valid, violations, count)


# ---------------------------------------------------------------------------
# Adversarial search


class _Codec:
    """Packs a pair of points into one real parameter vector."""

    def __init__(self, handle: EmbeddingHandle, example: np.ndarray):
        self.shape = example.shape[1:]
        self.complex = np.iscomplexobj(example)
        self.glued = handle.input_kind == "glued"
        self.size = int(np.prod(self.shape)) * (2 if self.complex else 1)

    def encode_points(self, x):
        flat = x.reshape(len(x), -1)
        if self.glued:
            flat = flat[:, :-1]
        if self.complex:
            flat = np.concatenate([flat.real, flat.imag], axis=-1)
        return flat.astype(float)

    def decode_points(self, p, flags):
        if self.complex:
            half = p.shape[-1] // 2
            p = p[..., :half] + 1j * p[..., half:]
        if self.glued:
            p = np.concatenate([p, flags], axis=-1)
        return p.reshape(p.shape[:-1] + self.shape)


def _ratios(handle, metric, X, Y, rel_floor: float = 0.0) -> np.ndarray:
    d = np.asarray(metric(X, Y), dtype=float)
    e = np.asarray(handle.output_distance(handle.evaluate(X), handle.evaluate(Y)), dtype=float)
    ok = d > _ratio_floor(X, Y, rel_floor)
    return np.where(ok, e / np.where(ok, d, 1.0), np.nan)


def adversarial_search(
    handle: EmbeddingHandle,
    oracle=None,
    objective: str = "maximize_ratio",
    restarts: int = 50,
    seed: int = 0,
    n_candidates: int = 4096,
    max_iter: int = 400,
    min_step: float = 1e-8,
    starts=None,
):
    """Compass search over both points of a pair, batched across restarts.

    Starts from the best ``restarts`` pairs among ``n_candidates`` sampled
    with ``seed`` (plus any ``starts``), so the result is never worse than
    the best sampled ratio among pairs above the round-off floor. Returns ``((x, y), ratio)``.
    """
    if restarts < 1:
        raise ValueError("restarts must be at least 1")
    if objective not in ("maximize_ratio", "minimize_ratio"):
        raise ValueError(f"unknown objective {objective!r}")
    metric = oracle if oracle is not None else handle.metric
    sign = 1.0 if objective == "maximize_ratio" else -1.0

    X, Y = sample_pairs(handle, n_candidates, seed=seed)
    if starts is not None:
        X = np.concatenate([X, np.asarray(starts[0])])
        Y = np.concatenate([Y, np.asarray(starts[1])])
    score = sign * _ratios(handle, metric, X, Y, ADV_REL_FLOOR)
    score = np.where(np.isnan(score), -np.inf, score)
    order = np.argsort(-score, kind="stable")[:restarts]
    X, Y, score = X[order], Y[order], score[order]

    codec = _Codec(handle, X)
    fx = X.reshape(len(X), -1)[:, -1:] if codec.glued else None
    fy = Y.reshape(len(Y), -1)[:, -1:] if codec.glued else None
    P = np.concatenate([codec.encode_points(X), codec.encode_points(Y)], axis=-1)
    half = codec.encode_points(X).shape[-1]
    D = P.shape[-1]
    R = len(P)
    step = 0.5 * np.maximum(np.linalg.norm(P[:, :half], axis=-1), 1e-3)
    dirs = np.concatenate([np.eye(D), -np.eye(D)])

    def evaluate(Pc, flags_x, flags_y):
        xs = codec.decode_points(Pc[..., :half], flags_x)
        ys = codec.decode_points(Pc[..., half:], flags_y)
        s = sign * _ratios(handle, metric, xs, ys, ADV_REL_FLOOR)
        return np.where(np.isnan(s), -np.inf, s)

    for _ in range(max_iter):
        active = step >= min_step
        if not active.any():
            break
        idx = np.flatnonzero(active)
        cand = P[idx, None, :] + step[idx, None, None] * dirs[None, :, :]
        flat = cand.reshape(-1, D)
        rep = 2 * D
        gx = np.repeat(fx[idx], rep, axis=0) if codec.glued else None
        gy = np.repeat(fy[idx], rep, axis=0) if codec.glued else None
        vals = evaluate(flat, gx, gy).reshape(len(idx), rep)
        best = np.argmax(vals, axis=1)
        best_val = vals[np.arange(len(idx)), best]
        improved = best_val > score[idx]
        moved = idx[improved]
        P[moved] = cand[improved, best[improved]]
        score[moved] = best_val[improved]
        step[idx[~improved]] *= 0.5

    k = int(np.argmax(score))
    xs = codec.decode_points(P[k : k + 1, :half], fx[k : k + 1] if codec.glued else None)[0]
    ys = codec.decode_points(P[k : k + 1, half:], fy[k : k + 1] if codec.glued else None)[0]
    return (xs, ys), float(sign * score[k])


# ---------------------------------------------------------------------------
# Claim verification


@dataclass(frozen=True)
class Budget:
    n_pairs: int = 20000
    restarts: int = 20
    seed: int = 0
    threads: int = 1
    mix: tuple = DEFAULT_MIX
    max_iter: int = 400


@dataclass
class VerifyResult:
    passed: bool
    report: DistortionReport
    adversarial_max: float
    adversarial_min: float
    reasons: list[str]

    @property
    def kappa_adversarial(self) -> float:
        return self.adversarial_max / self.adversarial_min if self.adversarial_min > 0 else math.inf

    def to_json(self) -> dict[str, Any]:
        out = self.report.to_json()
        out.update(
            passed=self.passed,
            adversarial_max=self.adversarial_max,
            adversarial_min=self.adversarial_min,
            kappa_adversarial=self.kappa_adversarial,
            reasons=self.reasons,
        )
        return out


def verify_claims(handle: EmbeddingHandle, oracle=None, budget: Budget = Budget()) -> VerifyResult:
    """Sampling plus both adversarial searches; PASS iff no violations and exact claims are attained."""
    pairs = sample_pairs(handle, budget.n_pairs, budget.mix, budget.seed)
    report = estimate_distortion(handle, pairs, oracle, budget.threads, budget.seed)
    (hx, hy), hi = adversarial_search(handle, oracle, "maximize_ratio", budget.restarts, budget.seed, max_iter=budget.max_iter)
    (lx, ly), lo = adversarial_search(handle, oracle, "minimize_ratio", budget.restarts, budget.seed, max_iter=budget.max_iter)
    reasons = []
    if report.violation_count:
        reasons.append(f"{report.violation_count} sampled bound violation(s)")
    alpha, beta = handle.alpha_claim, handle.beta_claim
    if beta is not None and hi > beta * (1 + REL_SLACK) + ABS_SLACK:
        reasons.append(f"adversarial ratio {hi:.9g} exceeds beta_claim {beta:.9g}")
    if alpha is not None and lo < alpha * (1 - REL_SLACK) - ABS_SLACK:
        reasons.append(f"adversarial ratio {lo:.9g} is below alpha_claim {alpha:.9g}")
    kappa_adv = hi / lo if lo > 0 else math.inf
    upper = handle.kappa_upper
    if upper is not None and kappa_adv > upper * (1 + REL_SLACK):
        reasons.append(f"adversarial distortion {kappa_adv:.9g} exceeds the claimed {upper:.9g}")
    if handle.kappa_exact and upper is not None and kappa_adv < TIGHTNESS * upper:
        reasons.append(f"adversarial distortion {kappa_adv:.9g} below {TIGHTNESS} x exact claim {upper:.9g}")
    return VerifyResult(not reasons, report, hi, lo, reasons)
