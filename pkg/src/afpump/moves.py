"""Neighbourhood functions that turn a solution pair into a new integral point.

Every function returns ``(x_new, touched)`` where ``touched`` lists the
discrete indices the move rewrote (a rewritten value may equal the old one).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .model import EPS_INT, MipInstance, SolutionPair


class MoveKind(enum.Enum):
    RANDOMIZED_ROUNDING = "rr"
    WEAK_PERTURBATION = "wp"
    STRONG_PERTURBATION = "sp"
    WEAK_PERTURBATION_DOMAIN = "wpd"
    STRONG_PERTURBATION_DOMAIN = "spd"


BINARY_ONLY = frozenset({MoveKind.WEAK_PERTURBATION, MoveKind.STRONG_PERTURBATION})
DEFAULT_AFP_MOVES = (
    MoveKind.RANDOMIZED_ROUNDING,
    MoveKind.WEAK_PERTURBATION_DOMAIN,
    MoveKind.STRONG_PERTURBATION_DOMAIN,
)


class NoCandidates(ValueError):
    """A weak perturbation found no variable with positive fractionality."""


@dataclass(frozen=True)
class MoveParams:
    t_fraction: float = 0.1
    strong_low: float = -0.3
    strong_high: float = 0.7
    window_min: float = 50.0
    window_fraction: float = 0.05
    small_domain: float = 10.0  # a
    near_bound: float = 0.1  # beta
    eps_int: float = EPS_INT


def tau(omega: np.ndarray | float) -> np.ndarray | float:
    """Rounding threshold: 2w(1-w) for w <= 0.5, else 1 - 2w(1-w)."""
    t = 2.0 * np.asarray(omega) * (1.0 - np.asarray(omega))
    return np.where(np.asarray(omega) <= 0.5, t, 1.0 - t)


def window(domain: np.ndarray, params: MoveParams) -> np.ndarray:
    return np.maximum(params.window_min, params.window_fraction * domain)


def flip_count_range(list_length: int, params: MoveParams) -> tuple[int, int]:
    """Bounds (inclusive) of the weak-perturbation flip count for a candidate list."""
    T = math.ceil(params.t_fraction * list_length)
    lo = max(1, math.ceil(T / 2))
    hi = min(list_length, max(lo, math.floor(3 * T / 2)))
    return min(lo, list_length), hi


def uniform_integer(rng: np.random.Generator, a: np.ndarray, b: np.ndarray, lower: np.ndarray,
                    upper: np.ndarray, eps: float = EPS_INT) -> np.ndarray:
    """Uniform integer draw from [a, b] intersected with [lower, upper], elementwise."""
    lo = np.maximum(np.ceil(np.asarray(a) - eps), lower)
    hi = np.minimum(np.floor(np.asarray(b) + eps), upper)
    empty = lo > hi
    if np.any(empty):
        mid = np.clip(np.round((np.asarray(a) + np.asarray(b)) / 2.0), lower, upper)
        lo = np.where(empty, mid, lo)
        hi = np.where(empty, mid, hi)
    return lo + np.floor(rng.random(lo.shape) * (hi - lo + 1.0))


def _snap(values: np.ndarray, eps: float) -> np.ndarray:
    r = np.round(values)
    return np.where(np.abs(values - r) <= eps, r, values)


def randomized_round(inst: MipInstance, x_bar: np.ndarray, active: np.ndarray, rng: np.random.Generator,
                     params: MoveParams = MoveParams()) -> tuple[np.ndarray, np.ndarray]:
    active = np.asarray(active, dtype=np.int64)
    out = np.array(x_bar, dtype=float)
    omega = rng.random(active.size)
    vals = np.floor(_snap(out[active], params.eps_int) + tau(omega))
    out[active] = np.clip(vals, inst.lower[active], inst.upper[active])
    return out, active


def _ordered_positive(pair: SolutionPair, candidates: np.ndarray, domain: np.ndarray | None,
                      eps: float) -> np.ndarray:
    frac = np.abs(pair.relaxed[candidates] - pair.integral[candidates])
    keep = frac > eps
    cand = candidates[keep]
    score = frac[keep]
    if domain is not None:
        score = score / np.maximum(domain[keep], 1.0)
    order = np.argsort(-score, kind="stable")
    return cand[order]


def _weak_selection(ordered: np.ndarray, rng: np.random.Generator, params: MoveParams) -> np.ndarray:
    if ordered.size == 0:
        raise NoCandidates("no discrete variable with positive fractionality")
    lo, hi = flip_count_range(ordered.size, params)
    m = int(rng.integers(lo, hi + 1))
    pool = ordered[:hi]
    return np.sort(rng.choice(pool, size=m, replace=False))


def weak_perturb_binary(inst: MipInstance, pair: SolutionPair, active: np.ndarray, rng: np.random.Generator,
                        params: MoveParams = MoveParams()) -> tuple[np.ndarray, np.ndarray]:
    """Flip a random subset drawn from the most fractional binaries."""
    binaries = np.intersect1d(np.asarray(active, dtype=np.int64), inst.binaries)
    chosen = _weak_selection(_ordered_positive(pair, binaries, None, params.eps_int), rng, params)
    out = pair.integral.copy()
    out[chosen] = 1.0 - out[chosen]
    return out, chosen


def strong_perturb_binary(inst: MipInstance, pair: SolutionPair, active: np.ndarray, rng: np.random.Generator,
                          params: MoveParams = MoveParams()) -> tuple[np.ndarray, np.ndarray]:
    binaries = np.intersect1d(np.asarray(active, dtype=np.int64), inst.binaries)
    omega = rng.uniform(params.strong_low, params.strong_high, size=binaries.size)
    frac = np.abs(pair.relaxed[binaries] - pair.integral[binaries])
    flip = binaries[frac + np.maximum(0.0, omega) > 0.5]
    out = pair.integral.copy()
    out[flip] = 1.0 - out[flip]
    return out, flip


def weak_perturb_domain(inst: MipInstance, pair: SolutionPair, active: np.ndarray, rng: np.random.Generator,
                        params: MoveParams = MoveParams()) -> tuple[np.ndarray, np.ndarray]:
    """Redraw the most fractional variables (fractionality scaled by domain size) in a window."""
    active = np.asarray(active, dtype=np.int64)
    domain = inst.upper[active] - inst.lower[active]
    ordered = _ordered_positive(pair, active, domain, params.eps_int)
    chosen = _weak_selection(ordered, rng, params)
    lo, hi = inst.lower[chosen], inst.upper[chosen]
    w = window(hi - lo, params)
    xb = pair.relaxed[chosen]
    up = xb >= pair.integral[chosen]
    a = np.where(up, xb, xb - w)
    b = np.where(up, xb + w, xb)
    out = pair.integral.copy()
    out[chosen] = uniform_integer(rng, a, b, lo, hi, params.eps_int)
    return out, chosen


def strong_domain_interval(x_bar: np.ndarray, x_tilde: np.ndarray, lower: np.ndarray, upper: np.ndarray,
                           params: MoveParams = MoveParams()) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Sampling interval per variable; the first matching case wins. Returns (a, b, case)."""
    D = upper - lower
    w = window(D, params)
    case = np.full(x_bar.shape, 5)
    a = x_bar - w
    b = x_bar + w
    rules = [
        (D < params.small_domain) & (x_bar >= x_tilde),
        (D < params.small_domain) & (x_bar < x_tilde),
        upper - x_tilde <= params.near_bound * D,
        x_tilde - lower <= params.near_bound * D,
    ]
    bounds = [(x_bar, upper), (lower, x_bar), (upper - w, upper), (lower, lower + w)]
    # applied last-to-first so the earliest matching case overwrites the rest
    for k in range(3, -1, -1):
        a = np.where(rules[k], bounds[k][0], a)
        b = np.where(rules[k], bounds[k][1], b)
        case = np.where(rules[k], k + 1, case)
    return a, b, case


def strong_perturb_domain(inst: MipInstance, pair: SolutionPair, active: np.ndarray, rng: np.random.Generator,
                          params: MoveParams = MoveParams()) -> tuple[np.ndarray, np.ndarray]:
    """Redraw half of the discrete variables, chosen uniformly at random."""
    active = np.asarray(active, dtype=np.int64)
    out = pair.integral.copy()
    if active.size == 0:
        return out, active
    count = math.ceil(active.size / 2)
    chosen = np.sort(rng.choice(active, size=count, replace=False))
    lo, hi = inst.lower[chosen], inst.upper[chosen]
    a, b, _ = strong_domain_interval(pair.relaxed[chosen], pair.integral[chosen], lo, hi, params)
    out[chosen] = uniform_integer(rng, a, b, lo, hi, params.eps_int)
    return out, chosen


_PAIR_MOVES = {
    MoveKind.WEAK_PERTURBATION: weak_perturb_binary,
    MoveKind.STRONG_PERTURBATION: strong_perturb_binary,
    MoveKind.WEAK_PERTURBATION_DOMAIN: weak_perturb_domain,
    MoveKind.STRONG_PERTURBATION_DOMAIN: strong_perturb_domain,
}


def available_moves(inst: MipInstance, active: np.ndarray, kinds: Sequence[MoveKind]) -> list[MoveKind]:
    """Filter ``kinds``; the binary-only moves need every active discrete variable to be 0/1."""
    active = np.asarray(active, dtype=np.int64)
    all_binary = np.isin(active, inst.binaries).all()
    return [k for k in kinds if all_binary or k not in BINARY_ONLY]


def apply_move(kind: MoveKind, inst: MipInstance, pair: SolutionPair, rng: np.random.Generator,
               params: MoveParams = MoveParams()) -> tuple[np.ndarray, np.ndarray]:
    if kind is MoveKind.RANDOMIZED_ROUNDING:
        return randomized_round(inst, pair.relaxed, pair.active, rng, params)
    return _PAIR_MOVES[kind](inst, pair, pair.active, rng, params)
