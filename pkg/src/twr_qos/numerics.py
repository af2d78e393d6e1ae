"""Root finding and dual-ascent primitives shared by both optimizers."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

__all__ = [
    "RootSearchConfig",
    "SubgradientConfig",
    "BracketError",
    "DualAscentError",
    "RootInfo",
    "bisect_root",
    "stationary_then_bisect",
    "solve_decreasing",
    "maximize_from_derivative",
    "Evaluation",
    "DualAscentResult",
    "dual_ascent",
]


@dataclass(frozen=True)
class RootSearchConfig:
    tolerance: float = 1e-10
    max_iterations: int = 200
    bracket_growth: float = 2.0

    def __post_init__(self) -> None:
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if not self.bracket_growth > 1:
            raise ValueError("bracket_growth must exceed 1")


@dataclass(frozen=True)
class SubgradientConfig:
    """Projected-subgradient settings for the power multipliers.

    ``schedule`` selects the per-coordinate step ``s_j`` in
    ``lam_j <- max(0, lam_j - s_j * (budget_j - E[P_j]))``:

    * ``"constant"``: ``s_j = step * scale_j``
    * ``"diminishing"``: ``s_j = step * scale_j / sqrt(i)``
    * ``"adaptive"``: ``s_j = eta_j * max(lam_j, floor_j) / budget_j`` where
      ``eta_j`` starts at ``step``, halves whenever the residual changes sign
      and grows by 10% otherwise (capped at ``step``); a single step never
      cuts a multiplier by more than 90%.

    ``scale_j`` defaults to ``lam0_j / budget_j``.
    """

    schedule: str = "adaptive"
    step: float = 1.0
    max_iterations: int = 500
    window: int = 20
    constraint_tolerance: float = 1e-3
    dual_tolerance: float = 1e-6
    slackness_tolerance: float = 1e-6

    def __post_init__(self) -> None:
        if self.schedule not in ("constant", "diminishing", "adaptive"):
            raise ValueError(f"unknown step schedule {self.schedule!r}")
        if not self.step > 0:
            raise ValueError("step must be positive")
        if not self.constraint_tolerance > 0:
            raise ValueError("constraint tolerance must be positive")
        if self.max_iterations < 1 or self.window < 1:
            raise ValueError("iteration counts must be >= 1")


class BracketError(ArithmeticError):
    """Bracket expansion did not reach a sign change."""

    def __init__(self, message: str, bracket):
        super().__init__(message)
        self.bracket = bracket


class DualAscentError(ArithmeticError):
    def __init__(self, message: str, trajectory):
        super().__init__(message)
        self.trajectory = trajectory


@dataclass
class RootInfo:
    root: float
    bracketed: bool
    stationary_point: float | None = None
    multiple_roots: bool = False


def _bisect(f, a: float, b: float, fa: float, tol: float, max_iterations: int) -> float:
    """Bisection on [a, b] with f(a) and f(b) of opposite sign."""
    sa = fa > 0
    mid = 0.5 * (a + b)
    for _ in range(max_iterations):
        mid = 0.5 * (a + b)
        if mid == a or mid == b:
            break
        fm = f(mid)
        if abs(fm) <= tol:
            break
        if (fm > 0) == sa:
            a = mid
        else:
            b = mid
    return mid


def bisect_root(f: Callable[[float], float], lo: float, hi: float, cfg: RootSearchConfig = RootSearchConfig()) -> float:
    """Root of a decreasing ``f`` on ``[lo, inf)``, or ``lo`` if ``f(lo) <= 0``.

    ``hi`` is grown by ``cfg.bracket_growth`` until ``f(hi) < 0``.
    """
    flo = f(lo)
    if flo <= 0:
        return lo
    fhi = f(hi)
    expansions = 0
    while fhi > 0:
        if expansions >= cfg.max_iterations:
            raise BracketError(f"no sign change up to {hi}", (lo, hi))
        lo, flo = hi, fhi
        hi = hi * cfg.bracket_growth if hi > 0 else 1.0
        fhi = f(hi)
        expansions += 1
    if fhi == 0:
        return hi
    return _bisect(f, lo, hi, flo, cfg.tolerance, cfg.max_iterations)


def _numeric_derivative(f, lo, hi):
    def df(x):
        h = 1e-7 * max(1.0, abs(x))
        a, b = max(lo, x - h), min(hi, x + h)
        return (f(b) - f(a)) / (b - a)

    return df


def stationary_then_bisect(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    cfg: RootSearchConfig = RootSearchConfig(),
    df: Callable[[float], float] | None = None,
    full_output: bool = False,
):
    """Root of ``f`` on ``[lo, hi]`` when ``f`` has at most one interior
    stationary point.

    The stationary point is located by bisection on the sign of the
    derivative; each monotone piece is then checked for a sign change and the
    smallest root is returned.  Without any sign change the boundary is
    returned (``lo`` if ``f(lo) < 0``, else ``hi``) and ``bracketed`` is False.
    """
    if df is None:
        df = _numeric_derivative(f, lo, hi)
    try:
        d_lo, d_hi = df(lo), df(hi)
    except (ArithmeticError, ValueError) as exc:
        raise ArithmeticError(f"derivative evaluation failed: {exc}") from exc
    if not (math.isfinite(d_lo) and math.isfinite(d_hi)):
        raise ArithmeticError("derivative evaluation returned a non-finite value")

    stationary = None
    if d_lo * d_hi < 0:
        stationary = _bisect(df, lo, hi, d_lo, 0.0, cfg.max_iterations)
    pieces = [(lo, hi)] if stationary is None else [(lo, stationary), (stationary, hi)]

    roots = []
    for a, b in pieces:
        fa, fb = f(a), f(b)
        if fa == 0:
            roots.append(a)
        elif fa * fb < 0:
            roots.append(_bisect(f, a, b, fa, cfg.tolerance, cfg.max_iterations))
        elif fb == 0:
            roots.append(b)
    if roots:
        info = RootInfo(roots[0], True, stationary, len(roots) > 1)
    else:
        info = RootInfo(lo if f(lo) < 0 else hi, False, stationary, False)
    return info if full_output else info.root


def _subset(params, idx):
    return tuple(p[idx] if np.ndim(p) > 0 else p for p in params)


def _per_element(x, params) -> np.ndarray:
    # one entry per element: x broadcast against the array-valued params
    n = max([np.size(x)] + [np.size(p) for p in params if np.ndim(p) > 0])
    return np.array(np.broadcast_to(x, (n,)), dtype=float)


def solve_decreasing(
    f: Callable[..., np.ndarray],
    params: tuple,
    hi,
    lo=0.0,
    *,
    ftol: float = 1e-14,
    max_iterations: int = 200,
    growth: float = 4.0,
    max_expansions: int = 200,
) -> np.ndarray:
    """Elementwise root of decreasing ``f(x, *params)``, clamped below at ``lo``.

    Vectorised bracketing solver (Illinois variant of regula falsi): every
    iterate keeps ``f(a) > 0 > f(b)``.  ``hi`` is an initial upper guess that
    is grown geometrically until the bracket closes.
    """
    hi = _per_element(hi, params)
    n = hi.size
    lo = np.array(np.broadcast_to(lo, (n,)), dtype=float)
    x = lo.copy()
    if n == 0:
        return x
    f_lo = f(lo, *params)
    (idx,) = np.nonzero(f_lo > 0)
    if idx.size == 0:
        return x

    a = lo[idx]
    fa = f_lo[idx]
    b = np.maximum(hi[idx], a)
    b = np.where(b > a, b, a + 1.0)
    fb = f(b, *_subset(params, idx))
    for _ in range(max_expansions):
        up = fb > 0
        if not up.any():
            break
        a = np.where(up, b, a)
        fa = np.where(up, fb, fa)
        b = np.where(up, b * growth, b)
        fb_new = f(b[up], *_subset(params, idx[up]))
        fb[up] = fb_new
    else:
        bad = fb > 0
        raise BracketError(
            f"{int(bad.sum())} element(s) kept f > 0 up to x={b[bad].max():.3g}",
            (a[bad], b[bad]),
        )
    if not np.all(np.isfinite(fb)):
        raise BracketError("non-finite function value while bracketing", (a, b))

    exact = fb == 0
    x[idx[exact]] = b[exact]
    keep = ~exact
    idx, a, b, fa, fb = idx[keep], a[keep], b[keep], fa[keep], fb[keep]
    side = np.zeros(idx.size, dtype=np.int8)
    c = 0.5 * (a + b)
    for _ in range(max_iterations):
        if idx.size == 0:
            break
        c = (a * fb - b * fa) / (fb - fa)
        bad = ~((c > a) & (c < b))
        if bad.any():
            c[bad] = 0.5 * (a[bad] + b[bad])
        fc = f(c, *_subset(params, idx))
        neg = fc < 0
        pos = fc > 0
        # Illinois: halve the stale endpoint's value after a repeat.
        fa = np.where(neg & (side == -1), 0.5 * fa, fa)
        fb = np.where(pos & (side == 1), 0.5 * fb, fb)
        b = np.where(neg, c, b)
        fb = np.where(neg, fc, fb)
        a = np.where(pos, c, a)
        fa = np.where(pos, fc, fa)
        side = np.where(neg, -1, np.where(pos, 1, side)).astype(np.int8)
        width = b - a
        done = (np.abs(fc) <= ftol) | (width <= 4 * np.finfo(float).eps * np.abs(c)) | (fc == 0)
        if done.any():
            x[idx[done]] = c[done]
            live = ~done
            idx, a, b, fa, fb, side, c = idx[live], a[live], b[live], fa[live], fb[live], side[live], c[live]
    else:
        x[idx] = c
    return x


def maximize_from_derivative(
    f: Callable[..., np.ndarray],
    objective: Callable[..., np.ndarray],
    params: tuple,
    upper,
    *,
    scan_points: int = 24,
    ftol: float = 1e-14,
    max_expansions: int = 60,
) -> np.ndarray:
    """Per-element maximiser over ``x >= 0`` of ``objective(x, *params)``
    whose derivative is ``f``, for ``f`` negative beyond some finite point.

    ``upper`` is grown by 4x until ``f(upper) < 0``.  ``f`` is then sampled
    at 0 and on a geometric grid ending at ``upper``; the first and last
    down-crossings are refined and compete with ``x = 0`` on objective value.
    Handles derivatives that are not monotone (one hump, or a dip and a hump).
    """
    upper = _per_element(upper, params)
    m = upper.size
    x = np.zeros(m)
    if m == 0:
        return x
    upper = np.where(upper > 0, upper, 1.0)
    fu = f(upper, *params)
    for _ in range(max_expansions):
        up = fu > 0
        if not up.any():
            break
        upper[up] *= 4.0
        fu[up] = f(upper[up], *_subset(params, np.nonzero(up)[0]))
    else:
        raise BracketError("derivative stays positive while expanding", upper[fu > 0])

    scale = 2.0 ** -np.arange(scan_points - 1, -1, -1, dtype=float)
    grid = np.empty((m, scan_points + 1))
    grid[:, 0] = 0.0
    grid[:, 1:] = upper[:, None] * scale[None, :]
    vals = np.empty_like(grid)
    for k in range(scan_points):
        vals[:, k] = f(grid[:, k], *params)
    vals[:, -1] = fu

    down = (vals[:, :-1] > 0) & (vals[:, 1:] <= 0)
    has = down.any(axis=1)
    if not has.any():
        return x
    (idx,) = np.nonzero(has)
    sub = _subset(params, idx)
    d = down[idx]
    first = np.argmax(d, axis=1)
    last = d.shape[1] - 1 - np.argmax(d[:, ::-1], axis=1)
    best = np.zeros(idx.size)
    best_val = objective(best, *sub)
    for j in (first, last) if np.any(first != last) else (first,):
        root = solve_decreasing(f, sub, grid[idx, j + 1], grid[idx, j], ftol=ftol)
        val = objective(root, *sub)
        better = val > best_val
        best = np.where(better, root, best)
        best_val = np.where(better, val, best_val)
    x[idx] = best
    return x


@dataclass
class Evaluation:
    """One primal pass at fixed multipliers."""

    policy: Any
    expected: np.ndarray
    dual_value: float


@dataclass
class DualAscentResult:
    lam: np.ndarray
    evaluation: Evaluation
    iterations: int
    converged: bool
    relative_residuals: np.ndarray
    trajectory: list = field(default_factory=list)
    best_dual: list = field(default_factory=list)

    @property
    def policy(self):
        return self.evaluation.policy


def _constraints_met(lam, expected, budgets, cfg: SubgradientConfig):
    rel = (expected - budgets) / budgets
    ok = np.abs(rel) <= cfg.constraint_tolerance
    # A slack constraint is acceptable once its multiplier has (nearly) vanished.
    slack = (rel < 0) & (lam * (budgets - expected) <= cfg.slackness_tolerance)
    return bool(np.all(ok | slack)), rel


def dual_ascent(
    evaluate: Callable[[np.ndarray], Evaluation],
    lam0,
    budgets,
    cfg: SubgradientConfig = SubgradientConfig(),
    scale=None,
    floor=None,
    lower=None,
) -> DualAscentResult:
    """Minimise the dual over ``lam >= 0`` by projected subgradient steps.

    ``evaluate`` must be deterministic for a fixed sample set.  Stops when all
    power constraints hold to ``cfg.constraint_tolerance`` (relative; slack
    ones need a vanishing multiplier) and the best dual value has moved less
    than ``cfg.dual_tolerance`` (relative) over the last ``cfg.window``
    iterations, or after ``cfg.max_iterations``.
    """
    lam = np.array(lam0, dtype=float)
    budgets = np.asarray(budgets, dtype=float)
    if np.any(budgets <= 0):
        raise ValueError("dual ascent needs positive budgets")
    scale = lam / budgets if scale is None else np.asarray(scale, dtype=float)
    floor = np.full_like(lam, 1e-12) if floor is None else np.asarray(floor, dtype=float)
    lower = np.zeros_like(lam) if lower is None else np.asarray(lower, dtype=float)
    eta = np.full_like(lam, cfg.step)
    prev_sign = np.zeros_like(lam)

    trajectory = [lam.copy()]
    best_dual: list[float] = []
    best = math.inf
    converged = False
    ev = None
    rel = np.full_like(lam, np.inf)
    i = 0
    for i in range(1, cfg.max_iterations + 1):
        ev = evaluate(lam)
        if not math.isfinite(ev.dual_value) or not np.all(np.isfinite(ev.expected)):
            raise DualAscentError(f"non-finite dual value at iteration {i}", trajectory)
        best = min(best, ev.dual_value)
        best_dual.append(best)
        met, rel = _constraints_met(lam, ev.expected, budgets, cfg)
        recent = best_dual[-cfg.window:]
        stable = (recent[0] - recent[-1]) <= cfg.dual_tolerance * max(1.0, abs(best))
        if met and stable:
            converged = True
            break
        g = budgets - ev.expected
        if cfg.schedule == "constant":
            s = cfg.step * scale
        elif cfg.schedule == "diminishing":
            s = cfg.step * scale / math.sqrt(i)
        else:
            sign = np.sign(g)
            flipped = sign * prev_sign < 0
            eta = np.where(flipped, 0.5 * eta, np.minimum(cfg.step, 1.1 * eta))
            prev_sign = np.where(sign != 0, sign, prev_sign)
            s = eta * np.maximum(lam, floor) / budgets
            # at most a 90% cut per step, so a multiplier never collapses at once
            s = np.where(g > 0, np.minimum(s, 0.9 * np.maximum(lam, floor) / np.where(g > 0, g, 1.0)), s)
        lam = np.maximum(lower, lam - s * g)
        trajectory.append(lam.copy())
    return DualAscentResult(lam, ev, i, converged, rel, trajectory, best_dual)
