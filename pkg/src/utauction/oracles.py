"""Brute-force ground truth on small grids.

Nothing here reuses the analytic code paths: the auction, the CEF inequality
and the equilibrium test are re-derived in plain Python loops so that the
two can be cross-checked. Everything works on a grid of utility-targets
(quasi-truthful bids) and tolerates one grid step.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .core import TOL, BidProfile, Instance


class BudgetExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class GridSpec:
    """Uniform target grid on [0, cap_i] per bidder.

    With include_values, each bidder's own values v_i(o) are added to that bidder's
    axis: a target exactly at v_i(o*) is where capped bidders sit in
    equilibrium, and a uniform grid would otherwise step over it.
    """

    step: float
    caps: tuple[float, ...] | None = None
    max_points: int = 200_000
    include_values: bool = True

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError("grid step must be positive")

    def axes(self, instance: Instance) -> list[list[float]]:
        caps = self.caps if self.caps is not None else tuple(float(c) for c in instance.caps)
        if len(caps) != instance.num_bidders:
            raise ValueError("one cap per bidder expected")
        axes = []
        for i, c in enumerate(caps):
            k = int(math.floor(c / self.step + 1e-9))
            axis = [j * self.step for j in range(k + 1)]
            if self.include_values:
                extra = [float(x) for x in instance.values[i] if x <= c + TOL]
                axis = sorted(set(axis) | set(extra))
                axis = [a for n_, a in enumerate(axis) if n_ == 0 or a - axis[n_ - 1] > TOL]
            axes.append(axis)
        size = math.prod(len(a) for a in axes)
        if size > self.max_points:
            raise BudgetExceeded(f"grid has {size} points, budget is {self.max_points}")
        return axes


# ---- from-scratch evaluation ---------------------------------------------

def _rows(instance: Instance) -> list[list[float]]:
    return [list(map(float, r)) for r in instance.values]


def _welfare_opt(values) -> int:
    m = len(values[0])
    best, arg = -1.0, 0
    for o in range(m):
        w = sum(r[o] for r in values)
        if w > best + TOL:
            best, arg = w, o
    return arg


def _eff(values, targets):
    return [[max(x - t, 0.0) for x in row] for row, t in zip(values, targets)]


def _winner(eff, prefer):
    m = len(eff[0])
    tot = [sum(r[o] for r in eff) for o in range(m)]
    top = max(tot)
    tied = [o for o in range(m) if tot[o] >= top - TOL]
    return prefer if prefer in tied else tied[0]


def oracle_is_cef(values, eff, winner) -> bool:
    """The CEF inequality, term by term, for every alternative outcome."""
    n, m = len(values), len(values[0])
    for o in range(m):
        lhs = 0.0
        rhs = 0.0
        for i in range(n):
            here = values[i][o] - eff[i][o]
            there = values[i][winner] - eff[i][winner]
            lhs += max(here - there, 0.0)
            rhs += eff[i][winner] - eff[i][o]
        if lhs > rhs + TOL:
            return False
    return True


def oracle_cef_targets(instance: Instance, targets) -> bool:
    values = _rows(instance)
    eff = _eff(values, targets)
    return oracle_is_cef(values, eff, _winner(eff, _welfare_opt(values)))


def _utility(values, targets, i, prefer):
    eff = _eff(values, targets)
    w = _winner(eff, prefer)
    return values[i][w] - eff[i][w], w


# ---- grid enumeration -----------------------------------------------------

@dataclass(frozen=True)
class CefGrid:
    axes: tuple[tuple[float, ...], ...]
    in_cef: np.ndarray  # bool, shape = grid shape

    def points(self):
        for idx in itertools.product(*(range(len(a)) for a in self.axes)):
            yield idx, tuple(self.axes[i][k] for i, k in enumerate(idx))

    def cef_points(self) -> list[tuple[float, ...]]:
        return [p for idx, p in self.points() if self.in_cef[idx]]


def enumerate_cef_grid(instance: Instance, grid: GridSpec) -> CefGrid:
    axes = grid.axes(instance)
    values = _rows(instance)
    ostar = _welfare_opt(values)
    shape = tuple(len(a) for a in axes)
    flags = np.zeros(shape, dtype=bool)
    for idx in itertools.product(*(range(s) for s in shape)):
        pi = [axes[i][k] for i, k in enumerate(idx)]
        eff = _eff(values, pi)
        flags[idx] = oracle_is_cef(values, eff, _winner(eff, ostar))
    return CefGrid(tuple(tuple(a) for a in axes), flags)


def closure_counterexamples(cef: CefGrid) -> list[tuple[tuple[int, ...], int]]:
    """Grid neighbours that break downward closure of the CEF set.

    Checking single-coordinate steps is enough: componentwise domination is
    a chain of such steps. A pair (idx, k) means idx is CEF but idx - e_k is
    not (equivalently idx - e_k is non-CEF while idx, above it, is CEF).
    """
    bad = []
    flags = cef.in_cef
    for idx in itertools.product(*(range(s) for s in flags.shape)):
        if not flags[idx]:
            continue
        for k in range(len(idx)):
            if idx[k] == 0:
                continue
            lower = idx[:k] + (idx[k] - 1,) + idx[k + 1:]
            if not flags[lower]:
                bad.append((idx, k))
    return bad


@dataclass(frozen=True)
class GridEquilibrium:
    targets: tuple[float, ...]
    utilities: tuple[float, ...]
    is_cef: bool


def _is_grid_equilibrium(values, axes, pi, ostar) -> tuple[bool, list[float], int]:
    eff = _eff(values, pi)
    w = _winner(eff, ostar)
    utils = [values[i][w] - eff[i][w] for i in range(len(values))]
    for i, axis in enumerate(axes):
        for t in axis:
            if t == pi[i]:
                continue
            trial = list(pi)
            trial[i] = t
            u, _ = _utility(values, trial, i, w)
            if u > utils[i] + TOL:
                return False, utils, w
    return True, utils, w


def enumerate_equilibria_grid(instance: Instance, grid: GridSpec) -> list[GridEquilibrium]:
    """Every grid point where no bidder gains from a grid deviation of its own target."""
    axes = grid.axes(instance)
    values = _rows(instance)
    ostar = _welfare_opt(values)
    out = []
    for pi in itertools.product(*axes):
        ok, utils, w = _is_grid_equilibrium(values, axes, list(pi), ostar)
        if ok:
            eff = _eff(values, pi)
            out.append(GridEquilibrium(tuple(pi), tuple(utils), oracle_is_cef(values, eff, w)))
    return out


def brute_force_egalitarian(instance: Instance, grid: GridSpec) -> list[tuple[float, ...]]:
    """CEF grid equilibria with the lexicographically largest sorted utility vector.

    Returns every maximiser; an empty list means the grid holds no CEF
    equilibrium (too coarse).
    """
    axes = grid.axes(instance)
    values = _rows(instance)
    ostar = _welfare_opt(values)
    scored = []
    for pi in itertools.product(*axes):
        eff = _eff(values, pi)
        w = _winner(eff, ostar)
        if not oracle_is_cef(values, eff, w):
            continue
        utils = sorted(values[i][w] - eff[i][w] for i in range(len(values)))
        scored.append((utils, pi))
    scored.sort(key=lambda s: s[0], reverse=True)
    best_key, best = None, []
    for utils, pi in scored:
        if best_key is not None and _lex_less(utils, best_key):
            break
        ok, _, _ = _is_grid_equilibrium(values, axes, list(pi), ostar)
        if ok:
            best_key = utils
            best.append(tuple(pi))
    return best


def _lex_less(a, b) -> bool:
    for x, y in zip(a, b):
        if x < y - TOL:
            return True
        if x > y + TOL:
            return False
    return False


def best_response_oracle(instance: Instance, i: int, profile: BidProfile, grid: GridSpec,
                         value_bids=None) -> tuple[float, float]:
    """Exhaustive best utility for bidder i against the others' fixed bids.

    Searches quasi-truthful targets on the grid and, if given, extra
    (value bid, target) pairs. Returns (best overall, best quasi-truthful);
    ties follow the fixed outcome order.
    """
    values = _rows(instance)
    m = len(values[0])
    others = [0.0] * m
    for j, b in enumerate(profile.bids):
        if j != i:
            for o in range(m):
                others[o] += max(float(b.x[o]) - b.pi, 0.0)
    cap = float(instance.caps[i])
    steps = int(math.floor(cap / grid.step + 1e-9))
    if (steps + 1) * (1 + len(value_bids or ())) > grid.max_points:
        raise BudgetExceeded("best-response search exceeds the grid budget")

    def utility(x, t):
        tot = [others[o] + max(x[o] - t, 0.0) for o in range(m)]
        top = max(tot)
        w = next(o for o in range(m) if tot[o] >= top - TOL)
        return values[i][w] - max(x[w] - t, 0.0)

    qt = max(utility(values[i], k * grid.step) for k in range(steps + 1))
    best = qt
    for x, t in value_bids or ():
        best = max(best, utility(list(map(float, x)), float(t)))
    return best, qt


def random_instance(rng: np.random.Generator, n: int, m: int, high: float = 2.0,
                    unique: bool = True, gap: float = 1e-6) -> Instance:
    """Uniform values in [0, high]; redraws until the welfare optimum is unique by `gap`."""
    while True:
        v = rng.uniform(0.0, high, size=(n, m))
        w = np.sort(v.sum(axis=0))
        if not unique or m == 1 or w[-1] - w[-2] > gap:
            return Instance(v)
