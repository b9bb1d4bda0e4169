"""Static benchmarks for utility-target auctions.

Welfare optimum, cooperative envy-freeness (CEF) and its epsilon
neighbourhoods, VCG prices, the second-price threat, the egalitarian
equilibrium and the level/bound structure used by the convergence analysis.

Membership of a utility-target vector in the CEF set always means: bidders
bid quasi-truthfully (v_i, pi_i) and ties are broken in favour of the
welfare-optimal outcome.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .auction import NO_HISTORY, TieBreakContext, run_auction, run_quasi_truthful, select_winner
from .core import TOL, BidProfile, Instance, quasi_truthful_effective

logger = logging.getLogger(__name__)


class OptimalOutcome(NamedTuple):
    outcome: int
    welfare: float
    unique: bool


def optimal_outcome(instance: Instance, tol: float = TOL) -> OptimalOutcome:
    welfare = instance.welfare
    best = int(np.argmax(welfare))
    unique = int(np.sum(welfare >= welfare[best] - tol)) == 1
    return OptimalOutcome(best, float(welfare[best]), unique)


# --------------------------------------------------------------------------
# CEF


@dataclass(frozen=True)
class CefReport:
    is_cef: bool
    winning_outcome: int
    violated_outcomes: list[tuple[int, float, float]]
    slack: float
    lhs: np.ndarray = field(repr=False)
    rhs: np.ndarray = field(repr=False)


def cef_terms(values: np.ndarray, eff: np.ndarray, winner: int) -> tuple[np.ndarray, np.ndarray]:
    """Both sides of the CEF inequality for every outcome, against `winner`.

    lhs[o]: total extra utility the bidders who prefer o would gain.
    rhs[o]: the total-bid deficit of o relative to the winner.
    """
    kept = values - eff
    gain = kept - kept[:, [winner]]
    lhs = np.maximum(gain, 0.0).sum(axis=0)
    rhs = (eff[:, [winner]] - eff).sum(axis=0)
    return lhs, rhs


def _report(values, eff, winner, tol) -> CefReport:
    lhs, rhs = cef_terms(values, eff, winner)
    slack = rhs - lhs
    violated = [(int(o), float(lhs[o]), float(rhs[o])) for o in np.nonzero(slack < -tol)[0]]
    return CefReport(not violated, winner, violated, float(slack.min()), lhs, rhs)


def is_cef(instance: Instance, profile: BidProfile, ctx: TieBreakContext = NO_HISTORY,
           tol: float = TOL) -> CefReport:
    result = run_auction(instance, profile, ctx, tol)
    return _report(instance.values, profile.effective_matrix(), result.winning_outcome, tol)


def cef_report_targets(instance: Instance, targets, tol: float = TOL) -> CefReport:
    """CEF report for the quasi-truthful profile, ties favouring the optimum."""
    targets = np.minimum(np.asarray(targets, dtype=float), instance.caps)
    eff = quasi_truthful_effective(instance.values, targets)
    ostar = optimal_outcome(instance, tol).outcome
    winner, _ = select_winner(eff.sum(axis=0), ostar, tol)
    return _report(instance.values, eff, winner, tol)


def in_cef(instance: Instance, targets, tol: float = TOL) -> bool:
    return cef_report_targets(instance, targets, tol).is_cef


def in_cef_eps(instance: Instance, targets, eps: float, tol: float = TOL) -> bool:
    """Is pi within eps (sup-norm) of the CEF set?

    The CEF set is closed under lowering targets, so it is enough to test the
    single point max(pi - eps, 0).
    """
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    shifted = np.maximum(np.asarray(targets, dtype=float) - eps, 0.0)
    return in_cef(instance, shifted, tol)


def in_ncef_eps(instance: Instance, targets, eps: float, tol: float = TOL) -> bool:
    """Is pi within eps of the non-CEF set? Tested at pi + eps (the complement is closed upward)."""
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    return not in_cef(instance, np.asarray(targets, dtype=float) + eps, tol)


class CefMembership:
    """Repeated CEF / C_eps / non-CEF_eps tests on one instance.

    Same rules as in_cef and friends, with the optimum and caps computed once
    and results memoised; meant for long simulation traces.
    """

    def __init__(self, instance: Instance, tol: float = TOL):
        self.values = instance.values
        self.caps = instance.caps
        self.ostar = optimal_outcome(instance, tol).outcome
        self.tol = tol
        self._cache: dict[tuple[float, ...], bool] = {}

    def __call__(self, targets) -> bool:
        key = tuple(targets)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        v, tol = self.values, self.tol
        t = np.minimum(np.array(key), self.caps)
        eff = np.maximum(v - t[:, None], 0.0)
        totals = eff.sum(axis=0)
        top = totals.max()
        w = self.ostar if totals[self.ostar] >= top - tol else int(np.argmax(totals >= top - tol))
        kept = v - eff
        lhs = np.maximum(kept - kept[:, [w]], 0.0).sum(axis=0)
        ok = bool(np.all(totals[w] - totals - lhs >= -tol))
        if len(self._cache) < 1 << 18:
            self._cache[key] = ok
        return ok

    def near_cef(self, targets, eps: float) -> bool:
        return self(tuple(max(x - eps, 0.0) for x in targets))

    def near_ncef(self, targets, eps: float) -> bool:
        return not self(tuple(x + eps for x in targets))


# --------------------------------------------------------------------------
# Revenue benchmarks


class VcgResult(NamedTuple):
    prices: np.ndarray
    revenue: float
    outcome: int


def vcg(instance: Instance, tol: float = TOL) -> VcgResult:
    v = instance.values
    ostar = optimal_outcome(instance, tol).outcome
    prices = np.zeros(instance.num_bidders)
    for i in range(instance.num_bidders):
        others = np.delete(v, i, axis=0).sum(axis=0)
        prices[i] = others.max() - others[ostar]
    return VcgResult(prices, float(prices.sum()), ostar)


def second_price_threat(instance: Instance, ostar: int | None = None) -> float:
    """Largest total gain the bidders who prefer some outcome o would get by switching from ostar."""
    if ostar is None:
        ostar = optimal_outcome(instance).outcome
    v = instance.values
    return float(np.maximum(v - v[:, [ostar]], 0.0).sum(axis=0).max())


# --------------------------------------------------------------------------
# Egalitarian equilibrium (uniform raising of targets with constraint fixing)


@dataclass(frozen=True)
class FixEvent:
    phase: int
    delta: float
    target: float
    fixed: tuple[int, ...]
    reason: str
    binding_outcomes: tuple[int, ...] = ()


@dataclass(frozen=True)
class EgalitarianResult:
    targets: np.ndarray
    outcome: int
    payments: np.ndarray
    events: tuple[FixEvent, ...]
    warnings: tuple[str, ...] = ()

    @property
    def revenue(self) -> float:
        return float(np.sum(self.payments))


def _slack_vs(values: np.ndarray, targets: np.ndarray, ostar: int) -> np.ndarray:
    eff = quasi_truthful_effective(values, targets)
    lhs, rhs = cef_terms(values, eff, ostar)
    return rhs - lhs


def _breakpoints(values, base, free, ostar, hi):
    """Analytic breakpoints of the uniform raise on [0, hi].

    Every slack is piecewise linear in the common increment, with kinks where
    some free bidder's target crosses one of its values. Between kinks the
    zero crossings are solved exactly.
    """
    kinks = (values[free] - base[free, None]).ravel()
    pts = np.unique(np.concatenate([[0.0, hi], kinks[(kinks > 0) & (kinks < hi)]]))
    slacks = np.array([_slack_vs(values, base + d * free, ostar) for d in pts])
    out = list(pts)
    for k in range(len(pts) - 1):
        s0, s1 = slacks[k], slacks[k + 1]
        cross = (s0 > 0) & (s1 < 0)
        for o in np.nonzero(cross)[0]:
            out.append(pts[k] + s0[o] * (pts[k + 1] - pts[k]) / (s0[o] - s1[o]))
    return np.array(sorted(out))


def _eroding(values: np.ndarray, targets: np.ndarray, ostar: int, o: int, tol: float) -> np.ndarray:
    """Bidders whose further raise lowers the slack of outcome o.

    Relative to the optimum the slack splits per bidder into
    min(v_i(o*) - v_i(o), b_i(o*)); it shrinks with pi_i exactly when
    v_i(o) <= pi_i < v_i(o*).
    """
    return (values[:, o] <= targets + tol) & (targets < values[:, ostar] - tol)


def egalitarian(instance: Instance, tol: float = TOL) -> EgalitarianResult:
    """Raise all unfixed targets together until a cap or a CEF constraint stops them.

    Each phase binary-searches the largest feasible common increment, snaps it
    onto the nearest analytic breakpoint when within 10*tol, then fixes every
    bidder at its cap v_i(o*) or eroding a binding constraint.
    """
    v = instance.values
    n = instance.num_bidders
    opt = optimal_outcome(instance, tol)
    ostar = opt.outcome
    notes = []
    if not opt.unique:
        msg = f"welfare optimum not unique; using outcome {ostar} (first in fixed order)"
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
        notes.append(msg)
    cap = v[:, ostar]
    pi = np.zeros(n)
    fixed = cap <= tol
    events = []
    if fixed.any():
        events.append(FixEvent(0, 0.0, 0.0, tuple(int(i) for i in np.nonzero(fixed)[0]), "cap"))

    phase = 0
    while not fixed.all():
        phase += 1
        if phase > n:
            raise RuntimeError("egalitarian: more phases than bidders; fixing rule failed")
        free = (~fixed).astype(float)
        hi = float(np.min(cap[~fixed] - pi[~fixed]))

        def feasible(d):
            return in_cef(instance, pi + d * free, tol)

        if feasible(hi):
            delta = hi
        else:
            lo, up = 0.0, hi
            while up - lo > tol / 8:
                mid = 0.5 * (lo + up)
                if feasible(mid):
                    lo = mid
                else:
                    up = mid
            delta = lo
        bps = _breakpoints(v, pi, ~fixed, ostar, hi)
        near = bps[np.argmin(np.abs(bps - delta))]
        if abs(near - delta) <= 10 * tol:
            delta = float(near)
        pi = pi + delta * free
        pi[~fixed] = np.minimum(pi[~fixed], cap[~fixed])

        slack = _slack_vs(v, pi, ostar)
        binding = tuple(int(o) for o in np.nonzero(slack <= tol)[0] if o != ostar)
        newly = (~fixed) & (pi >= cap - tol)
        reason = "cap" if newly.any() else ""
        for o in binding:
            hit = (~fixed) & _eroding(v, pi, ostar, o, tol)
            if hit.any():
                newly |= hit
                reason = "constraint" if not reason else reason + "+constraint"
        if not newly.any():
            raise RuntimeError(f"egalitarian: phase {phase} stopped at delta={delta} without fixing anyone")
        fixed |= newly
        level = float(pi[newly].max())
        events.append(FixEvent(phase, delta, level, tuple(int(i) for i in np.nonzero(newly)[0]),
                               reason, binding))
        logger.debug("phase %d: delta=%g fixed=%s", phase, delta, np.nonzero(newly)[0])

    return EgalitarianResult(pi, ostar, np.maximum(cap - pi, 0.0), tuple(events), tuple(notes))


# --------------------------------------------------------------------------
# Equilibrium verification


@dataclass(frozen=True)
class Deviation:
    bidder: int
    current_utility: float
    target: float
    utility: float


@dataclass(frozen=True)
class EquilibriumReport:
    is_equilibrium: bool
    deviations: tuple[Deviation, ...]
    winning_outcome: int


def _candidate_targets(v_i: np.ndarray, others: np.ndarray, cap: float, tol: float, grid: int) -> np.ndarray:
    # outcome switches happen where i's bid for o closes the deficit to another o'
    deficits = others[None, :] - others[:, None]
    cands = (v_i[:, None] - deficits).ravel()
    base = np.concatenate([cands, v_i, [0.0, cap], np.linspace(0.0, cap, grid)])
    probes = np.concatenate([base, base - 10 * tol, base + 10 * tol])
    probes = probes[(probes >= 0) & (probes <= cap)]
    return np.unique(probes)


def check_equilibrium(instance: Instance, targets, tol: float = TOL, ctx: TieBreakContext | None = None,
                      grid: int = 257) -> EquilibriumReport:
    """Scan each bidder's unilateral target deviations against the others' fixed bids.

    Candidates are every breakpoint where the winning outcome can switch,
    nudged by +-10*tol, plus a uniform grid. Quasi-truthful deviations
    suffice because any other bid has a quasi-truthful equivalent.
    Ties favour the current winner (itself computed with ties favouring the
    optimum unless ctx says otherwise).
    """
    targets = np.asarray(targets.targets if isinstance(targets, BidProfile) else targets, dtype=float)
    targets = np.minimum(targets, instance.caps)
    v = instance.values
    if ctx is None:
        ctx = TieBreakContext(optimal_outcome(instance, tol).outcome)
    current = run_quasi_truthful(instance, targets, ctx, tol)
    hold = TieBreakContext(current.winning_outcome)
    eff = quasi_truthful_effective(v, targets)
    devs = []
    for i in range(instance.num_bidders):
        others = eff.sum(axis=0) - eff[i]
        cands = _candidate_targets(v[i], others, float(instance.caps[i]), tol, grid)
        tot = others[None, :] + np.maximum(v[i][None, :] - cands[:, None], 0.0)
        best_u, best_t = -np.inf, None
        for t, row in zip(cands, tot):
            w, _ = select_winner(row, hold.previous_winner, tol)
            u = min(v[i, w], t)
            if u > best_u + tol / 2:
                best_u, best_t = u, t
        if best_u > current.utilities[i] + tol:
            devs.append(Deviation(i, float(current.utilities[i]), float(best_t), float(best_u)))
    return EquilibriumReport(not devs, tuple(devs), current.winning_outcome)


# --------------------------------------------------------------------------
# Witnesses, levels and convergence bounds


def find_witnesses(instance: Instance, targets, j: int, tol: float = TOL) -> list[int]:
    """Outcomes that stop bidder j from asking for more at the egalitarian point."""
    targets = np.asarray(targets, dtype=float)
    if not in_cef(instance, targets, tol):
        raise ValueError("targets are not CEF; witnesses are defined at the egalitarian point")
    v = instance.values
    ostar = optimal_outcome(instance, tol).outcome
    totals = quasi_truthful_effective(v, targets).sum(axis=0)
    delta = 10 * tol
    probed = targets.copy()
    probed[j] += delta
    ptotals = quasi_truthful_effective(v, probed).sum(axis=0)
    out = []
    for o in range(instance.num_outcomes):
        if o == ostar or abs(totals[o] - totals[ostar]) > tol:
            continue
        if ptotals[o] - ptotals[ostar] <= delta / 2:
            continue
        losers = v[:, o] < targets - tol
        # j counts as losing under o once it asks for more, which matters
        # when its target sits exactly on v_j(o)
        losers[j] = v[j, o] < probed[j] - tol
        if not losers[j]:
            continue
        if targets[j] >= targets[losers].max() - tol:
            out.append(o)
    return out


@dataclass(frozen=True)
class LevelPartition:
    levels: tuple[tuple[int, ...], ...]
    level_utilities: tuple[float, ...]
    lower_bounds: tuple[int, ...]
    upper_bounds: tuple[int, ...]
    level_of: tuple[int, ...]

    def bidder_bounds(self, targets, eps: float) -> tuple[np.ndarray, np.ndarray]:
        """Per-bidder interval [pi*_j - eps b-(L(j)), pi*_j + eps b+(L(j))]."""
        targets = np.asarray(targets, dtype=float)
        lo = np.array([self.lower_bounds[k] for k in self.level_of], dtype=float)
        hi = np.array([self.upper_bounds[k] for k in self.level_of], dtype=float)
        return targets - eps * lo, targets + eps * hi

    def bounds_claim_holds(self) -> bool:
        sizes = [len(lv) for lv in self.levels]
        for k in range(len(sizes)):
            below = sum(sizes[i] * self.upper_bounds[i] for i in range(k))
            upto = sum(sizes[i] * self.lower_bounds[i] for i in range(k + 1))
            if not (self.lower_bounds[k] > below and self.upper_bounds[k] > upto):
                return False
        return True


def levels_and_bounds(instance: Instance, targets, tol: float = TOL) -> LevelPartition:
    """Group bidders by egalitarian target and attach the exponential bounds.

    For level k with s bidders strictly below it: b-(k) = 2**(2s),
    b+(k) = 2**(2s + |L_k|).
    """
    targets = np.asarray(targets, dtype=float)
    if targets.shape != (instance.num_bidders,):
        raise ValueError("one target per bidder expected")
    order = np.argsort(targets, kind="stable")
    levels, utils = [], []
    for i in order:
        if utils and targets[i] - utils[-1] <= tol:
            levels[-1].append(int(i))
        else:
            levels.append([int(i)])
            utils.append(float(targets[i]))
    lower, upper, below = [], [], 0
    level_of = [0] * len(targets)
    for k, lv in enumerate(levels):
        lower.append(2 ** (2 * below))
        upper.append(2 ** (2 * below + len(lv)))
        below += len(lv)
        for i in lv:
            level_of[i] = k
    return LevelPartition(tuple(tuple(sorted(lv)) for lv in levels), tuple(utils),
                          tuple(lower), tuple(upper), tuple(level_of))
