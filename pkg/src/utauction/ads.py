"""Sponsored-search ads as utility-target auctions.

Separable click-through rates: bidder i in slot j is clicked with probability
alpha_j * beta_i. A utility-target bid is a per-click bid x_i plus a target
pi_i, and the expected payment for slot j is max(alpha_j beta_i x_i - pi_i, 0).

Also here: compilation to an explicit outcome matrix, and a generalized
first-price (GFP) best-response loop for comparison.
"""
from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .core import TOL, Instance

SCHEMES = ("slot-priced", "rebate")


class AdSettingError(ValueError):
    pass


@dataclass(frozen=True)
class AdSetting:
    slot_ctrs: tuple[float, ...]
    quality: tuple[float, ...]
    values: tuple[float, ...]
    x: tuple[float, ...] | None = None   # per-click value bids, default truthful
    pi: tuple[float, ...] | None = None  # utility-targets, default 0

    def __post_init__(self):
        a, b, v = (tuple(self.slot_ctrs), tuple(self.quality), tuple(self.values))
        n, m = len(b), len(a)
        if m < 1:
            raise AdSettingError("slot_ctrs: need at least one slot")
        if len(v) != n or n < 1:
            raise AdSettingError("quality and values must have one entry per bidder")
        if m > n:
            raise AdSettingError(f"more slots ({m}) than bidders ({n})")
        for j, aj in enumerate(a):
            if not 0 < aj <= 1:
                raise AdSettingError(f"slot_ctrs[{j}]: CTR factor must lie in (0, 1], got {aj}")
        for j in range(1, m):
            if a[j] > a[j - 1]:
                raise AdSettingError(f"slot_ctrs: slot ordering violated, alpha[{j}]={a[j]} > alpha[{j-1}]={a[j-1]}")
        for i, bi in enumerate(b):
            if not bi > 0:
                raise AdSettingError(f"quality[{i}]: must be positive, got {bi}")
        for i, vi in enumerate(v):
            if not (vi >= 0 and math.isfinite(vi)):
                raise AdSettingError(f"values[{i}]: nonnegativity violated ({vi})")
        x = v if self.x is None else tuple(self.x)
        pi = tuple(0 for _ in range(n)) if self.pi is None else tuple(self.pi)
        if len(x) != n or len(pi) != n:
            raise AdSettingError("bids: one (x, pi) pair per bidder expected")
        if any(xi < 0 for xi in x):
            raise AdSettingError("bids: per-click bids must be nonnegative")
        if any(p < 0 for p in pi):
            raise AdSettingError("bids: utility-targets must be nonnegative")
        for name, val in (("slot_ctrs", a), ("quality", b), ("values", v), ("x", x), ("pi", pi)):
            object.__setattr__(self, name, val)

    @property
    def num_bidders(self) -> int:
        return len(self.quality)

    @property
    def num_slots(self) -> int:
        return len(self.slot_ctrs)

    def with_bids(self, x=None, pi=None) -> "AdSetting":
        return AdSetting(self.slot_ctrs, self.quality, self.values,
                         self.x if x is None else x, self.pi if pi is None else pi)


def _pay(alpha, beta, x, pi):
    # works for floats and Fractions alike
    e = alpha * beta * x - pi
    return e if e > 0 else 0 * e


def expected_payment(setting: AdSetting, i: int, j: int):
    if not 0 <= i < setting.num_bidders:
        raise IndexError(f"bidder {i} out of range")
    if not 0 <= j < setting.num_slots:
        raise IndexError(f"slot {j} out of range")
    return _pay(setting.slot_ctrs[j], setting.quality[i], setting.x[i], setting.pi[i])


def payment_matrix(setting: AdSetting) -> np.ndarray:
    a = np.asarray(setting.slot_ctrs, dtype=float)
    b = np.asarray(setting.quality, dtype=float)
    x = np.asarray(setting.x, dtype=float)
    pi = np.asarray(setting.pi, dtype=float)
    return np.maximum(np.outer(b * x, a) - pi[:, None], 0.0)


@dataclass(frozen=True)
class Assignment:
    slot_of: dict[int, int]
    expected_payments: dict[int, float]

    @property
    def total(self) -> float:
        return float(sum(self.expected_payments.values()))

    def payment(self, i: int) -> float:
        return self.expected_payments.get(i, 0.0)


def optimal_assignment(setting: AdSetting, tol: float = TOL) -> Assignment:
    """Revenue-maximizing injective partial assignment of bidders to slots.

    Exact max-weight bipartite matching; pairs with zero expected payment are
    left unassigned. Among optimal matchings the one whose slot vector
    (slot of bidder 0, slot of bidder 1, ...) is lexicographically smallest,
    unassigned last, is returned.
    """
    w = payment_matrix(setting)
    rows, cols = linear_sum_assignment(w, maximize=True)
    best = float(w[rows, cols].sum())
    fixed: dict[int, int] = {}
    # greedy lexicographic repair: for each bidder in turn pick the smallest
    # slot that still admits an optimal completion
    for i in range(setting.num_bidders):
        for j in list(range(setting.num_slots)) + [None]:
            if j is not None and j in fixed.values():
                continue
            trial = dict(fixed)
            trial[i] = j
            if _best_completion(w, trial) >= best - tol:
                fixed = trial
                break
    slot_of = {i: j for i, j in fixed.items() if j is not None and w[i, j] > tol}
    return Assignment(slot_of, {i: float(w[i, j]) for i, j in slot_of.items()})


def _best_completion(w: np.ndarray, fixed: dict[int, int | None]) -> float:
    used = {j for j in fixed.values() if j is not None}
    total = sum(w[i, j] for i, j in fixed.items() if j is not None)
    rows = [i for i in range(w.shape[0]) if i not in fixed]
    cols = [j for j in range(w.shape[1]) if j not in used]
    if rows and cols:
        sub = w[np.ix_(rows, cols)]
        r, c = linear_sum_assignment(sub, maximize=True)
        total += sub[r, c].sum()
    return float(total)


def brute_force_assignment(setting: AdSetting) -> float:
    """Best total over every injective partial assignment (exhaustive)."""
    w = payment_matrix(setting)
    n, m = w.shape
    best = 0.0
    for k in range(1, m + 1):
        for bidders in itertools.permutations(range(n), k):
            best = max(best, sum(w[i, j] for j, i in enumerate(bidders)))
    return float(best)


@dataclass(frozen=True)
class PricingResult:
    scheme: str
    ppc: dict[int, object]
    rebate: dict[int, object]
    ctr: dict[int, object]

    def expected_payment(self, i: int):
        """CTR-weighted per-click charge minus the rebate."""
        if i not in self.ppc:
            return 0
        return self.ctr[i] * self.ppc[i] - self.rebate[i]


def slot_priced(alpha, beta, x, pi):
    """Per-click price when each slot has its own price: max(0, x - pi/(alpha beta))."""
    p = x - pi / (alpha * beta)
    return (p if p > 0 else 0 * p), 0 * pi


def rebate_priced(alpha, beta, x, pi):
    """Charge the per-click bid on every click and pay the target back as a rebate."""
    if alpha * beta * x - pi > 0:
        return x, pi
    return 0 * x, 0 * pi


def price_assignment(setting: AdSetting, assignment: Assignment, scheme: str) -> PricingResult:
    if scheme not in SCHEMES:
        raise ValueError(f"scheme must be one of {SCHEMES}")
    rule = slot_priced if scheme == "slot-priced" else rebate_priced
    ppc, reb, ctr = {}, {}, {}
    for i, j in assignment.slot_of.items():
        a, b = setting.slot_ctrs[j], setting.quality[i]
        ppc[i], reb[i] = rule(a, b, setting.x[i], setting.pi[i])
        ctr[i] = a * b
    return PricingResult(scheme, ppc, reb, ctr)


# --------------------------------------------------------------------------
# explicit outcome space


def count_outcomes(n: int, m: int) -> int:
    """Injective partial maps from n bidders into m slots, the empty map included."""
    return sum(math.comb(n, k) * math.perm(m, k) for k in range(min(n, m) + 1))


def enumerate_assignments(n: int, m: int):
    """All partial injective maps as tuples slot_of[i] (None = unassigned), empty map first."""
    for k in range(min(n, m) + 1):
        for bidders in itertools.combinations(range(n), k):
            for slots in itertools.permutations(range(m), k):
                a = [None] * n
                for i, j in zip(bidders, slots):
                    a[i] = j
                yield tuple(a)


def to_explicit_instance(setting: AdSetting, max_outcomes: int = 50_000) -> tuple[Instance, list[tuple]]:
    """Outcome matrix with one column per assignment; v_i(o) = alpha_j(i) beta_i v_i."""
    n, m = setting.num_bidders, setting.num_slots
    count = count_outcomes(n, m)
    if count > max_outcomes:
        raise ValueError(f"explicit instance would have {count} outcomes (limit {max_outcomes})")
    outcomes = list(enumerate_assignments(n, m))
    v = np.zeros((n, len(outcomes)))
    for o, a in enumerate(outcomes):
        for i, j in enumerate(a):
            if j is not None:
                v[i, o] = setting.slot_ctrs[j] * setting.quality[i] * setting.values[i]
    names = tuple(_outcome_name(a) for a in outcomes)
    return Instance(v, outcome_names=names), outcomes


def _outcome_name(a) -> str:
    parts = [f"{i}->s{j}" for i, j in enumerate(a) if j is not None]
    return ",".join(parts) if parts else "empty"


# --------------------------------------------------------------------------
# GFP comparison: one scalar per-click bid, rank by beta*x, pay own bid per click


def gfp_ranking(quality, ticks) -> list[int]:
    """Bidders by descending beta*bid; lower index first on ties."""
    return sorted(range(len(ticks)), key=lambda i: (-quality[i] * ticks[i], i))


def _gfp_utility(setting, ticks, i, eps):
    rank = gfp_ranking(setting.quality, ticks)
    pos = rank.index(i)
    if pos >= setting.num_slots or ticks[i] == 0:
        return 0.0
    return setting.slot_ctrs[pos] * setting.quality[i] * (setting.values[i] - ticks[i] * eps)


def gfp_best_response(setting: AdSetting, ticks, i: int, eps: float) -> int:
    """Myopic best bid (in ticks of eps) for bidder i.

    A bidder keeps the current bid when it is already a best response;
    otherwise ties go to the lower bid.
    """
    top = int(math.floor(setting.values[i] / eps + 1e-9))
    best_k, best_u = 0, 0.0
    trial = list(ticks)
    utils = []
    for k in range(top + 1):
        trial[i] = k
        u = _gfp_utility(setting, trial, i, eps)
        utils.append(u)
        if u > best_u + TOL:
            best_k, best_u = k, u
    cur = ticks[i]
    if cur <= top and utils[cur] >= best_u - TOL:
        return cur
    return best_k


def gfp_step(setting: AdSetting, ticks, mover: int, eps: float) -> tuple[int, ...]:
    new = list(ticks)
    new[mover] = gfp_best_response(setting, ticks, mover, eps)
    return tuple(new)


@dataclass
class GfpTrace:
    epsilon: float
    initial: tuple[int, ...]
    steps: list[tuple[int, tuple[int, ...]]] = field(default_factory=list)  # (mover, ticks after)
    cycle_start: int | None = None
    cycle_length: int | None = None
    fixed_point: bool = False

    @property
    def cycled(self) -> bool:
        return self.cycle_start is not None and not self.fixed_point

    def bids(self) -> np.ndarray:
        return np.array([self.initial] + [t for _, t in self.steps], dtype=float) * self.epsilon

    def to_csv(self) -> str:
        n = len(self.initial)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["step", "mover", "direction"] + [f"bid_{i}" for i in range(n)])
        prev = self.initial
        for k, (mover, t) in enumerate(self.steps, start=1):
            d = "up" if t[mover] > prev[mover] else "down" if t[mover] < prev[mover] else "hold"
            w.writerow([k, mover, d] + [f"{x * self.epsilon:.9f}" for x in t])
            prev = t
        return buf.getvalue()


def gfp_dynamics(setting: AdSetting, eps: float, max_steps: int = 100_000, initial=None) -> GfpTrace:
    """Round-robin myopic best responses until a state (bids, next mover) repeats.

    A repeat of a state in which nobody changes their bid for a full round is
    a fixed point; any other repeat is a genuine cycle.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    n = setting.num_bidders
    ticks = tuple(0 for _ in range(n)) if initial is None else tuple(int(round(b / eps)) for b in initial)
    trace = GfpTrace(eps, ticks)
    seen = {(ticks, 0): 0}
    still = 0
    for step in range(1, max_steps + 1):
        mover = (step - 1) % n
        new = gfp_step(setting, ticks, mover, eps)
        still = still + 1 if new == ticks else 0
        ticks = new
        trace.steps.append((mover, ticks))
        if still >= n:
            trace.fixed_point = True
            trace.cycle_start, trace.cycle_length = step - n, n
            break
        key = (ticks, step % n)
        if key in seen:
            trace.cycle_start = seen[key]
            trace.cycle_length = step - seen[key]
            break
        seen[key] = step
    return trace
