"""Repeated utility-target auction driven by behavioural axioms.

Bidders bid quasi-truthfully and move one at a time by epsilon:

* A1  losers raise (target down), winners never raise, losers never lower;
* A2  while anyone is losing, a loser moves;
* A3  winners probe by lowering (target up) from time to time;
* A4  among losers, the one with the highest target moves first.

Without A2 the scheduler picks any bidder (seeded), who then acts according
to A1/A3. Without A3 and with everyone winning, the run has reached a steady
state and stops.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .auction import TieBreakContext, run_quasi_truthful
from .core import TOL, Instance
from .static import CefMembership, egalitarian, levels_and_bounds

AXIOM_SETS = {
    "A1+A2": frozenset({"A1", "A2"}),
    "A1+A3": frozenset({"A1", "A3"}),
    "A1+A2+A3": frozenset({"A1", "A2", "A3"}),
    "A1+A2+A3+A4": frozenset({"A1", "A2", "A3", "A4"}),
}
AXIOM_ALIASES = {"all": "A1+A2+A3+A4", "sink": "A1+A2", "probe": "A1+A3", "boundary": "A1+A2+A3"}
TARGETS = ("cef_eps", "ncef_eps", "boundary", "egalitarian")
RAISE, LOWER = "raise", "lower"


def parse_axioms(spec: str) -> frozenset[str]:
    key = AXIOM_ALIASES.get(spec, spec).upper().replace(" ", "")
    if key not in AXIOM_SETS:
        raise ValueError(f"unknown axiom set {spec!r}; choose from {sorted(AXIOM_SETS)} or 'all'")
    return AXIOM_SETS[key]


def default_max_steps(instance: Instance, eps: float) -> int:
    n = instance.num_bidders
    return 10 * n * int(sum(math.ceil(c / eps - 1e-9) for c in instance.caps))


@dataclass(frozen=True)
class SimConfig:
    epsilon: float
    max_steps: int | None = None
    seed: int = 0
    axioms: frozenset[str] = AXIOM_SETS["A1+A2+A3+A4"]
    winner_policy: str = "round-robin"
    target: str = "egalitarian"

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if isinstance(self.axioms, str):
            object.__setattr__(self, "axioms", parse_axioms(self.axioms))
        if frozenset(self.axioms) not in AXIOM_SETS.values():
            raise ValueError(f"unsupported axiom set {sorted(self.axioms)}")
        if self.winner_policy not in ("round-robin", "seeded-random"):
            raise ValueError("winner_policy must be 'round-robin' or 'seeded-random'")
        if self.target not in TARGETS:
            raise ValueError(f"target must be one of {TARGETS}")
        if self.max_steps is not None and self.max_steps < 1:
            raise ValueError("max_steps must be positive")

    @property
    def axiom_label(self) -> str:
        return next(k for k, v in AXIOM_SETS.items() if v == self.axioms)

    def steps_for(self, instance: Instance) -> int:
        return self.max_steps if self.max_steps is not None else default_max_steps(instance, self.epsilon)


@dataclass(frozen=True)
class SimState:
    targets: tuple[float, ...]
    previous_winner: int | None = None
    step: int = 0
    cursor: int = 0


@dataclass(frozen=True)
class TraceEvent:
    step: int
    mover: int
    direction: str
    winner_before: int
    winner_after: int
    winners_before: tuple[bool, ...]
    winners_after: tuple[bool, ...]
    targets: tuple[float, ...]
    in_cef: bool


@dataclass
class Trace:
    initial: tuple[float, ...]
    events: list[TraceEvent] = field(default_factory=list)
    halted: bool = False
    initial_winner: int | None = None
    initial_winners: tuple[bool, ...] = ()

    def states(self) -> list[tuple[float, ...]]:
        """Target vectors after 0, 1, ... events."""
        return [self.initial] + [e.targets for e in self.events]

    def to_csv(self) -> str:
        n = len(self.initial)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["step", "mover", "direction"] + [f"pi_{i}" for i in range(n)] + ["winner", "cef_flag"])
        for e in self.events:
            w.writerow([e.step, e.mover, e.direction] + [f"{t:.9f}" for t in e.targets]
                       + [e.winner_after, int(e.in_cef)])
        return buf.getvalue()

    def to_json(self) -> str:
        doc = {
            "schema": "utauction.trace/1",
            "initial": [round(t, 9) for t in self.initial],
            "halted": self.halted,
            "events": [
                {"step": e.step, "mover": e.mover, "direction": e.direction,
                 "winner_before": e.winner_before, "winner_after": e.winner_after,
                 "winners_before": list(e.winners_before), "winners_after": list(e.winners_after),
                 "pi": [round(t, 9) for t in e.targets], "cef": e.in_cef}
                for e in self.events
            ],
        }
        return json.dumps(doc, indent=1)


@dataclass(frozen=True)
class ConvergenceReport:
    target: str
    entered_at_step: int | None
    stayed: bool
    all_winners_first_step: int | None
    all_winners_bound: int
    final_targets: tuple[float, ...]
    lower_bounds: tuple[float, ...] | None = None
    upper_bounds: tuple[float, ...] | None = None
    degenerate: bool = False
    violations: int = 0
    two_sided: bool | None = None

    @property
    def converged(self) -> bool:
        return self.entered_at_step is not None and self.stayed


# --------------------------------------------------------------------------


def _status(instance, state: SimState):
    return run_quasi_truthful(instance, state.targets, TieBreakContext(state.previous_winner))


def next_mover(state: SimState, instance: Instance, config: SimConfig,
               rng: np.random.Generator | None = None, result=None) -> tuple[int, str] | None:
    """Who moves next and in which direction; None when the run is at rest."""
    ax = config.axioms
    if result is None:
        result = _status(instance, state)
    losers = np.nonzero(~result.is_winner)[0]
    if "A2" not in ax:
        if rng is None:
            raise ValueError("a random generator is required without A2")
        i = int(rng.integers(instance.num_bidders))
        return (i, LOWER) if result.is_winner[i] else (i, RAISE)
    if losers.size:
        if "A4" in ax:
            t = np.asarray(state.targets)[losers]
            return int(losers[np.argmax(t)]), RAISE  # argmax keeps the lowest index on ties
        if rng is None:
            raise ValueError("a random generator is required without A4")
        return int(rng.choice(losers)), RAISE
    if "A3" not in ax:
        return None
    n = instance.num_bidders
    if config.winner_policy == "round-robin":
        return state.cursor % n, LOWER
    if rng is None:
        raise ValueError("a random generator is required for seeded-random winners")
    return int(rng.integers(n)), LOWER


def apply_move(state: SimState, mover: int, direction: str, instance: Instance,
               config: SimConfig, with_result: bool = False):
    """One epsilon step for `mover`; the auction is re-run to update the previous winner.

    With with_result the re-run AuctionOutcome is returned alongside the state.
    """
    t = list(state.targets)
    if direction == RAISE:
        t[mover] = max(t[mover] - config.epsilon, 0.0)
    elif direction == LOWER:
        t[mover] = min(t[mover] + config.epsilon, float(instance.caps[mover]))
    else:
        raise ValueError(f"unknown direction {direction!r}")
    # previous_winner is always the winner of the current state, so it is the
    # right tie-break context for the new one
    after = run_quasi_truthful(instance, t, TieBreakContext(state.previous_winner))
    cursor = state.cursor
    if direction == LOWER and config.winner_policy == "round-robin" and "A2" in config.axioms:
        cursor = (mover + 1) % instance.num_bidders
    new = SimState(tuple(t), after.winning_outcome, state.step + 1, cursor)
    return (new, after) if with_result else new


def simulate(instance: Instance, initial, config: SimConfig, pi_star=None) -> tuple[Trace, ConvergenceReport]:
    if len(initial) != instance.num_bidders:
        raise ValueError("one initial target per bidder expected")
    initial = tuple(float(min(max(x, 0.0), c)) for x, c in zip(initial, instance.caps))
    rng = np.random.default_rng(config.seed)
    cur = run_quasi_truthful(instance, initial)
    state = SimState(initial, cur.winning_outcome)
    trace = Trace(initial, initial_winner=cur.winning_outcome,
                  initial_winners=tuple(bool(x) for x in cur.is_winner))
    cef = CefMembership(instance)
    for _ in range(config.steps_for(instance)):
        move = next_mover(state, instance, config, rng, cur)
        if move is None:
            trace.halted = True
            break
        mover, direction = move
        before = cur
        state, cur = apply_move(state, mover, direction, instance, config, with_result=True)
        trace.events.append(TraceEvent(
            state.step, mover, direction, before.winning_outcome, cur.winning_outcome,
            tuple(bool(x) for x in before.is_winner), tuple(bool(x) for x in cur.is_winner),
            state.targets, cef(state.targets)))
    return trace, check_convergence(trace, instance, config, pi_star)


def _all_winner_flags(trace: Trace) -> list[bool]:
    return [all(trace.initial_winners)] + [all(e.winners_after) for e in trace.events]


def check_convergence(trace: Trace, instance: Instance, config: SimConfig, pi_star=None) -> ConvergenceReport:
    """Entry step and persistence of the configured target set along a trace.

    cef_eps / ncef_eps test the epsilon-neighbourhoods of the CEF set and its
    complement; boundary tests their union; egalitarian requires every bidder
    inside [pi*_j - eps b-(L(j)), pi*_j + eps b+(L(j))].

    Every vector lies in C or its complement, so the union test is vacuous.
    For boundary runs two_sided records the sharper fact: once near C, every
    later state is within 2 eps of both C and its complement (None when no
    outcome is preferred to o* by anyone, since then the complement is empty).
    degenerate flags that case for ncef_eps runs as well.
    """
    eps = config.epsilon
    states = trace.states()
    lo = hi = None
    degenerate = False
    two_sided = None
    if config.target == "egalitarian":
        if pi_star is None:
            raise ValueError("egalitarian target needs the egalitarian vector pi*")
        pi_star = np.asarray(pi_star, dtype=float)
        levels = levels_and_bounds(instance, pi_star)
        lo, hi = levels.bidder_bounds(pi_star, eps)
        lo_t, hi_t = lo - TOL, hi + TOL

        def member(t):
            t = np.asarray(t)
            return bool(np.all(t >= lo_t) and np.all(t <= hi_t))
    else:
        cef = CefMembership(instance)
        member = {"cef_eps": lambda t: cef.near_cef(t, eps),
                  "ncef_eps": lambda t: cef.near_ncef(t, eps),
                  "boundary": lambda t: cef.near_cef(t, eps) or cef.near_ncef(t, eps)}[config.target]
        v = instance.values
        ostar = cef.ostar
        degenerate = not bool(np.any(v > v[:, [ostar]] + TOL))

    flags = [member(t) for t in states]
    entered = next((k for k, f in enumerate(flags) if f), None)
    violations = 0 if entered is None else sum(1 for f in flags[entered:] if not f)
    if config.target == "boundary" and not degenerate:
        # the union above holds everywhere; the informative question is how
        # close to both sides the run stays once it is near the CEF set
        start = next((k for k, t in enumerate(states) if cef.near_cef(t, eps)), None)
        two_sided = start is not None and all(
            cef.near_cef(t, 2 * eps) and cef.near_ncef(t, 2 * eps) for t in states[start:])

    allwin = _all_winner_flags(trace)
    first_allwin = next((k for k, f in enumerate(allwin) if f), None)
    bound = int(sum(math.ceil(x / eps - 1e-9) for x in trace.initial))
    return ConvergenceReport(
        config.target, entered, entered is not None and violations == 0, first_allwin, bound,
        tuple(states[-1]),
        None if lo is None else tuple(float(x) for x in lo),
        None if hi is None else tuple(float(x) for x in hi),
        degenerate, violations, two_sided)


def egalitarian_reference(instance: Instance) -> np.ndarray:
    return egalitarian(instance).targets
