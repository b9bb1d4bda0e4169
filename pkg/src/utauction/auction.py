"""Single-shot utility-target auction: winner determination and payments."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import TOL, AuctionOutcome, Bid, BidProfile, Instance


@dataclass(frozen=True)
class TieBreakContext:
    """Most-recent winning outcome, if any; it wins ties it is part of."""

    previous_winner: int | None = None


NO_HISTORY = TieBreakContext()


def select_winner(totals: np.ndarray, previous_winner: int | None = None, tol: float = TOL):
    """Return (winner, tied outcomes) for a vector of total bids."""
    best = totals.max()
    tied = tuple(int(o) for o in np.nonzero(totals >= best - tol)[0])
    if previous_winner is not None and previous_winner in tied:
        return previous_winner, tied
    return tied[0], tied


def _settle(values: np.ndarray, eff: np.ndarray, targets: np.ndarray,
            previous_winner: int | None, tol: float) -> AuctionOutcome:
    totals = eff.sum(axis=0)
    winner, tied = select_winner(totals, previous_winner, tol)
    payments = eff[:, winner].copy()
    utilities = values[:, winner] - payments
    is_winner = np.abs(utilities - targets) <= tol
    return AuctionOutcome(winner, payments, utilities, is_winner, totals, tied)


def run_auction(instance: Instance, profile: BidProfile, ctx: TieBreakContext = NO_HISTORY,
                tol: float = TOL) -> AuctionOutcome:
    """Pick the outcome with the highest total effective bid; everyone pays their bid for it."""
    profile.check(instance)
    if ctx.previous_winner is not None and not 0 <= ctx.previous_winner < instance.num_outcomes:
        raise ValueError(f"previous winner {ctx.previous_winner} is not a valid outcome")
    return _settle(instance.values, profile.effective_matrix(), profile.targets, ctx.previous_winner, tol)


def run_quasi_truthful(instance: Instance, targets, ctx: TieBreakContext = NO_HISTORY,
                       tol: float = TOL) -> AuctionOutcome:
    """Fast path for profiles of the form (v_i, pi_i)."""
    targets = np.minimum(np.asarray(targets, dtype=float), instance.caps)
    eff = np.maximum(instance.values - targets[:, None], 0.0)
    return _settle(instance.values, eff, targets, ctx.previous_winner, tol)


def classify_bidders(instance: Instance, profile: BidProfile, result: AuctionOutcome,
                     tol: float = TOL) -> np.ndarray:
    """Winner flags: a bidder wins iff it receives exactly the utility it asked for."""
    targets = profile.targets
    utilities = instance.values[:, result.winning_outcome] - profile.effective_matrix()[:, result.winning_outcome]
    return np.abs(utilities - targets) <= tol


def quasi_truthful_equivalent(instance: Instance, i: int, profile: BidProfile,
                              ctx: TieBreakContext = NO_HISTORY, tol: float = TOL) -> Bid:
    """The bid (v_i, u_i) where u_i is what bidder i currently gets.

    Substituting it leaves i's utility unchanged as long as ties follow a
    fixed order (ctx is held fixed).
    """
    result = run_auction(instance, profile, ctx, tol)
    if result.is_winner[i]:
        # u_i == pi_i up to tol; keep the exact target rather than the float noise
        return Bid(instance.values[i], profile.bids[i].pi)
    return Bid(instance.values[i], float(result.utilities[i]))
