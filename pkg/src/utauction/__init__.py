"""Utility-target (pay-your-bid) auctions: engine, static benchmarks, dynamics, ads."""
from .auction import (NO_HISTORY, TieBreakContext, classify_bidders, quasi_truthful_equivalent,
                      run_auction, run_quasi_truthful)
from .core import (TOL, AuctionOutcome, Bid, BidProfile, Instance, InstanceError, effective_bid,
                   total_bids, validate_instance)
from .dynamics import SimConfig, SimState, Trace, apply_move, check_convergence, next_mover, simulate
from .static import (CefMembership, CefReport, LevelPartition, check_equilibrium, egalitarian,
                     find_witnesses, in_cef, in_cef_eps, in_ncef_eps, is_cef, levels_and_bounds,
                     optimal_outcome, second_price_threat, vcg)

__version__ = "0.1.0"

__all__ = [
    "TOL", "Instance", "InstanceError", "Bid", "BidProfile", "AuctionOutcome", "effective_bid",
    "total_bids", "validate_instance", "TieBreakContext", "NO_HISTORY", "run_auction",
    "run_quasi_truthful", "classify_bidders", "quasi_truthful_equivalent", "CefReport",
    "CefMembership", "LevelPartition", "optimal_outcome", "is_cef", "in_cef", "in_cef_eps",
    "in_ncef_eps", "vcg", "second_price_threat", "egalitarian", "check_equilibrium",
    "find_witnesses", "levels_and_bounds", "SimConfig", "SimState", "Trace", "next_mover",
    "apply_move", "simulate", "check_convergence",
]
