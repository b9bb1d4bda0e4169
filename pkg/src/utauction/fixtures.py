"""Canonical small instances used across tests, docs and the CLI."""
from __future__ import annotations

from .core import BidProfile, Bid, Instance


def e1() -> Instance:
    """Three bidders, three outcomes: A and B prefer outcome 2, C only values outcome 3."""
    return Instance([[1, 1.5, 0], [1, 1.5, 0], [0, 0, 2]], bidder_names=("A", "B", "C"))


def e1_zero_target_bids() -> BidProfile:
    """A and B bid only for outcome 1, C for outcome 3 (targets zero)."""
    return BidProfile((Bid([1, 0, 0], 0), Bid([1, 0, 0], 0), Bid([0, 0, 2], 0)))


def e2() -> Instance:
    return Instance([[1, 1.5, 0], [1, 1.5, 0], [1, 0.5, 0], [0, 0, 2]], bidder_names=("A", "B", "C", "D"))


def e3() -> Instance:
    """Three small bidders share outcome 1; D alone values outcome 2 at 2."""
    return Instance([[1, 0], [1, 0], [1, 0], [0, 2]], bidder_names=("A", "B", "C", "D"))


def e4() -> Instance:
    """Single item: outcome k means bidder k gets it."""
    return Instance([[10, 0], [0, 5]])


FIXTURES = {"e1": e1, "e2": e2, "e3": e3, "e4": e4}
