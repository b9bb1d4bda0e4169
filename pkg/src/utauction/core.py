"""Domain types for utility-target auctions and the effective-bid arithmetic.

Outcomes and bidders are 0-indexed everywhere. The fixed total ordering on
outcomes used for tie-breaking is ascending index order.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

TOL = 1e-9


class InstanceError(ValueError):
    """Raised when a values matrix violates the instance invariants."""


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ValidationReport:
    valid: bool
    errors: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    welfare: tuple[float, ...] = ()
    optimal_outcome: int | None = None
    unique_optimum: bool | None = None


def validate_instance(values, tol: float = TOL) -> ValidationReport:
    """Check a values matrix (or Instance) without raising.

    Reports negative or non-finite entries, ragged/empty shapes and whether
    the welfare-maximizing outcome is unique.
    """
    if isinstance(values, Instance):
        values = values.values
    errors: list[str] = []
    warnings: list[str] = []
    try:
        arr = np.array(values, dtype=float)
    except (TypeError, ValueError) as exc:
        return ValidationReport(False, [f"values: not a rectangular numeric matrix ({exc})"])
    if arr.ndim != 2:
        return ValidationReport(False, [f"values: expected a 2-D bidders x outcomes matrix, got {arr.ndim}-D"])
    n, m = arr.shape
    if n < 1:
        errors.append("values: need at least one bidder")
    if m < 1:
        errors.append("values: need at least one outcome")
    if errors:
        return ValidationReport(False, errors)
    bad = ~np.isfinite(arr)
    for i, o in zip(*np.nonzero(bad)):
        errors.append(f"values[{i}][{o}]: non-finite value {arr[i, o]!r}")
    neg = np.isfinite(arr) & (arr < 0)
    for i, o in zip(*np.nonzero(neg)):
        errors.append(f"values[{i}][{o}]: nonnegativity violated ({arr[i, o]!r} < 0)")
    if errors:
        return ValidationReport(False, errors)
    welfare = arr.sum(axis=0)
    best = int(np.argmax(welfare))
    tied = np.nonzero(welfare >= welfare[best] - tol)[0]
    unique = len(tied) == 1
    if not unique:
        warnings.append(
            "welfare optimum is not unique (outcomes %s); fixed order selects %d"
            % (", ".join(str(int(o)) for o in tied), best))
    return ValidationReport(True, [], warnings, tuple(float(w) for w in welfare), best, unique)


@dataclass(frozen=True, eq=False)
class Instance:
    """n bidders x m outcomes matrix of nonnegative values v[i][o]."""

    values: np.ndarray
    bidder_names: tuple[str, ...] | None = None
    outcome_names: tuple[str, ...] | None = None

    def __post_init__(self):
        report = validate_instance(self.values)
        if not report.valid:
            raise InstanceError("; ".join(report.errors))
        object.__setattr__(self, "values", _frozen(self.values))
        if self.bidder_names is not None and len(self.bidder_names) != self.num_bidders:
            raise InstanceError("bidder_names length does not match number of bidders")
        if self.outcome_names is not None and len(self.outcome_names) != self.num_outcomes:
            raise InstanceError("outcome_names length does not match number of outcomes")

    @property
    def num_bidders(self) -> int:
        return self.values.shape[0]

    @property
    def num_outcomes(self) -> int:
        return self.values.shape[1]

    @property
    def caps(self) -> np.ndarray:
        """Largest value of each bidder; utility-targets live in [0, cap]."""
        return self.values.max(axis=1)

    @property
    def welfare(self) -> np.ndarray:
        return self.values.sum(axis=0)

    def __eq__(self, other):
        if not isinstance(other, Instance):
            return NotImplemented
        return self.values.shape == other.values.shape and bool(np.array_equal(self.values, other.values))

    def __hash__(self):
        return hash(self.values.tobytes())


@dataclass(frozen=True, eq=False)
class Bid:
    """A value bid x over outcomes plus a utility-target pi.

    pi is clamped to max(x); targets above that only zero out every
    effective bid, which the clamped value already does. Negative targets
    are kept: they encode an offer to pay more than the value bid, which
    the quasi-truthful equivalent of an overbid needs.
    """

    x: np.ndarray
    pi: float

    def __post_init__(self):
        x = np.array(self.x, dtype=float)
        if x.ndim != 1 or x.size == 0:
            raise ValueError("value bid must be a non-empty vector over outcomes")
        if not np.all(np.isfinite(x)) or np.any(x < 0):
            raise ValueError("value bid entries must be finite and nonnegative")
        pi = float(self.pi)
        if not np.isfinite(pi):
            raise ValueError("utility-target must be finite")
        object.__setattr__(self, "x", _frozen(x))
        object.__setattr__(self, "pi", min(pi, float(x.max())))

    def effective(self) -> np.ndarray:
        return np.maximum(self.x - self.pi, 0.0)

    def __eq__(self, other):
        if not isinstance(other, Bid):
            return NotImplemented
        return self.pi == other.pi and bool(np.array_equal(self.x, other.x))

    def __repr__(self):
        return f"Bid(x={self.x.tolist()}, pi={self.pi!r})"


@dataclass(frozen=True)
class BidProfile:
    bids: tuple[Bid, ...]

    def __post_init__(self):
        bids = tuple(self.bids)
        if not bids:
            raise ValueError("empty bid profile")
        sizes = {b.x.size for b in bids}
        if len(sizes) != 1:
            raise ValueError("all value bids must cover the same outcomes")
        object.__setattr__(self, "bids", bids)

    @classmethod
    def quasi_truthful(cls, instance: Instance, targets) -> "BidProfile":
        targets = np.asarray(targets, dtype=float)
        if targets.shape != (instance.num_bidders,):
            raise ValueError(f"expected {instance.num_bidders} utility-targets, got shape {targets.shape}")
        return cls(tuple(Bid(instance.values[i], t) for i, t in enumerate(targets)))

    def __len__(self):
        return len(self.bids)

    def __getitem__(self, i) -> Bid:
        return self.bids[i]

    @property
    def targets(self) -> np.ndarray:
        return np.array([b.pi for b in self.bids])

    def effective_matrix(self) -> np.ndarray:
        return np.vstack([b.effective() for b in self.bids])

    def replace(self, i: int, bid: Bid) -> "BidProfile":
        bids = list(self.bids)
        bids[i] = bid
        return BidProfile(tuple(bids))

    def check(self, instance: Instance) -> None:
        if len(self.bids) != instance.num_bidders:
            raise ValueError(f"profile has {len(self.bids)} bids for {instance.num_bidders} bidders")
        if self.bids[0].x.size != instance.num_outcomes:
            raise ValueError(f"value bids cover {self.bids[0].x.size} outcomes, instance has {instance.num_outcomes}")


@dataclass(frozen=True)
class AuctionOutcome:
    winning_outcome: int
    payments: np.ndarray
    utilities: np.ndarray
    is_winner: np.ndarray
    totals: np.ndarray
    tied_outcomes: tuple[int, ...]

    @property
    def revenue(self) -> float:
        return float(self.payments.sum())

    @property
    def tie(self) -> bool:
        return len(self.tied_outcomes) > 1

    @property
    def all_winners(self) -> bool:
        return bool(self.is_winner.all())


def effective_bid(bid: Bid, o: int) -> float:
    """max(x(o) - pi, 0)."""
    if not 0 <= o < bid.x.size:
        raise IndexError(f"outcome {o} out of range for {bid.x.size} outcomes")
    return max(float(bid.x[o]) - bid.pi, 0.0)


def total_bids(instance: Instance, profile: BidProfile) -> np.ndarray:
    profile.check(instance)
    return profile.effective_matrix().sum(axis=0)


def quasi_truthful_effective(values: np.ndarray, targets) -> np.ndarray:
    """Effective-bid matrix of the profile (v_i, pi_i)."""
    return np.maximum(values - np.asarray(targets, dtype=float)[:, None], 0.0)
