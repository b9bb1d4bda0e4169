import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from utauction.core import (Bid, BidProfile, Instance, InstanceError, effective_bid, total_bids,
                            validate_instance)
from utauction.fixtures import e1, e1_zero_target_bids, e3

vals = st.floats(0, 10, allow_nan=False)


def test_effective_bid_examples():
    b = Bid([1, 1.5, 0], 0.5)
    assert effective_bid(b, 1) == 1.0
    assert effective_bid(b, 2) == 0.0
    assert effective_bid(Bid([2], 0), 0) == 2.0


def test_effective_bid_out_of_range():
    with pytest.raises(IndexError):
        effective_bid(Bid([1, 2], 0), 2)
    with pytest.raises(IndexError):
        effective_bid(Bid([1, 2], 0), -1)


def test_target_clamped_to_max_value_bid():
    assert Bid([1, 3, 2], 7).pi == 3
    assert np.all(Bid([1, 3, 2], 7).effective() == 0)


def test_bid_rejects_bad_value_bids():
    with pytest.raises(ValueError):
        Bid([1, -1], 0)
    with pytest.raises(ValueError):
        Bid([1, np.inf], 0)
    with pytest.raises(ValueError):
        Bid([], 0)


def test_total_bids_examples():
    assert np.allclose(total_bids(e1(), e1_zero_target_bids()), [2, 0, 2])
    inst = e1()
    assert np.allclose(total_bids(inst, BidProfile.quasi_truthful(inst, [0, 0, 0])), inst.welfare)
    inst = e3()
    assert np.allclose(total_bids(inst, BidProfile.quasi_truthful(inst, [1 / 3, 1 / 3, 1 / 3, 0])), [2, 2])


def test_total_bids_dimension_mismatch():
    with pytest.raises(ValueError):
        total_bids(e3(), e1_zero_target_bids())
    inst = Instance([[1, 2], [3, 4], [5, 6]])
    with pytest.raises(ValueError):
        total_bids(inst, e1_zero_target_bids())


def test_validate_examples():
    r = validate_instance(e1())
    assert r.valid and r.optimal_outcome == 1 and r.unique_optimum
    assert r.welfare == (2.0, 3.0, 2.0)
    r = validate_instance([[1, -0.5], [0, 1]])
    assert not r.valid and any("nonnegativity" in e for e in r.errors)
    r = validate_instance(e3())
    assert r.valid and r.optimal_outcome == 0 and r.unique_optimum


def test_validate_reports_shapes_and_ties():
    assert not validate_instance([[1, 2], [3]]).valid
    assert not validate_instance([1, 2, 3]).valid
    assert not validate_instance([[np.nan, 1]]).valid
    r = validate_instance([[1, 1]])
    assert r.valid and not r.unique_optimum and r.warnings


def test_instance_invariants():
    with pytest.raises(InstanceError):
        Instance([[1, -1]])
    with pytest.raises(InstanceError):
        Instance([[1, 2]], bidder_names=("a", "b"))
    inst = Instance([[1, 2], [3, 0]])
    assert inst.num_bidders == 2 and inst.num_outcomes == 2
    assert list(inst.caps) == [2, 3]
    with pytest.raises(ValueError):
        inst.values[0, 0] = 5
    assert inst == Instance([[1, 2], [3, 0]])


@given(st.lists(vals, min_size=1, max_size=5), vals, vals)
def test_effective_bid_monotone(x, p1, p2):
    lo, hi = sorted((p1, p2))
    for o in range(len(x)):
        assert effective_bid(Bid(x, hi), o) <= effective_bid(Bid(x, lo), o)
        assert effective_bid(Bid(x, lo), o) >= 0
        bumped = list(x)
        bumped[o] += 1.0
        assert effective_bid(Bid(bumped, lo), o) >= effective_bid(Bid(x, lo), o)


@settings(max_examples=60)
@given(st.integers(2, 5), st.integers(1, 4), st.integers(0, 2**31 - 1))
def test_total_bids_additive(n, m, seed):
    rng = np.random.default_rng(seed)
    inst = Instance(rng.uniform(0, 2, size=(n, m)))
    prof = BidProfile.quasi_truthful(inst, rng.uniform(0, 2, size=n))
    full = total_bids(inst, prof)
    k = int(rng.integers(n))
    rest = Instance(np.delete(inst.values, k, axis=0))
    reduced = total_bids(rest, BidProfile(tuple(b for i, b in enumerate(prof.bids) if i != k)))
    assert np.allclose(full - reduced, prof.bids[k].effective(), atol=1e-12)
