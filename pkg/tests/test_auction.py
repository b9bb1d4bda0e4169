import numpy as np
import pytest

from utauction.auction import (NO_HISTORY, TieBreakContext, classify_bidders, quasi_truthful_equivalent,
                               run_auction, run_quasi_truthful, select_winner)
from utauction.core import Bid, BidProfile, Instance
from utauction.fixtures import e1, e1_zero_target_bids, e3


def test_e1_zero_target_bids_tie_goes_to_first_outcome():
    r = run_auction(e1(), e1_zero_target_bids(), NO_HISTORY)
    assert r.winning_outcome == 0 and r.tie and r.tied_outcomes == (0, 2)
    assert np.allclose(r.payments, [1, 1, 0])


def test_previous_winner_wins_ties():
    r = run_auction(e1(), e1_zero_target_bids(), TieBreakContext(2))
    assert r.winning_outcome == 2
    # a previous winner outside the tie has no say
    r = run_auction(e1(), e1_zero_target_bids(), TieBreakContext(1))
    assert r.winning_outcome == 0


def test_select_winner_tolerance():
    w, tied = select_winner(np.array([1.0, 1.0 + 5e-10, 0.5]))
    assert w == 0 and tied == (0, 1)
    w, _ = select_winner(np.array([1.0, 1.0 + 1e-6]))
    assert w == 1


def test_e3_zero_targets():
    inst = e3()
    r = run_auction(inst, BidProfile.quasi_truthful(inst, [0, 0, 0, 0]))
    assert r.winning_outcome == 0
    assert np.allclose(r.payments, [1, 1, 1, 0]) and np.allclose(r.utilities, 0)


def test_invalid_previous_winner():
    with pytest.raises(ValueError):
        run_auction(e3(), BidProfile.quasi_truthful(e3(), [0, 0, 0, 0]), TieBreakContext(5))


def test_classification_examples():
    inst = e1()
    prof = BidProfile.quasi_truthful(inst, [0, 0, 0])
    assert classify_bidders(inst, prof, run_auction(inst, prof)).all()
    r = run_quasi_truthful(inst, [0.5, 0.5, 0])
    assert r.winning_outcome == 1 and r.all_winners and np.allclose(r.utilities, [0.5, 0.5, 0])
    r = run_quasi_truthful(inst, [2, 0, 0])
    assert r.winning_outcome == 2
    assert list(r.is_winner) == [False, True, True] and r.utilities[0] == 0


def test_classification_uses_definition_for_non_truthful_bids():
    # zero-target bids: everyone asked for 0 and gets 0, so all are winners even
    # though A and B would rather have outcome 2
    inst, prof = e1(), e1_zero_target_bids()
    r = run_auction(inst, prof)
    assert r.all_winners
    assert list(classify_bidders(inst, prof, r)) == list(r.is_winner)


def test_quasi_truthful_equivalent_examples():
    inst, prof = e1(), e1_zero_target_bids()
    q = quasi_truthful_equivalent(inst, 0, prof)
    assert q == Bid(inst.values[0], 0.0)
    r = run_auction(inst, prof.replace(0, q))
    assert np.allclose(r.totals, [2, 1.5, 2]) and r.winning_outcome == 0 and r.utilities[0] == 0

    inst = e3()
    prof = BidProfile.quasi_truthful(inst, [0.2, 0.2, 0.2, 0])
    assert quasi_truthful_equivalent(inst, 1, prof) == prof.bids[1]


def test_quasi_truthful_equivalent_overbid_by_d():
    # D bids (0, 3) asking 1.5; the others bid truthfully with target 0.
    # Totals (3, 1.5): outcome 1 wins and D gets 0, so the equivalent is (v_D, 0).
    inst = e3()
    prof = BidProfile.quasi_truthful(inst, [0, 0, 0, 0]).replace(3, Bid([0, 3], 1.5))
    before = run_auction(inst, prof)
    assert np.allclose(before.totals, [3, 1.5]) and before.utilities[3] == 0
    q = quasi_truthful_equivalent(inst, 3, prof)
    assert q == Bid([0, 2], 0.0)
    assert run_auction(inst, prof.replace(3, q)).utilities[3] == 0


def test_quasi_truthful_equivalent_keeps_negative_utility():
    # overbidding can leave a bidder with negative utility; the equivalent
    # must reproduce it, so its target is negative
    inst = Instance([[1, 0], [0, 1.5]])
    prof = BidProfile((Bid([3, 0], 0), Bid([0, 1.5], 0)))
    r = run_auction(inst, prof)
    assert r.utilities[0] == -2
    q = quasi_truthful_equivalent(inst, 0, prof)
    assert q.pi == -2
    assert run_auction(inst, prof.replace(0, q)).utilities[0] == -2


def _random_profile(rng, inst):
    return BidProfile.quasi_truthful(inst, rng.uniform(0, 1, inst.num_bidders) * inst.caps)


def test_pay_your_bid():
    rng = np.random.default_rng(0)
    for _ in range(200):
        n, m = rng.integers(2, 5, size=2)
        inst = Instance(rng.uniform(0, 2, size=(n, m)))
        prof = _random_profile(rng, inst)
        r = run_auction(inst, prof)
        i, j = rng.choice(n, 2, replace=False)
        # shrink j's bid everywhere except on the winning outcome
        x = prof.bids[j].x.copy() * 0.3
        x[r.winning_outcome] = prof.bids[j].x[r.winning_outcome]
        r2 = run_auction(inst, prof.replace(j, Bid(x, prof.bids[j].pi)), TieBreakContext(r.winning_outcome))
        assert r2.winning_outcome == r.winning_outcome
        assert r2.payments[i] == r.payments[i]


def test_claim_losers_cannot_gain_by_lowering_winners_cannot_gain_by_raising():
    rng = np.random.default_rng(1)
    checked = 0
    for _ in range(300):
        n, m = rng.integers(2, 5, size=2)
        inst = Instance(rng.uniform(0, 2, size=(n, m)))
        targets = rng.uniform(0, 1, n) * inst.caps
        r = run_quasi_truthful(inst, targets)
        ctx = TieBreakContext(r.winning_outcome)
        for i in range(n):
            t = targets.copy()
            if r.is_winner[i]:
                t[i] = rng.uniform(0, targets[i])          # raise: lower target
            else:
                t[i] = rng.uniform(targets[i], inst.caps[i])  # lower: higher target
            r2 = run_quasi_truthful(inst, t, ctx)
            assert r2.utilities[i] <= r.utilities[i] + 1e-9
            checked += 1
    assert checked > 500


def test_claim_loser_can_always_raise_to_win_at_current_utility():
    rng = np.random.default_rng(2)
    losers = 0
    for _ in range(300):
        n, m = rng.integers(2, 5, size=2)
        inst = Instance(rng.uniform(0, 2, size=(n, m)))
        targets = rng.uniform(0, 1, n) * inst.caps
        r = run_quasi_truthful(inst, targets)
        for i in np.nonzero(~r.is_winner)[0]:
            t = targets.copy()
            t[i] = r.utilities[i]
            r2 = run_quasi_truthful(inst, t, TieBreakContext(r.winning_outcome))
            assert r2.is_winner[i]
            assert abs(r2.utilities[i] - r.utilities[i]) <= 1e-9
            losers += 1
    assert losers > 50
