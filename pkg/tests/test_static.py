import warnings

import numpy as np
import pytest

from utauction import oracles
from utauction.auction import TieBreakContext, run_quasi_truthful
from utauction.core import BidProfile, Instance
from utauction.fixtures import e1, e1_zero_target_bids, e2, e3, e4
from utauction.static import (CefMembership, check_equilibrium, cef_report_targets, egalitarian,
                              find_witnesses, in_cef, in_cef_eps, in_ncef_eps, is_cef,
                              levels_and_bounds, optimal_outcome, second_price_threat, vcg)

THIRD = 1 / 3


def test_optimal_outcome_examples():
    assert optimal_outcome(e1()) == (1, 3.0, True)
    assert optimal_outcome(e3()) == (0, 3.0, True)
    assert optimal_outcome(e2()) == (1, 3.5, True)
    assert not optimal_outcome(Instance([[1, 1]])).unique


def test_is_cef_zero_target_bids():
    rep = is_cef(e1(), e1_zero_target_bids())
    assert not rep.is_cef and rep.winning_outcome == 0
    assert rep.violated_outcomes == [(1, 3.0, 2.0)]
    assert rep.slack == -1.0


def test_all_winners_is_cef():
    rng = np.random.default_rng(0)
    seen = 0
    for _ in range(300):
        inst = Instance(rng.uniform(0, 2, size=(3, 3)))
        t = rng.uniform(0, 0.3, 3)
        r = run_quasi_truthful(inst, t)
        if r.all_winners:
            seen += 1
            assert is_cef(inst, BidProfile.quasi_truthful(inst, t), TieBreakContext(r.winning_outcome)).is_cef
    assert seen > 20


def test_e3_egalitarian_point_binds():
    rep = cef_report_targets(e3(), [THIRD, THIRD, THIRD, 0])
    assert rep.is_cef and abs(rep.slack) < 1e-12
    assert abs(rep.rhs[1] - rep.lhs[1]) < 1e-12


def test_eps_neighbourhoods():
    inst = e3()
    assert in_cef_eps(inst, [THIRD + 0.01, THIRD, THIRD, 0], 0.01)
    assert not in_cef_eps(inst, [THIRD + 0.01, THIRD, THIRD, 0], 0.001)
    assert in_cef_eps(inst, [0, 0, 0, 0], 0.5)
    assert in_ncef_eps(inst, [THIRD, THIRD, THIRD, 0], 1e-6)
    assert not in_ncef_eps(inst, [0, 0, 0, 0], 0.01)
    assert in_ncef_eps(inst, [0.5, 0.5, 0.5, 0], 0.0)
    with pytest.raises(ValueError):
        in_cef_eps(inst, [0, 0, 0, 0], -0.1)
    with pytest.raises(ValueError):
        in_ncef_eps(inst, [0, 0, 0, 0], -0.1)


def test_membership_helper_matches_functions():
    rng = np.random.default_rng(1)
    for _ in range(100):
        inst = oracles.random_instance(rng, 3, 3)
        mem = CefMembership(inst)
        t = tuple(rng.uniform(0, 1, 3) * inst.caps)
        assert mem(t) == in_cef(inst, t)
        assert mem.near_cef(t, 0.05) == in_cef_eps(inst, t, 0.05)
        assert mem.near_ncef(t, 0.05) == in_ncef_eps(inst, t, 0.05)


def test_vcg_examples():
    v = vcg(e3())
    assert np.all(v.prices == 0) and v.revenue == 0
    v = vcg(e4())
    assert list(v.prices) == [5, 0] and v.revenue == 5
    v = vcg(e1())
    assert np.allclose(v.prices, [0.5, 0.5, 0]) and v.revenue == 1.0


def test_second_price_threat_examples():
    assert second_price_threat(e3(), 0) == 2
    assert second_price_threat(e4(), 0) == 5
    assert second_price_threat(e1(), 1) == 2
    assert second_price_threat(e2()) == 2


def test_egalitarian_examples():
    r = egalitarian(e3())
    assert np.allclose(r.targets, [THIRD, THIRD, THIRD, 0], atol=1e-9)
    assert abs(r.revenue - 2) < 1e-9
    r = egalitarian(e4())
    assert np.allclose(r.targets, [5, 0]) and abs(r.payments[0] - 5) < 1e-9
    r = egalitarian(e1())
    assert np.allclose(r.targets, [0.5, 0.5, 0])
    assert abs(r.revenue - 2) < 1e-9
    assert r.events[0].reason == "cap" and r.events[0].fixed == (2,)


def test_egalitarian_warns_on_tied_optimum():
    with pytest.warns(RuntimeWarning):
        r = egalitarian(Instance([[1, 0], [0, 1]]))
    assert r.warnings


def test_check_equilibrium_examples():
    assert check_equilibrium(e3(), egalitarian(e3()).targets).is_equilibrium
    rep = check_equilibrium(e3(), [0, 0, 0, 0])
    assert not rep.is_equilibrium and {d.bidder for d in rep.deviations} >= {0, 1, 2}
    rep = check_equilibrium(e4(), [9.9, 0])
    assert not rep.is_equilibrium and rep.winning_outcome == 1


def test_witnesses():
    assert find_witnesses(e1(), [0.5, 0.5, 0], 0) == [2]
    assert find_witnesses(e3(), [THIRD, THIRD, THIRD, 0], 0) == [1]
    assert find_witnesses(e3(), [THIRD, THIRD, THIRD, 0], 3) == []
    with pytest.raises(ValueError):
        find_witnesses(e3(), [1, 1, 1, 0], 0)


def test_levels_examples():
    lv = levels_and_bounds(e1(), [0.5, 0.5, 0])
    assert lv.levels == ((2,), (0, 1)) and lv.level_utilities == (0.0, 0.5)
    assert lv.lower_bounds == (1, 4) and lv.upper_bounds == (2, 16)
    lv = levels_and_bounds(e3(), [THIRD, THIRD, THIRD, 0])
    assert lv.levels == ((3,), (0, 1, 2))
    assert lv.lower_bounds == (1, 4) and lv.upper_bounds == (2, 32)
    lv = levels_and_bounds(Instance(np.ones((4, 2))), [0.7] * 4)
    assert lv.lower_bounds == (1,) and lv.upper_bounds == (16,)
    assert lv.bounds_claim_holds()


# ---- properties on random instances -------------------------------------

def _instances(seed, count, nmax=4, mmax=4):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        yield rng, oracles.random_instance(rng, int(rng.integers(2, nmax + 1)), int(rng.integers(2, mmax + 1)))


def test_claims_on_random_cef_profiles():
    found = 0
    for rng, inst in _instances(10, 150):
        opt = optimal_outcome(inst)
        prices = vcg(inst).prices
        threat = second_price_threat(inst)
        for _ in range(10):
            t = rng.uniform(0, 1, inst.num_bidders) * inst.caps * rng.uniform(0, 1)
            if not in_cef(inst, t):
                continue
            found += 1
            r = run_quasi_truthful(inst, t, TieBreakContext(opt.outcome))
            assert inst.welfare[r.winning_outcome] >= opt.welfare - 1e-9
            assert np.all(r.payments >= prices - 1e-9)
            assert r.revenue >= threat - 1e-9
    assert found > 100


def test_closure_properties_random():
    for rng, inst in _instances(11, 100):
        for _ in range(10):
            t = rng.uniform(0, 1, inst.num_bidders) * inst.caps
            d = rng.uniform(0, 1, inst.num_bidders) * t
            if in_cef(inst, t):
                assert in_cef(inst, t - d)
            else:
                up = np.minimum(t + rng.uniform(0, 1, inst.num_bidders), inst.caps)
                assert not in_cef(inst, up)


def test_egalitarian_properties_random():
    for rng, inst in _instances(12, 80):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            r = egalitarian(inst)
        assert in_cef(inst, r.targets)
        assert check_equilibrium(inst, r.targets).is_equilibrium
        assert r.revenue >= max(vcg(inst).revenue, second_price_threat(inst)) - 1e-9
        lv = levels_and_bounds(inst, r.targets)
        assert lv.bounds_claim_holds()
        ostar = optimal_outcome(inst).outcome
        for j in range(inst.num_bidders):
            w = find_witnesses(inst, r.targets, j)
            if r.targets[j] < inst.values[j, ostar] - 1e-7:
                assert w, (inst.values, r.targets, j)
            for o in w:
                losers = np.nonzero(inst.values[:, o] < r.targets - 1e-9)[0]
                top = max(r.targets[losers])
                levels = {lv.level_of[i] for i in losers if r.targets[i] >= top - 1e-9}
                assert len(levels) == 1


def test_egalitarian_is_lexicographically_maximal_on_grid():
    for rng, inst in _instances(13, 12, nmax=3, mmax=3):
        step = 0.1
        eg = egalitarian(inst)
        mine = np.sort(run_quasi_truthful(inst, eg.targets, TieBreakContext(eg.outcome)).utilities)
        for g in oracles.enumerate_equilibria_grid(inst, oracles.GridSpec(step)):
            if not g.is_cef:
                continue
            other = np.sort(g.utilities)
            # mine >= other lexicographically, up to one grid step per coordinate
            for a, b in zip(mine, other):
                if a > b + step:
                    break
                assert a >= b - step
                if abs(a - b) > step:
                    break
