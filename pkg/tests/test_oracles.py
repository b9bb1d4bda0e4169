import numpy as np
import pytest

from utauction import oracles
from utauction.core import BidProfile, Instance
from utauction.fixtures import e1, e1_zero_target_bids, e3, e4
from utauction.static import egalitarian, in_cef


def _at(cg, point):
    idx = tuple(int(np.argmin(np.abs(np.array(a) - x))) for a, x in zip(cg.axes, point))
    return bool(cg.in_cef[idx])


def test_cef_grid_examples():
    cg = oracles.enumerate_cef_grid(e3(), oracles.GridSpec(1 / 12))
    assert _at(cg, (0, 0, 0, 0))
    assert not _at(cg, (5 / 12, 1 / 3, 1 / 3, 0))
    cg = oracles.enumerate_cef_grid(e4(), oracles.GridSpec(0.5))
    assert _at(cg, (5, 0)) and not _at(cg, (5.5, 0))


def test_zero_vector_always_cef():
    rng = np.random.default_rng(0)
    for _ in range(20):
        inst = oracles.random_instance(rng, 3, 3)
        cg = oracles.enumerate_cef_grid(inst, oracles.GridSpec(0.5))
        assert cg.in_cef[(0,) * 3]


def test_grid_budget():
    with pytest.raises(oracles.BudgetExceeded):
        oracles.GridSpec(0.01, max_points=1000).axes(e3())
    with pytest.raises(ValueError):
        oracles.GridSpec(0)


def test_grid_includes_values():
    axes = oracles.GridSpec(0.4).axes(Instance([[1, 0.7]]))
    assert 0.7 in axes[0] and 1.0 in axes[0]
    axes = oracles.GridSpec(0.4, include_values=False).axes(Instance([[1, 0.7]]))
    assert 0.7 not in axes[0]


def test_equilibria_grid_examples():
    eqs = oracles.enumerate_equilibria_grid(e4(), oracles.GridSpec(0.5))
    hit = [g for g in eqs if np.allclose(g.targets, (5, 0))]
    assert hit and hit[0].is_cef
    eqs = oracles.enumerate_equilibria_grid(e3(), oracles.GridSpec(1 / 3))
    assert any(np.allclose(g.targets, (1 / 3, 1 / 3, 1 / 3, 0)) for g in eqs)
    eqs = oracles.enumerate_equilibria_grid(Instance([[1]]), oracles.GridSpec(0.5))
    assert [g.targets for g in eqs] == [(1.0,)]


def test_brute_force_egalitarian_examples():
    assert np.allclose(oracles.brute_force_egalitarian(e3(), oracles.GridSpec(1 / 12)), [(1 / 3, 1 / 3, 1 / 3, 0)])
    assert oracles.brute_force_egalitarian(e4(), oracles.GridSpec(0.5)) == [(5.0, 0.0)]
    assert oracles.brute_force_egalitarian(e1(), oracles.GridSpec(0.25)) == [(0.5, 0.5, 0.0)]


def test_best_response_oracle_examples():
    inst = e4()
    best, qt = oracles.best_response_oracle(inst, 0, BidProfile.quasi_truthful(inst, [0, 0]), oracles.GridSpec(0.5))
    assert best == qt == 5
    zero = Instance([[0, 0], [1, 2]])
    best, _ = oracles.best_response_oracle(zero, 0, BidProfile.quasi_truthful(zero, [0, 0]), oracles.GridSpec(0.5))
    assert best == 0
    # C against the zero-target bids: outbidding outcome 1's total of 2 costs all of C's value
    best, qt = oracles.best_response_oracle(e1(), 2, e1_zero_target_bids(), oracles.GridSpec(0.1),
                                            value_bids=[([0, 0, 3], 0.5), ([0, 0, 2.5], 0)])
    assert best == qt == 0


def test_quasi_truthful_bids_suffice():
    # no sampled non-truthful bid beats the best quasi-truthful one by more than a grid step
    rng = np.random.default_rng(1)
    step = 0.05
    for _ in range(40):
        inst = oracles.random_instance(rng, 3, 3)
        prof = BidProfile.quasi_truthful(inst, rng.uniform(0, 1, 3) * inst.caps)
        i = int(rng.integers(3))
        samples = [(rng.uniform(0, 2.5, 3), rng.uniform(0, 1)) for _ in range(30)]
        best, qt = oracles.best_response_oracle(inst, i, prof, oracles.GridSpec(step), samples)
        assert best <= qt + step + 1e-9


def test_oracle_agrees_with_analytic_cef():
    rng = np.random.default_rng(2)
    for _ in range(15):
        inst = oracles.random_instance(rng, 3, 3)
        cg = oracles.enumerate_cef_grid(inst, oracles.GridSpec(0.25))
        for idx, p in cg.points():
            assert in_cef(inst, p) == bool(cg.in_cef[idx])


def test_closure_counterexamples_empty():
    rng = np.random.default_rng(3)
    for _ in range(10):
        inst = oracles.random_instance(rng, 3, 2)
        assert oracles.closure_counterexamples(oracles.enumerate_cef_grid(inst, oracles.GridSpec(0.25))) == []


def test_closure_counterexamples_detects_breaks():
    flags = np.array([[True, False], [True, True]])
    cg = oracles.CefGrid(((0.0, 1.0), (0.0, 1.0)), flags)
    # (1, 1) is CEF but lowering bidder 0 lands on the non-CEF (0, 1)
    assert oracles.closure_counterexamples(cg) == [((1, 1), 0)]


def test_random_instance_unique_optimum():
    rng = np.random.default_rng(4)
    for _ in range(50):
        inst = oracles.random_instance(rng, 3, 4)
        w = np.sort(inst.welfare)
        assert w[-1] - w[-2] > 1e-6


def test_egalitarian_within_grid_step():
    rng = np.random.default_rng(6)
    for _ in range(10):
        inst = oracles.random_instance(rng, 3, 3)
        eg = egalitarian(inst).targets
        brute = oracles.brute_force_egalitarian(inst, oracles.GridSpec(0.1))
        assert brute
        assert min(np.max(np.abs(np.array(b) - eg)) for b in brute) <= 0.1 + 1e-9
