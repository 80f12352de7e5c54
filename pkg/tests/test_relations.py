"""Faster-than checking, simulation, bisimulation."""

import pytest

from smdpcheck import corpus
from smdpcheck.composition import compose
from smdpcheck.cylinders import TimeBoundedCylinder, prob_cylinder_paths
from smdpcheck.model import Smdp
from smdpcheck.distributions import Exponential
from smdpcheck.errors import LabelMismatch
from smdpcheck.relations import (
    SchedulerSearchSpec,
    bisimilar,
    equally_fast_bounded,
    faster_than_bounded,
    simulates,
)


@pytest.fixture(scope="module")
def U():
    return corpus.load("fig2_U.smdp")


@pytest.fixture(scope="module")
def V():
    return corpus.load("fig2_V.smdp")


@pytest.fixture(scope="module")
def U3():
    return corpus.load("fig3_U.smdp")


@pytest.fixture(scope="module")
def V3():
    return corpus.load("fig3_V.smdp")


def recheck_witness(u, v, w):
    """Recomputing both probabilities must reproduce the reported violation."""
    word = tuple(w.word)
    slow = prob_cylinder_paths(v, w.slow_scheduler, v.initial, TimeBoundedCylinder(word, w.t))
    fast = prob_cylinder_paths(u, w.fast_scheduler, u.initial, TimeBoundedCylinder(word, w.t))
    assert slow == pytest.approx(w.prob_slow, abs=1e-12)
    assert fast == pytest.approx(w.prob_fast, abs=1e-12)
    assert fast < slow - 1e-9


# --- faster-than ---------------------------------------------------------------

def test_fig2_not_refuted(U, V):
    verdict = faster_than_bounded(U, V, depth=13)
    assert verdict.outcome == "NotRefuted"
    assert verdict.depth == 13


def test_fig3_refuted_with_mixed_adversary(U3, V3):
    verdict = faster_than_bounded(U3, V3, depth=8, search=SchedulerSearchSpec(step=0.5))
    assert verdict.refuted
    w = verdict.witness
    assert w.slow_scheduler.choice["v0"] == {"a": 0.5, "b": 0.5}
    recheck_witness(U3, V3, w)


def test_fig3_refuted_at_depth_two(U3, V3):
    verdict = faster_than_bounded(U3, V3, depth=2, search=SchedulerSearchSpec(step=0.5))
    assert verdict.refuted
    assert len(verdict.witness.word) <= 2
    recheck_witness(U3, V3, verdict.witness)


def test_reflexivity_not_refuted(U, V3):
    for m in (U, V3):
        verdict = faster_than_bounded(m, m, depth=4, search=SchedulerSearchSpec(step=0.5))
        assert verdict.outcome == "NotRefuted"


def test_reflexivity_on_awkward_models():
    # subdistribution rows and non-exponential residences
    for name in ("branchy.smdp", "uniform_chain.smdp"):
        m = corpus.load(name)
        verdict = faster_than_bounded(m, m, depth=3, search=SchedulerSearchSpec(step=0.5))
        assert verdict.outcome == "NotRefuted", name


def test_anomaly_composites_refuted():
    U = corpus.load("fig2_U.smdp")
    V = corpus.load("fig2_V.smdp")
    for wname, op in (("fig4_W_product.smdp", "prodrate"),
                      ("fig4_W_minimum.smdp", "min"),
                      ("fig4_W_maximum.smdp", "max")):
        W = corpus.load(wname)
        UW = compose(U, W, op)
        VW = compose(V, W, op)
        verdict = faster_than_bounded(UW, VW, depth=13)
        assert verdict.refuted, wname
        w = verdict.witness
        assert w.word == "aa"
        assert w.t == pytest.approx(2.0)
        recheck_witness(UW, VW, w)


def test_equally_fast(U, V, U3, V3):
    both = equally_fast_bounded(U, U, depth=4)
    assert both[0].outcome == both[1].outcome == "NotRefuted"
    pair = equally_fast_bounded(U3, V3, depth=4, search=SchedulerSearchSpec(step=0.5))
    assert any(v.refuted for v in pair)


def test_identical_chains_equally_fast():
    # same process with renamed states: both directions survive
    a = corpus.load("fig2_U.smdp")
    b = Smdp(["a"], ["x0", "x1", "x2"], "x0",
             {"x0": Exponential(2.0), "x1": Exponential(0.5), "x2": Exponential(1.0)},
             {("x0", "a"): {"x1": 1.0}, ("x1", "a"): {"x2": 1.0}, ("x2", "a"): {"x2": 1.0}})
    pair = equally_fast_bounded(a, b, depth=5)
    assert pair[0].outcome == pair[1].outcome == "NotRefuted"


def test_label_mismatch(U, U3):
    with pytest.raises(LabelMismatch):
        faster_than_bounded(U, U3, depth=2)


def test_depth_validation(U):
    with pytest.raises(ValueError):
        faster_than_bounded(U, U, depth=0)


def test_adversary_lattice_guard():
    from smdpcheck.errors import SmdpcheckError

    names = [f"s{i}" for i in range(10)]
    m = Smdp(["a", "b"], names, "s0", {s: Exponential(1.0) for s in names},
             {(s, "a"): {s: 1.0} for s in names})
    with pytest.raises(SmdpcheckError):
        faster_than_bounded(m, m, depth=2)


# --- simulation ------------------------------------------------------------------

def test_fig3_simulation_holds(U3, V3):
    res = simulates(U3, V3)
    assert res.holds
    assert ("u0", "v0") in res.pairs


def test_fig2_simulation_fails(U, V):
    # the faster first state cannot be simulated by the slower one
    assert not simulates(U, V).holds


def test_self_simulation(U, V3):
    for m in (U, V3):
        res = simulates(m, m)
        assert res.holds
        assert all((s, s) in res.pairs for s in m.states)


def test_simulation_relation_closed_under_conditions(U3, V3):
    from smdpcheck.distributions import dominates
    from smdpcheck.relations import _weight_function_exists

    res = simulates(U3, V3)
    allowed = set(res.pairs)
    for (s1, s2) in res.pairs:
        assert dominates(V3.residence_of(s2), U3.residence_of(s1)).holds
        for a in U3.labels:
            assert _weight_function_exists(U3.succ(s1, a), V3.succ(s2, a), allowed)


def test_simulation_needs_matching_masses():
    # a subdistribution row cannot be coupled with a full row
    a = Smdp(["a"], ["s0"], "s0", {"s0": Exponential(1.0)}, {("s0", "a"): {"s0": 0.5}})
    b = Smdp(["a"], ["t0"], "t0", {"t0": Exponential(1.0)}, {("t0", "a"): {"t0": 1.0}})
    assert not simulates(a, b).holds
    assert not simulates(b, a).holds


# --- bisimulation -----------------------------------------------------------------

def test_fig3_bisimilar(U3, V3):
    res = bisimilar(U3, V3)
    assert res.holds
    assert ("u0", "v0") in res.pairs


def test_fig2_not_bisimilar(U, V):
    assert not bisimilar(U, V).holds


def test_self_bisimilar_all(U, V3):
    for m in (U, V3):
        assert bisimilar(m, m).holds


def test_bisimilarity_implies_two_way_simulation():
    pairs = [("fig3_U.smdp", "fig3_V.smdp"), ("fig2_U.smdp", "fig2_U.smdp"),
             ("fig2_U.smdp", "fig2_V.smdp"), ("branchy.smdp", "branchy.smdp")]
    for na, nb in pairs:
        a, b = corpus.load(na), corpus.load(nb)
        if bisimilar(a, b).holds:
            assert simulates(a, b).holds and simulates(b, a).holds, (na, nb)


def test_faster_than_transitive_consistency():
    # two NotRefuted links compose to a NotRefuted link at the same bounds;
    # the chains dominate each other stage by stage
    def scaled_chain(prefix, factor):
        rates = [2.0 * factor, 0.5 * factor, 1.0 * factor]
        names = [f"{prefix}{i}" for i in range(3)]
        return Smdp(["a"], names, names[0],
                    {s: Exponential(r) for s, r in zip(names, rates)},
                    {(names[0], "a"): {names[1]: 1.0},
                     (names[1], "a"): {names[2]: 1.0},
                     (names[2], "a"): {names[2]: 1.0}})

    fast, mid, slow = scaled_chain("f", 2.0), scaled_chain("m", 1.0), scaled_chain("s", 0.5)
    d = 6
    ab = faster_than_bounded(fast, mid, d)
    bc = faster_than_bounded(mid, slow, d)
    ac = faster_than_bounded(fast, slow, d)
    assert ab.outcome == bc.outcome == ac.outcome == "NotRefuted"


def test_incomparability_witnesses():
    """simulation and the faster-than preorder disagree in both directions."""
    U3, V3 = corpus.load("fig3_U.smdp"), corpus.load("fig3_V.smdp")
    assert bisimilar(U3, V3).holds
    assert faster_than_bounded(U3, V3, depth=6, search=SchedulerSearchSpec(step=0.5)).refuted
    U, V = corpus.load("fig2_U.smdp"), corpus.load("fig2_V.smdp")
    assert faster_than_bounded(U, V, depth=8).outcome == "NotRefuted"
    assert not simulates(U, V).holds
    assert not bisimilar(U, V).holds
