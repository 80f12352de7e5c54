"""Cylinder probability engines and their cross-checks."""

import pytest

from smdpcheck import corpus
from smdpcheck.cylinders import (
    Interval,
    RectCylinder,
    RectStep,
    TimeBoundedCylinder,
    prob_cylinder_inductive,
    prob_cylinder_paths,
    prob_rect_cylinder,
    trace_probability,
)
from smdpcheck.distributions import Exponential, PhaseType, cdf_eval, convolve_power
from smdpcheck.errors import UnknownLabel, UnknownState
from smdpcheck.model import Scheduler, dirac_scheduler, uniform_scheduler

T_SATURATE = 1e6


@pytest.fixture(scope="module")
def fig2_U():
    return corpus.load("fig2_U.smdp")


@pytest.fixture(scope="module")
def fig2_V():
    return corpus.load("fig2_V.smdp")


@pytest.fixture(scope="module")
def fig3_V():
    return corpus.load("fig3_V.smdp")


def all_states_step(m, label, iv):
    return RectStep(frozenset([label]), (iv,), frozenset(m.states))


# --- rectangular cylinders ----------------------------------------------------

def test_rect_one_step_is_residence_mass(fig2_U):
    sch = dirac_scheduler(fig2_U, "a")
    c = RectCylinder((all_states_step(fig2_U, "a", Interval.upto(1.5)),))
    assert prob_rect_cylinder(fig2_U, sch, "u0", c) == pytest.approx(
        cdf_eval(Exponential(2.0), 1.5))


def test_rect_empty_label_set_gives_zero(fig2_U):
    sch = dirac_scheduler(fig2_U, "a")
    c = RectCylinder((RectStep(frozenset(), (Interval.upto(1.0),), frozenset(fig2_U.states)),))
    assert prob_rect_cylinder(fig2_U, sch, "u0", c) == 0.0


def test_rect_two_full_steps_saturate(fig2_U):
    sch = dirac_scheduler(fig2_U, "a")
    c = RectCylinder((
        all_states_step(fig2_U, "a", Interval.unbounded()),
        all_states_step(fig2_U, "a", Interval.unbounded()),
    ))
    assert prob_rect_cylinder(fig2_U, sch, "u0", c) == pytest.approx(1.0, abs=1e-12)


def test_rect_state_restriction():
    m = corpus.load("branchy.smdp")
    sch = uniform_scheduler(m)
    c = RectCylinder((RectStep(frozenset(["a"]), (Interval.unbounded(),), frozenset(["s1"])),))
    # label a carries weight 1/2; tau(s0,a)(s1) = 1/2
    assert prob_rect_cylinder(m, sch, "s0", c) == pytest.approx(0.25)


def test_rect_atom_boundary_semantics():
    m = corpus.load("branchy.smdp")
    sch = Scheduler({s: {"b": 1.0} for s in m.states})
    # s2 has residence dirac(0.5); a closed endpoint captures the atom
    closed = RectCylinder((RectStep(frozenset(["b"]), (Interval(0.0, 0.5),), frozenset(m.states)),))
    opened = RectCylinder((RectStep(frozenset(["b"]), (Interval(0.0, 0.5, closed_hi=False),),
                                    frozenset(m.states)),))
    assert prob_rect_cylinder(m, sch, "s2", closed) == pytest.approx(1.0)
    assert prob_rect_cylinder(m, sch, "s2", opened) == 0.0


def test_rect_unknown_refs_raise(fig2_U):
    sch = dirac_scheduler(fig2_U, "a")
    with pytest.raises(UnknownState):
        prob_rect_cylinder(fig2_U, sch, "u0", RectCylinder((
            RectStep(frozenset(["a"]), (Interval.upto(1.0),), frozenset(["phantom"])),)))
    with pytest.raises(UnknownLabel):
        prob_rect_cylinder(fig2_U, sch, "u0", RectCylinder((
            RectStep(frozenset(["z"]), (Interval.upto(1.0),), frozenset(fig2_U.states)),)))


# --- path engine ---------------------------------------------------------------

def test_single_step_is_residence_cdf(fig2_U):
    sch = dirac_scheduler(fig2_U, "a")
    for t in (0.25, 1.0, 4.0):
        assert prob_cylinder_paths(fig2_U, sch, "u0", TimeBoundedCylinder(("a",), t)) == \
            pytest.approx(cdf_eval(Exponential(2.0), t), abs=1e-12)


def test_word_power_matches_convolution(fig2_U):
    # length-n words on the chain follow the convolution of the first n residences
    sch = dirac_scheduler(fig2_U, "a")
    for n, t in ((2, 2.0), (3, 1.0), (5, 4.0)):
        rates = [2.0, 0.5] + [1.0] * (n - 2)
        expect = cdf_eval(PhaseType(tuple(rates)), t)
        got = prob_cylinder_paths(fig2_U, sch, "u0", TimeBoundedCylinder(("a",) * n, t))
        assert got == pytest.approx(expect, abs=1e-12)


def test_fig3_half_adversary_halves(fig3_V):
    sch = corpus.load_scheduler("fig3_V_half.sched")
    for n in (2, 3, 4):
        for t in (0.5, 2.0):
            got = prob_cylinder_paths(fig3_V, sch, "v0", TimeBoundedCylinder(("a",) * n, t))
            expect = 0.5 * cdf_eval(convolve_power(Exponential(1.0), n), t)
            assert got == pytest.approx(expect, abs=1e-12)


def test_fig2_swap_identity(fig2_U, fig2_V):
    # swapping the first two residences leaves every a^n probability unchanged
    su = dirac_scheduler(fig2_U, "a")
    sv = dirac_scheduler(fig2_V, "a")
    for n in range(2, 7):
        for t in (0.5, 1.0, 2.0, 5.0):
            pu = prob_cylinder_paths(fig2_U, su, "u0", TimeBoundedCylinder(("a",) * n, t))
            pv = prob_cylinder_paths(fig2_V, sv, "v0", TimeBoundedCylinder(("a",) * n, t))
            assert abs(pu - pv) <= 1e-9


def test_monotone_in_t_and_word_extension(fig2_U):
    sch = dirac_scheduler(fig2_U, "a")
    ts = [0.1, 0.5, 1.0, 2.0, 4.0, 8.0]
    vals = [prob_cylinder_paths(fig2_U, sch, "u0", TimeBoundedCylinder(("a", "a"), t))
            for t in ts]
    assert all(a <= b + 1e-12 for a, b in zip(vals, vals[1:]))
    for t in ts:
        shorter = prob_cylinder_paths(fig2_U, sch, "u0", TimeBoundedCylinder(("a",), t))
        longer = prob_cylinder_paths(fig2_U, sch, "u0", TimeBoundedCylinder(("a", "a"), t))
        assert longer <= shorter + 1e-12


def test_trace_probability(fig2_U, fig3_V):
    su = dirac_scheduler(fig2_U, "a")
    assert trace_probability(fig2_U, su, ("a",) * 5) == pytest.approx(1.0)
    q = 0.25
    sch = Scheduler({"v0": {"a": q, "b": 1 - q}, "v1": {"a": 1.0}, "v2": {"b": 1.0}})
    assert trace_probability(fig3_V, sch, ("a",) * 3) == pytest.approx(q)
    assert trace_probability(fig3_V, sch, ("b", "a")) == 0.0


# --- inductive engine ------------------------------------------------------------

def test_inductive_matches_paths_fig2(fig2_U):
    sch = dirac_scheduler(fig2_U, "a")
    c = TimeBoundedCylinder(("a", "a"), 2.0)
    p = prob_cylinder_paths(fig2_U, sch, "u0", c)
    i = prob_cylinder_inductive(fig2_U, sch, "u0", c)
    assert abs(p - i) <= 1e-5


def test_inductive_base_case_matches_definition(fig2_U):
    sch = dirac_scheduler(fig2_U, "a")
    for t in (0.5, 3.0):
        got = prob_cylinder_inductive(fig2_U, sch, "u0", TimeBoundedCylinder(("a",), t))
        assert got == pytest.approx(cdf_eval(Exponential(2.0), t), abs=1e-7)


def test_inductive_zero_bound_with_continuous_residences(fig2_U):
    sch = dirac_scheduler(fig2_U, "a")
    assert prob_cylinder_inductive(fig2_U, sch, "u0", TimeBoundedCylinder(("a", "a"), 0.0)) == 0.0


def test_cross_engine_on_corpus():
    """paths vs inductive within 1e-5 on every corpus model."""
    for name in corpus.names():
        if not name.endswith(".smdp"):
            continue
        m = corpus.load(name)
        sch = uniform_scheduler(m)
        words = [w for n in (1, 2, 3)
                 for w in _words(m.labels, n)][:6]
        for w in words:
            if trace_probability(m, sch, w) <= 0.0:
                continue
            for t in (0.5, 1.0, 2.0, 5.0):
                c = TimeBoundedCylinder(w, t)
                p = prob_cylinder_paths(m, sch, m.initial, c)
                i = prob_cylinder_inductive(m, sch, m.initial, c)
                assert abs(p - i) <= 1e-5, (name, w, t, p, i)


def _words(labels, n):
    if n == 0:
        return [()]
    return [w + (a,) for w in _words(labels, n - 1) for a in labels]


def test_saturation_consistency():
    """At a huge bound the word probability meets the untimed rect recursion."""
    schedulers = {
        "fig3_V.smdp": [corpus.load_scheduler("fig3_V_half.sched")],
        "fig2_U.smdp": [corpus.load_scheduler("fig2_all_a.sched")],
    }
    for name in corpus.names():
        if not name.endswith(".smdp"):
            continue
        m = corpus.load(name)
        for sch in [uniform_scheduler(m)] + schedulers.get(name, []):
            for n in (1, 2, 3, 4):
                for w in _words(m.labels, n)[:4]:
                    timed = prob_cylinder_paths(m, sch, m.initial,
                                                TimeBoundedCylinder(w, T_SATURATE))
                    steps = tuple(all_states_step(m, a, Interval.unbounded()) for a in w)
                    rect = prob_rect_cylinder(m, sch, m.initial, RectCylinder(steps))
                    assert abs(timed - rect) <= 1e-9, (name, w)


def test_cylinder_validation():
    with pytest.raises(ValueError):
        TimeBoundedCylinder((), 1.0)
    with pytest.raises(ValueError):
        TimeBoundedCylinder(("a",), -1.0)
    with pytest.raises(ValueError):
        RectStep(frozenset(["a"]), (Interval(0.0, 2.0), Interval(1.0, 3.0)), frozenset())
