"""Probabilities of rectangular and time-bounded cylinder events.

Two independent engines compute time-bounded cylinder probabilities: a
path-enumeration engine that sums symbolic convolutions, and an inductive
engine that tabulates the step recursion on a time grid.  They cross-check
each other in the test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np
from scipy.signal import fftconvolve

from .distributions import (
    Dirac,
    Distribution,
    Exponential,
    MinMaxCdf,
    PhaseType,
    Shifted,
    Uniform,
    cdf_eval,
    cdf_vec,
    convolve,
    measure_interval,
    pdf_vec,
    sort_key,
)
from .model import Scheduler, Smdp

__all__ = [
    "Interval",
    "RectStep",
    "RectCylinder",
    "TimeBoundedCylinder",
    "prob_rect_cylinder",
    "prob_cylinder_paths",
    "prob_cylinder_inductive",
    "trace_probability",
]

_INDUCTIVE_TOL = 1e-7  # quadrature refinement target of the inductive engine


@dataclass(frozen=True)
class Interval:
    """Time interval within [0, inf]; a closed endpoint includes a Dirac atom
    sitting exactly on it, an open endpoint excludes it."""

    lo: float
    hi: float
    closed_lo: bool = True
    closed_hi: bool = True

    def __post_init__(self):
        if not (0.0 <= self.lo <= self.hi):
            raise ValueError(f"need 0 <= lo <= hi, got [{self.lo}, {self.hi}]")

    @staticmethod
    def upto(t: float) -> "Interval":
        return Interval(0.0, t)

    @staticmethod
    def unbounded() -> "Interval":
        return Interval(0.0, math.inf)


@dataclass(frozen=True)
class RectStep:
    labels: frozenset
    times: tuple  # disjoint, ascending Intervals
    states: frozenset

    def __post_init__(self):
        ivs = tuple(self.times)
        for a, b in zip(ivs, ivs[1:]):
            if b.lo < a.hi or (b.lo == a.hi and a.closed_hi and b.closed_lo):
                raise ValueError("time intervals must be disjoint and ascending")
        object.__setattr__(self, "times", ivs)
        object.__setattr__(self, "labels", frozenset(self.labels))
        object.__setattr__(self, "states", frozenset(self.states))


@dataclass(frozen=True)
class RectCylinder:
    steps: tuple

    def __post_init__(self):
        if not self.steps:
            raise ValueError("a cylinder needs at least one step")
        object.__setattr__(self, "steps", tuple(self.steps))


@dataclass(frozen=True)
class TimeBoundedCylinder:
    """All paths whose first n labels spell `word` within total time `bound`."""

    word: tuple
    bound: float

    def __post_init__(self):
        word = tuple(self.word)
        if not word:
            raise ValueError("a cylinder needs a nonempty word")
        if not (self.bound >= 0.0):
            raise ValueError(f"bound must be >= 0, got {self.bound}")
        object.__setattr__(self, "word", word)


def _tree_sum(values) -> float:
    """Pairwise summation; deterministic regardless of accumulation order quirks."""
    vals = list(values)
    if not vals:
        return 0.0
    while len(vals) > 1:
        vals = [vals[i] + vals[i + 1] if i + 1 < len(vals) else vals[i]
                for i in range(0, len(vals), 2)]
    return vals[0]


def _check_rect_refs(m: Smdp, c: RectCylinder):
    for step in c.steps:
        for a in step.labels:
            m.label_index(a)
        for s in step.states:
            m.state_index(s)


def prob_rect_cylinder(m: Smdp, sch: Scheduler, s: str, c: RectCylinder) -> float:
    """Rectangular cylinder probability by the step recursion.

    Each step contributes the residence mass of its time set at the current
    state times the scheduled transition mass into the allowed states.
    """
    _check_rect_refs(m, c)
    return _rect_rec(m, sch, s, c.steps, 0)


def _rect_rec(m, sch, s, steps, k):
    step = steps[k]
    res = m.residence_of(s)
    res_mass = _tree_sum(
        measure_interval(res, iv.lo, iv.hi, iv.closed_lo, iv.closed_hi) for iv in step.times)
    if res_mass <= 0.0:
        return 0.0
    parts = []
    for a in sorted(step.labels):
        w = sch.weight(s, a)
        if w <= 0.0:
            continue
        for s2 in sorted(m.succ(s, a)):
            p = m.succ(s, a)[s2]
            if p <= 0.0 or s2 not in step.states:
                continue
            rest = 1.0 if k + 1 == len(steps) else _rect_rec(m, sch, s2, steps, k + 1)
            parts.append(w * p * rest)
    return res_mass * _tree_sum(parts)


# ---------------------------------------------------------------------------
# path-enumeration engine


def word_terms(m: Smdp, sch: Scheduler, start: str, word) -> Dict[Distribution, float]:
    """Groups the state paths spelling `word` by their absorption-time law.

    Returns {convolved residence distribution: total effective weight}; the
    grouping realizes prefix memoization, since commuting convolutions share
    one canonical form.
    """
    m.state_index(start)
    for a in word:
        m.label_index(a)
    terms: Dict[Distribution, float] = {}

    def rec(state, i, weight, dist):
        if i == len(word):
            terms[dist] = terms.get(dist, 0.0) + weight
            return
        a = word[i]
        w_label = sch.weight(state, a)
        if w_label <= 0.0:
            return
        row = m.succ(state, a)
        if not row:
            return
        next_dist = convolve(dist, m.residence_of(state))
        for s2 in sorted(row):
            p = row[s2]
            if p > 0.0:
                rec(s2, i + 1, weight * w_label * p, next_dist)

    rec(start, 0, 1.0, Dirac(0.0))
    return terms


def prob_cylinder_paths(m: Smdp, sch: Scheduler, s: str, c: TimeBoundedCylinder) -> float:
    """Sum over state paths of effective weight times the convolution CDF."""
    terms = word_terms(m, sch, s, c.word)
    ordered = sorted(terms.items(), key=lambda kv: sort_key(kv[0]))
    return _tree_sum(w * cdf_eval(d, c.bound) for d, w in ordered)


def trace_probability(m: Smdp, sch: Scheduler, word) -> float:
    """Probability of emitting `word` with no time bound."""
    m.state_index(m.initial)
    for a in word:
        m.label_index(a)

    def rec(state, i, weight):
        if i == len(word):
            return weight
        a = word[i]
        w_label = sch.weight(state, a)
        if w_label <= 0.0:
            return 0.0
        row = m.succ(state, a)
        return _tree_sum(
            rec(s2, i + 1, weight * w_label * row[s2])
            for s2 in sorted(row) if row[s2] > 0.0)

    return rec(m.initial, 0, 1.0)


# ---------------------------------------------------------------------------
# inductive (grid-tabulation) engine


def _max_rate_hint(d: Distribution) -> float:
    """Largest curvature scale of the CDF; sizes the tabulation grid."""
    if isinstance(d, Exponential):
        return d.rate
    if isinstance(d, PhaseType):
        return max(d.rates)
    if isinstance(d, Uniform):
        return 2.0 / (d.hi - d.lo)
    if isinstance(d, Shifted):
        return _max_rate_hint(d.base)
    if isinstance(d, MinMaxCdf):
        return max(_max_rate_hint(p) for p in d.parts)
    if isinstance(d, Dirac):
        return 0.0
    return 1.0


def _conv_density_table(d: Distribution, G: np.ndarray, xs: np.ndarray) -> np.ndarray:
    """(d * G)(x_j) for a density d and tabulated G, by refined trapezoid sums.

    The trapezoid correlation is evaluated at successive mesh halvings with
    Richardson extrapolation until the correction drops below the tolerance;
    G is linearly interpolated onto the finer meshes.
    """
    t = float(xs[-1])
    n_coarse = len(xs) - 1
    prev = None
    result = None
    for r in (1, 2, 4, 8):
        nr = n_coarse * r
        xr = xs if r == 1 else np.linspace(0.0, t, nr + 1)
        f = pdf_vec(d, xr)
        Gr = G if r == 1 else np.interp(xr, xs, G)
        hr = t / nr
        full = fftconvolve(f, Gr)[:nr + 1]
        trap = hr * (full - 0.5 * f[0] * Gr - 0.5 * f * Gr[0])
        trap = trap[::r]
        if prev is not None:
            result = (4.0 * trap - prev) / 3.0
            if float(np.max(np.abs(result - trap))) <= _INDUCTIVE_TOL:
                break
        prev = trap
        result = trap
    return np.clip(result, 0.0, 1.0)


class _Tab:
    """A tabulated sub-CDF split into a continuous part and exact step atoms.

    Keeping atoms symbolic avoids the O(h) error a linearly interpolated
    jump would feed into the trapezoid sums.
    """

    __slots__ = ("smooth", "atoms")

    def __init__(self, smooth: np.ndarray, atoms=()):
        self.smooth = smooth
        self.atoms = dict(atoms)

    def value_at_end(self, t: float) -> float:
        return float(self.smooth[-1]) + sum(m for pos, m in self.atoms.items() if pos <= t)


def _residence_split(d: Distribution, mass: float, xs: np.ndarray) -> _Tab:
    if isinstance(d, Dirac):
        return _Tab(np.zeros_like(xs), {d.point: mass})
    return _Tab(mass * cdf_vec(d, xs))


def _conv_tab(d: Distribution, tab: _Tab, xs: np.ndarray) -> _Tab:
    """(d * tab) on the grid; residence atoms shift, density parts integrate."""
    if isinstance(d, Dirac):
        smooth = np.interp(xs - d.point, xs, tab.smooth, left=0.0)
        atoms = {pos + d.point: m for pos, m in tab.atoms.items() if pos + d.point <= xs[-1]}
        return _Tab(smooth, atoms)
    if isinstance(d, Shifted):
        inner = _conv_tab(d.base, tab, xs)
        smooth = np.interp(xs - d.shift, xs, inner.smooth, left=0.0)
        atoms = {pos + d.shift: m for pos, m in inner.atoms.items() if pos + d.shift <= xs[-1]}
        return _Tab(smooth, atoms)
    smooth = _conv_density_table(d, tab.smooth, xs)
    for pos, m in tab.atoms.items():
        smooth = smooth + m * cdf_vec(d, xs - pos)
    return _Tab(smooth)


def prob_cylinder_inductive(m: Smdp, sch: Scheduler, s: str, c: TimeBoundedCylinder,
                            grid_points: Optional[int] = None) -> float:
    """Tabulates the step recursion for the word on a shared time grid.

    Each level convolves the current residence law with the tabulated
    continuation sub-CDF (Stieltjes quadrature with tolerance 1e-7).  The
    grid has at least 1024 points and grows with the sharpest rate so that
    table interpolation stays below the cross-engine tolerance.
    """
    word = c.word
    t = c.bound
    m.state_index(s)
    for a in word:
        m.label_index(a)
    if t <= 0.0:
        return _inductive_at_zero(m, sch, s, word, 0)

    if grid_points is None:
        rate = max([1.0] + [_max_rate_hint(m.residence_of(x)) for x in m.states])
        grid_points = int(min(max(1024, math.ceil(250.0 * rate * t)), 200_000))
    xs = np.linspace(0.0, t, grid_points + 1)

    # states needed per level
    needed = [{s}]
    for a in word[:-1]:
        nxt = set()
        for st in needed[-1]:
            if sch.weight(st, a) > 0.0:
                nxt.update(s2 for s2, p in m.succ(st, a).items() if p > 0.0)
        needed.append(nxt)

    n = len(word)
    tables: Dict[str, _Tab] = {}
    for st in sorted(needed[n - 1]):
        mass = sch.weight(st, word[-1]) * sum(m.succ(st, word[-1]).values())
        tables[st] = _residence_split(m.residence_of(st), mass, xs)
    for k in range(n - 2, -1, -1):
        a = word[k]
        nxt_tables: Dict[str, _Tab] = {}
        for st in sorted(needed[k]):
            w_label = sch.weight(st, a)
            if w_label <= 0.0:
                nxt_tables[st] = _Tab(np.zeros_like(xs))
                continue
            smooth = np.zeros_like(xs)
            atoms: Dict[float, float] = {}
            for s2, p in sorted(m.succ(st, a).items()):
                if p > 0.0:
                    sub = tables[s2]
                    smooth = smooth + w_label * p * sub.smooth
                    for pos, mass in sub.atoms.items():
                        atoms[pos] = atoms.get(pos, 0.0) + w_label * p * mass
            nxt_tables[st] = _conv_tab(m.residence_of(st), _Tab(smooth, atoms), xs)
        tables = nxt_tables
    return float(min(1.0, max(0.0, tables[s].value_at_end(t))))


def _inductive_at_zero(m, sch, s, word, k):
    # At t = 0 only residence mass sitting exactly at zero contributes.
    res = m.residence_of(s)
    here = cdf_eval(res, 0.0)
    if here <= 0.0:
        return 0.0
    a = word[k]
    w_label = sch.weight(s, a)
    if w_label <= 0.0:
        return 0.0
    row = m.succ(s, a)
    if k + 1 == len(word):
        return here * w_label * sum(row.values())
    return here * w_label * _tree_sum(
        p * _inductive_at_zero(m, sch, s2, word, k + 1)
        for s2, p in sorted(row.items()) if p > 0.0)
