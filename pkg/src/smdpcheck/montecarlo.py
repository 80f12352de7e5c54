"""Statistical oracle: samples timed paths and estimates cylinder probabilities.

All randomness flows from numpy PCG64 generators seeded per worker stream via
SeedSequence spawning, so runs are reproducible for a fixed (seed, workers).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np

from .distributions import Dirac, Distribution, Exponential, Uniform, cdf_eval
from .model import Scheduler, Smdp

__all__ = ["TimedPath", "Deadlock", "sample_path", "estimate_cylinder"]

_Z99 = 2.5758293035489004  # two-sided 99% normal quantile


@dataclass(frozen=True)
class TimedPath:
    steps: tuple  # (label, sojourn, state) triples

    def labels(self) -> str:
        return "".join(a for a, _, _ in self.steps)

    def total_time(self) -> float:
        return sum(t for _, t, _ in self.steps)


@dataclass(frozen=True)
class Deadlock:
    prefix: TimedPath


def _inverse_cdf(d: Distribution, q: float) -> float:
    if isinstance(d, Dirac):
        return d.point
    if isinstance(d, Exponential):
        return -math.log1p(-q) / d.rate
    if isinstance(d, Uniform):
        return d.lo + q * (d.hi - d.lo)
    # generic monotone inversion: expand a bracket, then bisect to 1e-9
    hi = 1.0
    while cdf_eval(d, hi) < q and hi < 1e12:
        hi *= 2.0
    lo = 0.0
    while hi - lo > 1e-9:
        mid = 0.5 * (lo + hi)
        if cdf_eval(d, mid) < q:
            lo = mid
        else:
            hi = mid
    return hi


def _pick(rng, items_weights, total_is_one=False):
    """Draws from [(item, weight)]; returns None on the residual mass.

    With total_is_one the weights form a full distribution and float
    shortfall must not leak into the residual: the draw clamps to the last
    positive item.
    """
    u = rng.random()
    acc = 0.0
    last = None
    for item, wgt in items_weights:
        if wgt > 0.0:
            last = item
        acc += wgt
        if u < acc:
            return item
    return last if total_is_one else None


def sample_path(m: Smdp, sch: Scheduler, length: int, seed: int) -> Union[TimedPath, Deadlock]:
    """One operational run of `length` steps, fully determined by seed.

    Per step: a label is drawn from the scheduler, a successor from the
    transition row (the residual row mass is deadlock), and a sojourn time by
    inverse CDF from the residence distribution.
    """
    if length < 1:
        raise ValueError("length must be >= 1")
    rng = np.random.Generator(np.random.PCG64(seed))
    state = m.initial
    steps = []
    for _ in range(length):
        label = _pick(rng, [(a, sch.weight(state, a)) for a in m.labels], total_is_one=True)
        if label is None:
            return Deadlock(TimedPath(tuple(steps)))
        row = m.succ(state, label)
        target = _pick(rng, [(s2, row.get(s2, 0.0)) for s2 in m.states])
        if target is None:
            return Deadlock(TimedPath(tuple(steps)))
        sojourn = _inverse_cdf(m.residence_of(state), rng.random())
        steps.append((label, sojourn, target))
        state = target
    return TimedPath(tuple(steps))


def _sojourn_vec(d: Distribution, qs: np.ndarray) -> np.ndarray:
    if isinstance(d, Dirac):
        return np.full_like(qs, d.point)
    if isinstance(d, Exponential):
        return -np.log1p(-qs) / d.rate
    if isinstance(d, Uniform):
        return d.lo + qs * (d.hi - d.lo)
    return np.array([_inverse_cdf(d, float(q)) for q in qs])


def _estimate_chunk(m: Smdp, sch: Scheduler, word, t: float, size: int, rng) -> int:
    n_states = len(m.states)
    cur = np.full(size, m.state_index(m.initial), dtype=np.int64)
    alive = np.ones(size, dtype=bool)
    total = np.zeros(size)
    label_cum = {}  # state idx -> cumulative scheduler weights over model label order
    for si, s in enumerate(m.states):
        label_cum[si] = np.cumsum([sch.weight(s, a) for a in m.labels])
    for a in word:
        ai = m.label_index(a)
        before = cur.copy()  # states at the start of this word position
        for si in range(n_states):
            mask = alive & (before == si)
            k = int(np.count_nonzero(mask))
            if k == 0:
                continue
            s = m.states[si]
            cum = label_cum[si]
            lo = cum[ai - 1] if ai > 0 else 0.0
            u = rng.random(k)
            matched = (u >= lo) & (u < cum[ai])
            row = m.succ(s, a)
            succ_states = [s2 for s2 in m.states if row.get(s2, 0.0) > 0.0]
            succ_cum = np.cumsum([row[s2] for s2 in succ_states])
            u2 = rng.random(k)
            if succ_states:
                idx = np.searchsorted(succ_cum, u2, side="right")
                dead = idx >= len(succ_states)
                idx = np.minimum(idx, len(succ_states) - 1)
                targets = np.array([m.state_index(s2) for s2 in succ_states])[idx]
            else:
                dead = np.ones(k, dtype=bool)
                targets = np.zeros(k, dtype=np.int64)
            sojourn = _sojourn_vec(m.residence_of(s), rng.random(k))
            ok = matched & ~dead
            sel = np.flatnonzero(mask)
            alive[sel[~ok]] = False
            keep = sel[ok]
            cur[keep] = targets[ok]
            total[keep] += sojourn[ok]
    return int(np.count_nonzero(alive & (total <= t)))


def estimate_cylinder(m: Smdp, sch: Scheduler, word, t: float, samples: int, seed: int,
                      workers: int = 1) -> Tuple[float, float]:
    """Fraction of sampled prefixes matching `word` within total time t.

    Returns (estimate, halfwidth of the 99% normal-approximation interval).
    The sample set is partitioned into `workers` streams whose generators are
    spawned from the seed, so any execution order gives the same counts.
    """
    if samples < 1000:
        raise ValueError("need at least 1000 samples")
    if not word:
        raise ValueError("word must be nonempty")
    word = tuple(word)
    for a in word:
        m.label_index(a)
    children = np.random.SeedSequence(seed).spawn(max(1, workers))
    base, extra = divmod(samples, len(children))
    hits = 0
    for i, child in enumerate(children):
        size = base + (1 if i < extra else 0)
        if size == 0:
            continue
        rng = np.random.Generator(np.random.PCG64(child))
        hits += _estimate_chunk(m, sch, word, t, size, rng)
    p = hits / samples
    half = _Z99 * math.sqrt(max(p * (1.0 - p), 1e-300) / samples)
    return p, half
