"""Regenerates the headline numbers into one JSON report.

Run as `python -m smdpcheck.reproduce [out.json]` (or `make reproduce`).
Each block prints one PASS/FAIL line; the exit code is 0 only if all pass.
"""

from __future__ import annotations

import json
import sys
import time

from . import corpus
from .composition import compose
from .cylinders import TimeBoundedCylinder, prob_cylinder_inductive, prob_cylinder_paths
from .model import Scheduler, dirac_scheduler
from .monotonicity import check_strong_monotonicity, path_bound
from .montecarlo import estimate_cylinder
from .relations import SchedulerSearchSpec, bisimilar, faster_than_bounded, simulates

ANOMALIES = (
    ("prodrate", "fig4_W_product.smdp", 0.0929, 0.3018),
    ("min", "fig4_W_minimum.smdp", 0.3996, 0.5156),
    ("max", "fig4_W_maximum.smdp", 0.7476, 0.9084),
)


def _status(ok):
    return "PASS" if ok else "FAIL"


def run():
    report = {"schema": "smdpcheck-reproduce/1", "blocks": []}
    all_ok = True
    U = corpus.load("fig2_U.smdp")
    V = corpus.load("fig2_V.smdp")

    for op, wname, exp_u, exp_v in ANOMALIES:
        t0 = time.monotonic()
        W = corpus.load(wname)
        uw, vw = compose(U, W, op), compose(V, W, op)
        c = TimeBoundedCylinder(("a", "a"), 2.0)
        got_u = prob_cylinder_paths(uw, dirac_scheduler(uw, "a"), uw.initial, c)
        got_v = prob_cylinder_paths(vw, dirac_scheduler(vw, "a"), vw.initial, c)
        verdict = faster_than_bounded(uw, vw, depth=13)
        w = verdict.witness
        ok = (abs(got_u - exp_u) <= 0.005 and abs(got_v - exp_v) <= 0.005
              and verdict.refuted and w.word == "aa" and abs(w.t - 2.0) < 1e-12)
        all_ok &= ok
        est_u = estimate_cylinder(uw, dirac_scheduler(uw, "a"), ("a", "a"), 2.0, 10 ** 6, 42)
        est_v = estimate_cylinder(vw, dirac_scheduler(vw, "a"), ("a", "a"), 2.0, 10 ** 6, 42)
        mc_ok = abs(est_u[0] - got_u) <= est_u[1] and abs(est_v[0] - got_v) <= est_v[1]
        all_ok &= mc_ok
        ind_u = prob_cylinder_inductive(uw, dirac_scheduler(uw, "a"), uw.initial, c)
        eng_ok = abs(ind_u - got_u) <= 1e-5
        all_ok &= eng_ok
        report["blocks"].append({
            "name": f"anomaly-{op}", "fast": got_u, "slow": got_v,
            "expected": [exp_u, exp_v], "refuted": verdict.refuted,
            "witness": {"word": w.word, "t": w.t,
                        "prob_fast": w.prob_fast, "prob_slow": w.prob_slow},
            "monte_carlo": {"fast": est_u, "slow": est_v, "contained": mc_ok},
            "inductive_engine_delta": abs(ind_u - got_u),
            "elapsed_seconds": round(time.monotonic() - t0, 3),
        })
        print(f"{_status(ok and mc_ok and eng_ok)} anomaly-{op}: "
              f"{got_u:.4f}/{got_v:.4f} (expect {exp_u}/{exp_v}), refuted at "
              f"word {w.word} t={w.t:g}, MC contained={mc_ok}")

    t0 = time.monotonic()
    verdict = faster_than_bounded(U, V, depth=13)
    su, sv = dirac_scheduler(U, "a"), dirac_scheduler(V, "a")
    identity_ok = all(
        abs(prob_cylinder_paths(U, su, "u0", TimeBoundedCylinder(("a",) * n, t))
            - prob_cylinder_paths(V, sv, "v0", TimeBoundedCylinder(("a",) * n, t))) <= 1e-9
        for n in range(2, 7) for t in (0.5, 1.0, 2.0, 5.0))
    ok = verdict.outcome == "NotRefuted" and identity_ok
    all_ok &= ok
    report["blocks"].append({"name": "chain-swap", "outcome": verdict.outcome,
                             "identity_to_1e9": identity_ok,
                             "elapsed_seconds": round(time.monotonic() - t0, 3)})
    print(f"{_status(ok)} chain-swap: {verdict.outcome}, swap identity holds={identity_ok}")

    t0 = time.monotonic()
    U3, V3 = corpus.load("fig3_U.smdp"), corpus.load("fig3_V.smdp")
    bis = bisimilar(U3, V3)
    verdict = faster_than_bounded(U3, V3, depth=8, search=SchedulerSearchSpec(step=0.5))
    w = verdict.witness
    ok = bis.holds and verdict.refuted and w.slow_scheduler.choice["v0"] == {"a": 0.5, "b": 0.5}
    all_ok &= ok
    report["blocks"].append({
        "name": "branching", "bisimilar": bis.holds, "outcome": verdict.outcome,
        "adversary_v0": w.slow_scheduler.choice.get("v0") if w else None,
        "elapsed_seconds": round(time.monotonic() - t0, 3)})
    print(f"{_status(ok)} branching: bisimilar={bis.holds}, {verdict.outcome} "
          f"with adversary v0={w.slow_scheduler.choice['v0'] if w else None}")

    sim = simulates(U, V)
    bis2 = bisimilar(U, V)
    ft = faster_than_bounded(U, V, depth=8)
    ok = (not sim.holds) and (not bis2.holds) and ft.outcome == "NotRefuted"
    all_ok &= ok
    report["blocks"].append({"name": "incomparability", "simulates": sim.holds,
                             "bisimilar": bis2.holds, "faster_than": ft.outcome})
    print(f"{_status(ok)} incomparability: simulates={sim.holds}, "
          f"bisimilar={bis2.holds}, faster-than={ft.outcome}")

    t0 = time.monotonic()
    Wc = corpus.load("fig4_W_congruent.smdp")
    m = path_bound(U, V, Wc, Wc)
    rep = check_strong_monotonicity(U, V, Wc, Wc, "min")
    uw, vw = compose(U, Wc, "min"), compose(V, Wc, "min")
    end_to_end = faster_than_bounded(uw, vw, depth=m)
    ok = rep.holds and m == 13 and end_to_end.outcome == "NotRefuted"
    all_ok &= ok
    report["blocks"].append({
        "name": "strong-monotonicity", "verdict": rep.verdict, "bound": m,
        "composite_faster_than": end_to_end.outcome,
        "elapsed_seconds": round(time.monotonic() - t0, 3)})
    print(f"{_status(ok)} strong-monotonicity: {rep.verdict} at m={m}, "
          f"composite {end_to_end.outcome}")

    out = sys.argv[1] if len(sys.argv) > 1 else "reproduce_report.json"
    with open(out, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2)
    print(f"report written to {out}")
    return 0 if all_ok else 1


if __name__ == "__main__":
    sys.exit(run())
