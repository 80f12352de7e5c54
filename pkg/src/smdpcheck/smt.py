"""SMT-LIB 2 queries for CDF dominance over the semialgebraic families.

`export_smt_dominance(d1, d2)` emits a QF_NRA formula asserting the
existence of t >= 0 with F_{d1}(t) < F_{d2}(t); unsatisfiability of the
query certifies that d1 dominates d2 everywhere.

Step and piecewise-linear CDFs (dirac, uniform) are encoded exactly.  An
exponential CDF is encoded through an auxiliary variable sandwiched between
polynomial bounds of exp(-rate*t); the bounds hold at the true value, so the
relaxation preserves every real witness and an unsat answer stays sound.
Two bare exponentials compare exactly through their rates, since the
inequality of their CDFs reduces to a linear sign condition.
"""

from __future__ import annotations

from decimal import Decimal

from .distributions import (
    Dirac,
    Distribution,
    Exponential,
    MinMaxCdf,
    Shifted,
    Uniform,
    render,
)
from .errors import NotExpressible

__all__ = ["export_smt_dominance"]


def _num(x: float) -> str:
    if x < 0:
        return f"(- {_num(-x)})"
    text = format(Decimal(repr(float(x))), "f")
    if "." not in text:
        text += ".0"
    return text


class _Encoder:
    def __init__(self):
        self.decls = []
        self.asserts = []
        self._n_aux = 0

    def exp_value(self, rate: float, time_term: str) -> str:
        """Auxiliary variable constrained to behave like exp(-rate * time)."""
        name = f"e{self._n_aux}"
        self._n_aux += 1
        u = f"(* {_num(rate)} {time_term})"
        self.decls.append(f"(declare-const {name} Real)")
        self.asserts.append(f"(assert (> {name} 0.0))")
        self.asserts.append(f"(assert (<= {name} 1.0))")
        # exp(-u) >= 1 - u for u >= 0
        self.asserts.append(f"(assert (>= {name} (- 1.0 {u})))")
        # exp(-u) * (1 + u + u^2/2 + u^3/6 + u^4/24) <= 1 for u >= 0
        poly = (f"(+ 1.0 {u} (/ (* {u} {u}) 2.0) (/ (* {u} {u} {u}) 6.0) "
                f"(/ (* {u} {u} {u} {u}) 24.0))")
        self.asserts.append(f"(assert (<= (* {name} {poly}) 1.0))")
        return name

    def cdf(self, d: Distribution, time_term: str) -> str:
        if isinstance(d, Dirac):
            return f"(ite (>= {time_term} {_num(d.point)}) 1.0 0.0)"
        if isinstance(d, Uniform):
            frac = f"(/ (- {time_term} {_num(d.lo)}) {_num(d.hi - d.lo)})"
            return (f"(ite (<= {time_term} {_num(d.lo)}) 0.0 "
                    f"(ite (>= {time_term} {_num(d.hi)}) 1.0 {frac}))")
        if isinstance(d, Exponential):
            return f"(- 1.0 {self.exp_value(d.rate, time_term)})"
        if isinstance(d, Shifted):
            shifted = f"(ite (>= {time_term} {_num(d.shift)}) (- {time_term} {_num(d.shift)}) 0.0)"
            return self.cdf(d.base, shifted)
        if isinstance(d, MinMaxCdf):
            a = self.cdf(d.parts[0], time_term)
            b = self.cdf(d.parts[1], time_term)
            op = "<" if d.kind == "min" else ">"
            return f"(ite ({op} {a} {b}) {a} {b})"
        raise NotExpressible(f"no SMT encoding for {render(d)}")


def export_smt_dominance(d1: Distribution, d2: Distribution) -> str:
    """SMT-LIB text asserting exists t >= 0 with F_{d1}(t) < F_{d2}(t)."""
    lines = [
        "(set-logic QF_NRA)",
        f"; satisfiable iff some t >= 0 has F[{render(d1)}](t) < F[{render(d2)}](t)",
        "; unsat certifies dominance of the left CDF over the right one",
        "(declare-const t Real)",
        "(assert (>= t 0.0))",
    ]
    if isinstance(d1, Exponential) and isinstance(d2, Exponential):
        # F1 < F2 iff exp(-r1 t) > exp(-r2 t) iff (r2 - r1) * t > 0: exact
        lines.append("; two exponentials compare exactly through their rates")
        lines.append(f"(assert (> (* (- {_num(d2.rate)} {_num(d1.rate)}) t) 0.0))")
        lines.append("(check-sat)")
        return "\n".join(lines) + "\n"
    enc = _Encoder()
    f1 = enc.cdf(d1, "t")
    f2 = enc.cdf(d2, "t")
    if enc._n_aux:
        lines.append("; auxiliary variables carry polynomial envelopes of exp(-rate*t)")
    lines.extend(enc.decls)
    lines.extend(enc.asserts)
    lines.append(f"(assert (< {f1} {f2}))")
    lines.append("(check-sat)")
    return "\n".join(lines) + "\n"
