#!/usr/bin/env python3
"""Regenerates the frozen oracle fixtures under tests/data/.

Everything here is computed with exact rational arithmetic (fractions) or
high-precision floats (mpmath), independently of the C++ code under test.
"""
import json
import math
import random
from fractions import Fraction
from pathlib import Path

import mpmath
import numpy as np
from scipy.optimize import minimize

DATA = Path(__file__).resolve().parent.parent / "data"
DATA.mkdir(exist_ok=True)


# --- equivalence corpus ------------------------------------------------------

def gen_rational_expr(rng, depth):
    """Returns (text, Fraction value). Only exactly-representable constructs."""
    if depth == 0:
        kind = rng.randrange(4)
        if kind == 0:
            n = rng.randint(-50, 50)
            return (f"({n})" if n < 0 else str(n)), Fraction(n)
        if kind == 1:
            a, b = rng.randint(1, 40), rng.randint(2, 12)
            return f"{a}/{b}", Fraction(a, b)
        if kind == 2:
            n = rng.randint(2, 12)
            return f"sqrt({n * n})", Fraction(n)
        n = rng.randint(0, 6)
        return f"{n}!", Fraction(math.factorial(n))
    op = rng.randrange(5)
    lt, lv = gen_rational_expr(rng, depth - 1)
    if op == 4:
        e = rng.randint(2, 3)
        return f"({lt})^{e}", lv ** e
    rt, rv = gen_rational_expr(rng, depth - 1)
    if op == 0:
        return f"({lt} + {rt})", lv + rv
    if op == 1:
        return f"({lt} - {rt})", lv - rv
    if op == 2:
        return f"({lt}) * ({rt})", lv * rv
    if rv == 0:
        return f"({lt} + {rt})", lv + rv
    return f"({lt}) / ({rt})", lv / rv


def render_fraction(v: Fraction, rng) -> str:
    """An alternative exact spelling of the same value."""
    style = rng.randrange(3)
    if style == 0 and v.denominator != 1:
        return rf"\frac{{{v.numerator}}}{{{v.denominator}}}"
    if style == 1:
        k = rng.randint(2, 9)
        return f"({v.numerator * k})/({v.denominator * k})"
    if v.denominator == 1 and v.numerator >= 0:
        return f"sqrt({v.numerator * v.numerator})" if v.numerator <= 3000 else str(v)
    return f"{v.numerator}/{v.denominator}"


def make_equiv_corpus(n=200, seed=20260823):
    rng = random.Random(seed)
    rows = []
    while len(rows) < n:
        text, value = gen_rational_expr(rng, rng.randint(1, 3))
        if abs(value.numerator) > 10**12 or value.denominator > 10**12:
            continue
        if len(rows) % 2 == 0:
            other = render_fraction(value, rng)
            expected = 1
        else:
            bump = Fraction(rng.choice([1, -1]), rng.randint(1, 7))
            wrong = value + bump
            other = f"{wrong.numerator}/{wrong.denominator}"
            expected = 1 if wrong == value else 0
        rows.append((expected, text, other))
    with open(DATA / "equiv_corpus.tsv", "w") as f:
        for expected, a, b in rows:
            f.write(f"{expected}\t{a}\t{b}\n")
    print(f"equiv corpus: {len(rows)} cases, "
          f"{sum(r[0] for r in rows)} equivalent")


# --- rating-model oracles ----------------------------------------------------

# fixed small arena: 3 solvers x 4 problems, every pair observed
ORACLE_SOLVERS = ["m0", "m1", "m2"]
ORACLE_PROBLEMS = ["q0", "q1", "q2", "q3"]
ORACLE_Y = [  # y[solver][problem]
    [1, 1, 0, 1],
    [0, 1, 0, 1],
    [0, 0, 0, 1],
]
ORACLE_LAMBDA = 0.01


def loglik(s, d, lam):
    ll = mpmath.mpf(0)
    for i, row in enumerate(ORACLE_Y):
        for j, y in enumerate(row):
            z = mpmath.mpf(s[i]) - mpmath.mpf(d[j])
            p = 1 / (1 + mpmath.e ** (-z))
            ll += mpmath.log(p) if y else mpmath.log(1 - p)
    for dj in d:
        ll -= lam * mpmath.mpf(dj) ** 2
    return ll


def make_rasch_oracle():
    mpmath.mp.dps = 40
    # frozen evaluation point for the log-likelihood value check
    s_eval = [0.7, -0.2, -1.1]
    d_eval = [0.4, -0.3, 1.5, -1.2]
    ll = loglik(s_eval, d_eval, ORACLE_LAMBDA)

    # penalized MLE via scipy (independent optimizer), then anchor to m0
    def neg(theta):
        s, d = theta[:3], theta[3:]
        val = 0.0
        for i, row in enumerate(ORACLE_Y):
            for j, y in enumerate(row):
                z = s[i] - d[j]
                val -= (z - np.logaddexp(0, z)) if y else -np.logaddexp(0, z)
        val += ORACLE_LAMBDA * np.sum(d * d)
        return val

    best = None
    for trial in range(4):
        x0 = np.zeros(7) if trial == 0 else np.random.default_rng(trial).normal(size=7)
        r = minimize(neg, x0, method="BFGS", options={"gtol": 1e-12, "maxiter": 5000})
        if best is None or r.fun < best.fun:
            best = r
    s, d = best.x[:3], best.x[3:]
    c_elo = 400.0 / math.log(10.0)
    anchored = {m: 1500.0 + c_elo * (s[i] - s[0]) for i, m in enumerate(ORACLE_SOLVERS)}
    diffs_rel_anchor = {q: float(d[j] - s[0]) for j, q in enumerate(ORACLE_PROBLEMS)}

    out = {
        "solvers": ORACLE_SOLVERS,
        "problems": ORACLE_PROBLEMS,
        "y": ORACLE_Y,
        "lambda": ORACLE_LAMBDA,
        "eval_point": {"s": s_eval, "d": d_eval},
        "loglik_at_eval_point": mpmath.nstr(ll, 25),
        "anchored_ratings": anchored,
        "difficulty_minus_anchor_logits": diffs_rel_anchor,
        "grad_norm_at_optimum": float(np.max(np.abs(best.jac))),
    }
    with open(DATA / "rasch_oracle.json", "w") as f:
        json.dump(out, f, indent=2)
    print("rasch oracle:", {k: out[k] for k in ("loglik_at_eval_point",)})
    print("anchored:", anchored)


def make_quantile_oracle(seed=7):
    rng = np.random.default_rng(seed)
    values = np.round(rng.normal(size=37) * 10, 6)
    qs = [0.025, 0.1, 0.5, 0.9, 0.975]
    out = {
        "values": values.tolist(),
        "quantiles": {str(q): float(np.quantile(values, q)) for q in qs},
    }
    with open(DATA / "quantile_oracle.json", "w") as f:
        json.dump(out, f, indent=2)
    print("quantile oracle written")


if __name__ == "__main__":
    make_equiv_corpus()
    make_rasch_oracle()
    make_quantile_oracle()
