#!/usr/bin/env python3
"""Exact optima of random piecewise-linear problems, computed with HiGHS.

Regenerates tests/data/lp_cases.json. The problem generator mirrors
oracle::random_problem in oracles.hpp operation by operation, so the C++
tests rebuild bit-identical data from the stored seeds.

    python3 tests/oracles/gen_lp_cases.py > tests/data/lp_cases.json
"""

import json

import numpy as np
from scipy.optimize import linprog

MASK = (1 << 64) - 1


class SplitMix:
    def __init__(self, seed):
        self.state = seed & MASK

    def next(self):
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
        return z ^ (z >> 31)

    def unit(self):
        return (self.next() >> 11) * 2.0**-53

    def symmetric(self):
        return 2.0 * self.unit() - 1.0


def random_problem(seed, m, p):
    rng = SplitMix(seed)
    F = [rng.symmetric() for _ in range(p * m)]
    b = [0.5 * rng.symmetric() for _ in range(p)]
    lam = [0.05 + 0.1 * rng.unit() for _ in range(m)]
    q = []
    total = 0.0
    for _ in range(p):
        v = rng.unit()
        q.append(v)
        total += v
    q = [v / total for v in q]
    a = []
    for j in range(m):
        s = 0.0
        for r in range(p):
            s += F[r * m + j] * q[r]
        a.append(-s + 0.9 * lam[j] * rng.symmetric())
    return a, lam, F, b


def optimum(m, p, a, lam, F, b):
    # variables: mu_plus (m), mu_minus (m), nu
    Fm = np.array(F).reshape(p, m)
    c = np.concatenate([np.array(a) + lam, -np.array(a) + lam, [1.0]])
    A = np.hstack([Fm, -Fm, -np.ones((p, 1))])
    bounds = [(0, None)] * (2 * m) + [(None, None)]
    res = linprog(c, A_ub=A, b_ub=-np.array(b), bounds=bounds, method="highs",
                  options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10})
    assert res.status == 0, res.message
    return float(res.fun)


def main():
    cases = []
    shapes = [(5, 20), (5, 500), (50, 20), (50, 500)]
    for k in range(20):
        m, p = shapes[k % 4]
        seed = 1000 + k
        a, lam, F, b = random_problem(seed, m, p)
        cases.append({"seed": seed, "m": m, "p": p, "optimum": optimum(m, p, a, lam, F, b),
                      "check": [a[0], b[-1], F[-1]]})
    print(json.dumps({"generator": "splitmix64", "solver": "scipy-highs", "cases": cases}, indent=1))


if __name__ == "__main__":
    main()
