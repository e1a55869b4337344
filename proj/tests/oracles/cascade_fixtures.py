"""Exact-rational reference for the small cascade fixtures frozen into the C++ tests.

Applies the toppling rule literally with Fractions: nodes with |g| > tau and at least one
neighbour keep (1 - alpha) g and pass alpha g / k to each neighbour, all from pre-step values.
Run: python3 tests/oracles/cascade_fixtures.py
"""
from fractions import Fraction as F


def quantile_type7(values, q):
    xs = sorted(abs(v) for v in values)
    rank = (len(xs) - 1) * q
    lo = int(rank)
    hi = min(lo + 1, len(xs) - 1)
    return xs[lo] + (rank - lo) * (xs[hi] - xs[lo])


def cascade(adj, g, tau, alpha, max_steps):
    g = list(g)
    size = steps = 0
    while steps < max_steps:
        hot = [i for i in range(len(g)) if abs(g[i]) > tau and adj[i]]
        if not hot:
            break
        new = list(g)
        for i in hot:
            new[i] -= alpha * g[i]
            for j in adj[i]:
                new[j] += alpha * g[i] / len(adj[i])
        g = new
        size += len(hot)
        steps += 1
    return g, size, steps


def adjacency(n, edges):
    adj = [[] for _ in range(n)]
    for i, j in edges:
        adj[i].append(j)
        adj[j].append(i)
    return adj


ring3 = adjacency(3, [(0, 1), (1, 2), (2, 0)])
ring4 = adjacency(4, [(0, 1), (1, 2), (2, 3), (3, 0)])
star4 = adjacency(4, [(0, 1), (0, 2), (0, 3)])
path_iso5 = adjacency(5, [(0, 1), (1, 2), (2, 3)])
k4_tail6 = adjacency(6, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3), (3, 4), (4, 5)])

a3 = F(3, 10)
fixtures = {
    "ring3_fixed": (ring3, [F(1), F(0), F(0)], F(1, 2), a3, 20),
    "ring3_q90": (ring3, [F(1), F(0), F(0)], quantile_type7([F(1), F(0), F(0)], F(9, 10)), a3, 20),
    "star4": (star4, [F(9, 10), F(-3, 10), F(0), F(6, 10)], F(1, 2), a3, 20),
    "path_isolated5": (path_iso5, [F(0), F(0), F(2), F(0), F(5)], F(1), F(1, 2), 20),
    "ring4_pair_3steps": (ring4, [F(1), F(1), F(0), F(0)], F(1, 2), a3, 3),
    "k4_tail6_q90": None,
}
g6 = [F(-12, 10), F(4, 10), F(1, 10), F(9, 10), F(-2, 10), F(0)]
fixtures["k4_tail6_q90"] = (k4_tail6, g6, quantile_type7(g6, F(9, 10)), F(1, 4), 20)

for name, (adj, g, tau, alpha, max_steps) in fixtures.items():
    out, s, steps = cascade(adj, g, tau, alpha, max_steps)
    print(name, "tau=%r" % float(tau), "s=%d steps=%d" % (s, steps))
    print("   field:", ", ".join(repr(float(v)) for v in out))
    assert sum(out) == sum(g)
