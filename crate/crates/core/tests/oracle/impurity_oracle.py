"""Arbitrary-precision reference values for the impurity fixtures.

Run: python3 impurity_oracle.py  (needs mpmath). The printed values are the
frozen expectations in tests/impurity_values.rs.
"""
from mpmath import mp, mpf, log

mp.dps = 50


def entropy(counts):
    n = sum(counts)
    return -sum((mpf(c) / n) * log(mpf(c) / n, 2) for c in counts if c)


def gini(counts):
    n = sum(counts)
    return 1 - sum((mpf(c) / n) ** 2 for c in counts)


def gain(table, measure=entropy):
    col = [sum(r[k] for r in table) for k in range(len(table[0]))]
    n = sum(col)
    return measure(col) - sum(mpf(sum(r)) / n * measure(r) for r in table if sum(r))


def split_info(table):
    sizes = [sum(r) for r in table]
    n = sum(sizes)
    return -sum(mpf(s) / n * log(mpf(s) / n, 2) for s in sizes if s)


def show(label, v):
    print(f"{label:40s} {mp.nstr(v, 20)}")


for c in [(8, 0), (4, 4), (2, 6), (1, 2, 3, 4)]:
    show(f"entropy{c}", entropy(c))
    show(f"gini{c}", gini(c))
for t in [[[4, 0], [0, 4]], [[3, 1], [1, 3]], [[1, 0], [3, 4]], [[2, 2], [2, 2]], [[5, 1, 0], [0, 3, 2], [1, 1, 7]]]:
    g, si = gain(t), split_info(t)
    show(f"gain{t}", g)
    show(f"gini_gain{t}", gain(t, gini))
    show(f"si{t}", si)
    if si:
        show(f"ratio{t}", g / si)
    show(f"balanced{t}", g / (1 + si))
show("si 8 singletons", split_info([[1, 0]] * 4 + [[0, 1]] * 4))
