"""Independent reimplementation of the documented fold assignment.

Prints golden fold lists for the fixture used in tests/eval_folds.rs.
"""

MASK = (1 << 64) - 1


class SplitMix64:
    def __init__(self, seed):
        self.state = seed & MASK

    def next(self):
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
        return z ^ (z >> 31)


def folds(labels, k, seed, repeat):
    master = SplitMix64(seed)
    for _ in range(repeat + 1):
        s = master.next()
    rng = SplitMix64(s)
    out = [[] for _ in range(k)]
    ptr = 0
    for cls in sorted(set(labels)):
        group = [i for i, l in enumerate(labels) if l == cls]
        for i in range(len(group) - 1, 0, -1):
            j = (rng.next() * (i + 1)) >> 64
            group[i], group[j] = group[j], group[i]
        for row in group:
            out[ptr].append(row)
            ptr = (ptr + 1) % k
    return [sorted(f) for f in out]


if __name__ == "__main__":
    # Class ids in first-appearance order: 13 rows, classes 0 (7 rows), 1 (4), 2 (2).
    labels = [0, 1, 0, 2, 0, 1, 0, 0, 1, 2, 0, 1, 0]
    for repeat in range(2):
        print(repeat, folds(labels, 3, 42, repeat))
    print(SplitMix64(1234567).next())
