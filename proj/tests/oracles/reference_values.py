"""Independent reference values frozen into the C++ test suites.

Brute-force evaluation only: exhaustive set-partition enumeration, the
direct double-sum modularity, and the two-level map equation written out
term by term. Run with `python3 tests/oracles/reference_values.py`.
"""
from fractions import Fraction
from math import comb, log2, sqrt


def set_partitions(n):
    labels = [0] * n

    def rec(i, k):
        if i == n:
            yield list(labels)
            return
        for c in range(k + 1):
            labels[i] = c
            yield from rec(i + 1, max(k, c + 1))

    yield from rec(0, 0)


def adjacency(n, edges):
    a = [[Fraction(0)] * n for _ in range(n)]
    for u, v in edges:
        if u == v:
            a[u][u] += 2
        else:
            a[u][v] += 1
            a[v][u] += 1
    return a


def modularity(a, labels):
    n = len(a)
    d = [sum(row) for row in a]
    two_m = sum(d)
    q = Fraction(0)
    for j in range(n):
        for k in range(n):
            if labels[j] == labels[k]:
                q += a[j][k] - d[j] * d[k] / two_m
    return q / two_m


def entropy_terms(weights):
    total = sum(weights)
    return -sum(w / total * log2(w / total) for w in weights if w > 0)


def map_equation(a, labels):
    n = len(a)
    d = [float(sum(row)) for row in a]
    two_m = sum(d)
    p = [x / two_m for x in d]
    mods = sorted(set(labels))
    q = []
    for c in mods:
        cut = sum(float(a[j][k]) for j in range(n) for k in range(n)
                  if labels[j] == c and labels[k] != c)
        q.append(cut / two_m)
    q_total = sum(q)
    index = q_total * entropy_terms(q) if q_total > 0 else 0.0
    module_bits = []
    for c, qi in zip(mods, q):
        members = [p[j] for j in range(n) if labels[j] == c]
        ring = qi + sum(members)
        module_bits.append(ring * entropy_terms([qi] + members))
    return index, module_bits, index + sum(module_bits)


TRIANGLE = (3, [(0, 1), (1, 2), (0, 2)])
BARBELL6 = (6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (2, 3)])
TWO_TRIANGLES = (6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)])
PATH4 = (4, [(0, 1), (1, 2), (2, 3)])

if __name__ == "__main__":
    for name, (n, e) in [("triangle", TRIANGLE), ("barbell6", BARBELL6),
                         ("two_triangles", TWO_TRIANGLES), ("path4", PATH4)]:
        a = adjacency(n, e)
        parts = list(set_partitions(n))
        best = max(parts, key=lambda lab: modularity(a, lab))
        codes = min(parts, key=lambda lab: map_equation(a, lab)[2])
        print(f"{name}: partitions={len(parts)} maxQ={modularity(a, best)} "
              f"at {best}; min L={map_equation(a, codes)[2]:.9f} at {codes}")

    a = adjacency(*BARBELL6)
    print("barbell6 one-module L =", f"{map_equation(a, [0] * 6)[2]:.9f}")
    idx, mb, tot = map_equation(a, [0, 0, 0, 1, 1, 1])
    print("barbell6 two-module L =", f"{tot:.9f}", "index", idx, "modules", mb)
    print("barbell6 Q {{0,1},{2},{3,4,5}} =", modularity(a, [0, 0, 1, 2, 2, 2]))
    print("triangle one-module L =", f"{map_equation(adjacency(*TRIANGLE), [0, 0, 0])[2]:.9f}")

    # pairwise F1, truth=[0,0,0,1,1,1], pred=[0,0,1,1,1,1]
    truth, pred = [0, 0, 0, 1, 1, 1], [0, 0, 1, 1, 1, 1]
    pairs = [(i, j) for i in range(6) for j in range(i + 1, 6)]
    tp = sum(1 for i, j in pairs if truth[i] == truth[j] and pred[i] == pred[j])
    pp = sum(1 for i, j in pairs if pred[i] == pred[j])
    tt = sum(1 for i, j in pairs if truth[i] == truth[j])
    prec, rec = Fraction(tp, pp), Fraction(tp, tt)
    print("pairwise F1 =", 2 * prec * rec / (prec + rec), "TP", tp, "P", prec, "R", rec)

    # three disjoint 4-cliques
    edges = [(g * 4 + i, g * 4 + j) for g in range(3) for i in range(4) for j in range(i + 1, 4)]
    a = adjacency(12, edges)
    print("3x K4 planted Q =", modularity(a, [g for g in range(3) for _ in range(4)]))

    # planted expectation n=120 k=4 p_in=0.3 p_out=0.02
    intra = 4 * comb(30, 2)
    inter = comb(120, 2) - intra
    mean = intra * 0.3 + inter * 0.02
    var = intra * 0.3 * 0.7 + inter * 0.02 * 0.98
    print("planted mean edges", mean, "sigma", sqrt(var), "3sigma", 3 * sqrt(var))
