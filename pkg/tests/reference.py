"""Naive reference implementations used as oracles in the test suite.

Everything in here is written with explicit Python loops over matrix entries,
on purpose: the production code is vectorized numpy, and agreement between the
two routes is what the equivalence tests certify. Do not "optimize" these.
"""

import math


def hinge(x):
    return x if x > 0 else 0.0


def poly_eval(x, coeffs):
    # ascending coefficients, plain power evaluation
    return sum(c * x**k for k, c in enumerate(coeffs))


def triplet_sum_value(s, margin):
    b = len(s)
    total = 0.0
    for i in range(b):
        for j in range(b):
            if j == i:
                continue
            total += hinge(margin + s[i][j] - s[i][i])
            total += hinge(margin + s[j][i] - s[i][i])
    return total / b


def _hardest_column(s, i):
    """Index of the most similar text j != i for audio anchor i (lowest index wins ties)."""
    best, best_j = None, None
    for j in range(len(s)):
        if j == i:
            continue
        if best is None or s[i][j] > best:
            best, best_j = s[i][j], j
    return best_j


def _hardest_row(s, i):
    """Index of the most similar audio j != i for text anchor i (lowest index wins ties)."""
    best, best_j = None, None
    for j in range(len(s)):
        if j == i:
            continue
        if best is None or s[j][i] > best:
            best, best_j = s[j][i], j
    return best_j


def triplet_max_value(s, margin):
    b = len(s)
    if b == 1:
        return 0.0
    total = 0.0
    for i in range(b):
        jt = _hardest_column(s, i)
        ja = _hardest_row(s, i)
        total += hinge(margin + s[i][jt] - s[i][i])
        total += hinge(margin + s[ja][i] - s[i][i])
    return total / b


def triplet_weighted_value(s, pos_coeffs, neg_coeffs):
    b = len(s)
    total = 0.0
    for i in range(b):
        jt = _hardest_column(s, i)
        ja = _hardest_row(s, i)
        total += hinge(poly_eval(s[i][i], pos_coeffs) + poly_eval(s[i][jt], neg_coeffs))
        total += hinge(poly_eval(s[i][i], pos_coeffs) + poly_eval(s[ja][i], neg_coeffs))
    return total / b


def nt_xent_value(s, temperature):
    b = len(s)
    total = 0.0
    for i in range(b):
        row_den = sum(math.exp(s[i][j] / temperature) for j in range(b))
        col_den = sum(math.exp(s[j][i] / temperature) for j in range(b))
        pos = math.exp(s[i][i] / temperature)
        total -= math.log(pos / row_den) + math.log(pos / col_den)
    return total / b


def cosine_matrix(audio, text):
    """Entry-by-entry cosine similarity between row vectors."""
    b = len(audio)
    out = [[0.0] * b for _ in range(b)]
    for i in range(b):
        for j in range(b):
            dot = sum(x * y for x, y in zip(audio[i], text[j]))
            na = math.sqrt(sum(x * x for x in audio[i]))
            nt = math.sqrt(sum(y * y for y in text[j]))
            out[i][j] = dot / (na * nt)
    return out


def mlp_forward_rows(x, w1, b1, w2, b2):
    """One hidden layer with ReLU, evaluated row by row with scalar loops."""
    out = []
    for row in x:
        hidden = []
        for h in range(len(w1[0])):
            acc = b1[h]
            for k in range(len(row)):
                acc += row[k] * w1[k][h]
            hidden.append(acc if acc > 0 else 0.0)
        y = []
        for o in range(len(w2[0])):
            acc = b2[o]
            for h in range(len(hidden)):
                acc += hidden[h] * w2[h][o]
            y.append(acc)
        out.append(y)
    return out


def rank_of_target_by_sort(scores, target_index):
    """Optimistic competition rank of ``target_index`` under descending sort."""
    target = scores[target_index]
    return 1 + sum(1 for s in scores if s > target)
