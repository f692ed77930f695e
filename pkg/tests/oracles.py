"""Small independent re-implementations used as test oracles.

Written directly from the definitions with plain Python loops; they share no
code with the package beyond the data they are handed.
"""

import math
from fractions import Fraction


def power_series_weight(R, alpha_n, k, grid="linear"):
    """r_k^{alpha_n} on the documented grid."""
    if R == math.inf:
        r = math.e ** k if grid == "exp" else float(k)
    else:
        r = R * k / (k + 1)
    return r ** alpha_n


def matrix_weight(k, i, j):
    w = (i + j) ** k
    if i <= k:
        w *= 2.0 ** ((k * j) ** i)
    return w


def matrix_log_weight(k, i, j):
    out = k * math.log(i + j)
    if i <= k:
        out += (k * j) ** i * math.log(2)
    return out


def sup_log_ratio(lp, lq):
    """max_i (ln p_i - ln q_i) over p_i > 0, by a plain loop."""
    best = -math.inf
    for a, b in zip(lp, lq):
        if a == -math.inf:
            continue
        if b == -math.inf:
            return math.inf
        best = max(best, a - b)
    return best


def l1_norm(x, w):
    """sum |x_i| w_i for dicts index -> coefficient, index -> weight."""
    return math.fsum(abs(c) * w[i] for i, c in x.items())


def sup_norm(x, w):
    return max((abs(c) * w[i] for i, c in x.items()), default=0.0)


# -- bar complex, by slot multiplication ------------------------------------

def multiply_basis(i, j):
    """e_i e_j in the sequence algebra: a dict index -> coefficient."""
    return {i: 1} if i == j else {}


def bar_differential(chain):
    """sum_k (-1)^k a_0 ⊗ .. ⊗ a_k a_{k+1} ⊗ .. for chains given as dicts tuple -> coeff."""
    out = {}
    for idx, coeff in chain.items():
        n = len(idx) - 1
        for k in range(n):
            for prod, c in multiply_basis(idx[k], idx[k + 1]).items():
                face = idx[:k] + (prod,) + idx[k + 2:]
                out[face] = out.get(face, 0) + (-1) ** k * c * coeff
    return {t: c for t, c in out.items() if c != 0}


# -- matrix witness constants, dense and exact-rational --------------------

def witness_constants(alpha, p, q):
    """(C2, C3) as the smallest constants with
    |alpha_ij| p_i p_j <= C2 q_j and |1 - alpha_ij| p_i p_j <= C3 q_i,
    returned in log form; inputs are plain lists of floats."""
    n = len(alpha)
    c2 = c3 = -math.inf
    for i in range(n):
        for j in range(n):
            a = Fraction(alpha[i][j])
            b = 1 - a
            if a != 0 and p[i] > 0 and p[j] > 0:
                c2 = max(c2, math.log(abs(a)) + math.log(p[i]) + math.log(p[j]) - math.log(q[j]))
            if b != 0 and p[i] > 0 and p[j] > 0:
                c3 = max(c3, math.log(abs(b)) + math.log(p[i]) + math.log(p[j]) - math.log(q[i]))
    return c2, c3
