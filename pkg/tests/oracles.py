"""Independent reference constructions used only by the test suite.

Everything here is built from scalar entry formulas and explicit index
loops, or from an explicit orthonormal completion of the normalized all-ones
vector.  None of it shares code with the package's Kronecker machinery, so
agreement is evidence rather than tautology.
"""
import itertools
import math

import numpy as np


def e_entry(bit: int, q: int, x: int, y: int) -> float:
    if bit == 0:
        return 1.0 / q
    return (1.0 if x == y else 0.0) - 1.0 / q


def f_entry(q: int, x: int, y1: int, y2: int) -> float:
    return q**-1.5 + (e_entry(1, q, x, y1) + e_entry(1, q, x, y2)) / math.sqrt(q)


def weight_projector_entry(q, k, xs, ys) -> float:
    m = len(xs)
    total = 0.0
    for ones in itertools.combinations(range(m), k):
        chosen = set(ones)
        prod = 1.0
        for j in range(m):
            prod *= e_entry(1 if j in chosen else 0, q, xs[j], ys[j])
        total += prod
    return total


def naive_gamma_prime(n: int, q: int, alphas) -> np.ndarray:
    """Stacked operator assembled entry by entry from the scalar formulas."""
    pairs = list(itertools.combinations(range(1, n + 1), 2))
    rows = len(pairs) * q ** (n - 1)
    out = np.zeros((rows, q**n))
    for bi, (a, b) in enumerate(pairs):
        rest = [c for c in range(1, n + 1) if c not in (a, b)]
        for ri, row in enumerate(itertools.product(range(q), repeat=n - 1)):
            xc, xrest = row[0], row[1:]
            for ci, y in enumerate(itertools.product(range(q), repeat=n)):
                val = 0.0
                for k in range(n - 1):
                    if alphas[k] == 0.0:
                        continue
                    ys = tuple(y[c - 1] for c in rest)
                    val += (alphas[k] * f_entry(q, xc, y[a - 1], y[b - 1])
                            * weight_projector_entry(q, k, xrest, ys))
                out[bi * q ** (n - 1) + ri, ci] = val
    return out


def completion_basis(q: int, rotate_seed=None) -> np.ndarray:
    """Orthogonal matrix whose column 0 is the normalized all-ones vector.

    A Householder reflection provides one completion; an optional seeded
    rotation of the remaining columns produces a second, different one.
    """
    e0 = np.full(q, q**-0.5)
    d0 = np.zeros(q)
    d0[0] = 1.0
    w = d0 - e0
    w /= np.linalg.norm(w)
    basis = np.eye(q) - 2.0 * np.outer(w, w)
    if rotate_seed is not None:
        rng = np.random.default_rng(rotate_seed)
        rot, _ = np.linalg.qr(rng.standard_normal((q - 1, q - 1)))
        basis = basis.copy()
        basis[:, 1:] = basis[:, 1:] @ rot
    return basis


def f1_from_basis(q: int, basis: np.ndarray) -> np.ndarray:
    out = np.zeros((q, q * q))
    for i in range(1, q):
        ei = basis[:, i]
        out += np.outer(ei, np.kron(basis[:, 0], ei) + np.kron(ei, basis[:, 0]))
    return out


def f_image_from_basis(q: int, basis: np.ndarray) -> np.ndarray:
    out = np.zeros((q, q * q))
    for i in range(1, q):
        ei = basis[:, i]
        out += np.outer(ei, np.kron(basis[:, 0], ei))
    return out


def dense_delta_pattern_oracle(n, q, pair, i) -> np.ndarray:
    """Inequality pattern for one block, from explicit tuple loops."""
    a, b = pair
    rest = [c for c in range(1, n + 1) if c not in (a, b)]
    rows = []
    for row in itertools.product(range(q), repeat=n - 1):
        xc, xrest = row[0], row[1:]
        if i in (a, b):
            xi = xc
        else:
            xi = xrest[rest.index(i)]
        rows.append(xi)
    cols = [y[i - 1] for y in itertools.product(range(q), repeat=n)]
    return (np.array(rows)[:, None] != np.array(cols)[None, :]).astype(float)
