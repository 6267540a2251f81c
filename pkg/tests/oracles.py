"""Reference implementations used only by the tests.

States are dictionaries ``{occupation tuple: amplitude}`` and operators are
applied one ladder operator at a time, with no shared code from the package.
"""

import numpy as np


def annihilate(vec, j):
    out = {}
    for occ, amp in vec.items():
        if occ[j] > 0:
            new = list(occ)
            new[j] -= 1
            out[tuple(new)] = out.get(tuple(new), 0) + amp * np.sqrt(occ[j])
    return out


def create(vec, j):
    out = {}
    for occ, amp in vec.items():
        new = list(occ)
        new[j] += 1
        out[tuple(new)] = out.get(tuple(new), 0) + amp * np.sqrt(occ[j] + 1)
    return out


def scale_by(vec, f):
    return {occ: amp * f(occ) for occ, amp in vec.items()}


def inner(a, b):
    return sum(np.conj(a[k]) * v for k, v in b.items() if k in a)


def four_point(vec, j, k):
    """<psi| a+_j a+_k a_j a_k |psi> / <psi|psi> applied literally."""
    out = create(create(annihilate(annihilate(vec, k), j), k), j)
    return inner(vec, out) / inner(vec, vec)
