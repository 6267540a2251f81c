"""Bosonic occupation-number basis for N particles on an L-site chain.

States are ordered lexicographically descending, so ``(N, 0, ..., 0)`` has
index 0 and ``(0, ..., 0, N)`` is last.  Ranking uses the combinatorial
number system: the rank of an occupation vector ``n`` is

    sum_{i=0}^{L-2} C(r_i - n_i + L - i - 2, L - i - 1)

where ``r_i`` is the number of particles not yet placed on sites ``< i``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from math import comb, sqrt

import numpy as np

__all__ = ["FockBasis", "enumerate_basis", "apply_hop", "basis_size"]


def basis_size(L: int, N: int) -> int:
    return comb(L + N - 1, N)


def _descending_states(L: int, N: int) -> list[tuple[int, ...]]:
    if L == 1:
        return [(N,)]
    out = []
    for first in range(N, -1, -1):
        for rest in _descending_states(L - 1, N - first):
            out.append((first,) + rest)
    return out


@dataclass(frozen=True)
class FockBasis:
    """Immutable ordered basis of N-boson occupation vectors on L sites."""

    L: int
    N: int
    occupations: np.ndarray = field(repr=False, compare=False)
    _binom: np.ndarray = field(repr=False, compare=False)

    def __len__(self) -> int:
        return self.occupations.shape[0]

    @property
    def size(self) -> int:
        return len(self)

    @property
    def states(self) -> list[tuple[int, ...]]:
        return [tuple(int(x) for x in row) for row in self.occupations]

    def unrank(self, index: int) -> tuple[int, ...]:
        if not 0 <= index < len(self):
            raise IndexError(f"index {index} outside basis of size {len(self)}")
        return tuple(int(x) for x in self.occupations[index])

    def rank(self, state) -> int:
        state = tuple(int(x) for x in state)
        if len(state) != self.L or sum(state) != self.N or min(state) < 0:
            raise ValueError(f"{state} is not an occupation vector of {self.N} bosons on {self.L} sites")
        return int(self.rank_many(np.asarray([state]))[0])

    def rank_many(self, states: np.ndarray) -> np.ndarray:
        """Vectorised rank of an ``(m, L)`` array of occupation vectors."""
        states = np.asarray(states, dtype=np.int64)
        L = self.L
        if L == 1:
            return np.zeros(states.shape[0], dtype=np.int64)
        placed = np.cumsum(states, axis=1) - states
        remaining = self.N - placed
        idx = np.zeros(states.shape[0], dtype=np.int64)
        for i in range(L - 1):
            top = remaining[:, i] - states[:, i] + L - i - 2
            idx += self._binom[top, L - i - 1]
        return idx

    @cached_property
    def lookup(self) -> dict[tuple[int, ...], int]:
        """Hash-map rank, kept only to cross-check :meth:`rank` in tests."""
        return {s: i for i, s in enumerate(self.states)}


def enumerate_basis(L: int, N: int) -> FockBasis:
    """All occupation vectors of ``N`` bosons on ``L`` sites in canonical order."""
    if L < 1:
        raise ValueError("need at least one site")
    if N < 0:
        raise ValueError("particle number must be non-negative")
    occ = np.array(_descending_states(L, N), dtype=np.int64).reshape(-1, L)
    size = N + L
    binom = np.zeros((size + 1, size + 1), dtype=np.int64)
    for n in range(size + 1):
        for k in range(n + 1):
            binom[n, k] = comb(n, k)
    occ.setflags(write=False)
    binom.setflags(write=False)
    return FockBasis(L=L, N=N, occupations=occ, _binom=binom)


def apply_hop(state, src: int, dst: int) -> tuple[tuple[int, ...], float] | None:
    """Apply ``a^dagger_dst a_src`` to an occupation vector.

    Returns the target state and ``sqrt(n_src * (n_dst + 1))`` evaluated on
    the input occupations, or ``None`` when ``src`` is empty.
    """
    occ = list(state)
    n_src, n_dst = occ[src], occ[dst]
    if n_src == 0:
        return None
    if src == dst:
        return tuple(occ), float(n_src)
    occ[src] -= 1
    occ[dst] += 1
    return tuple(occ), sqrt(n_src * (n_dst + 1))
