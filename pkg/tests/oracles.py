"""Independent reference computations over plain adjacency data.

Nothing here touches the interpreter: graphs are ``(n, edges)`` with nodes
``0..n-1`` and ``edges`` an ordered list of ``(src, trg)`` pairs.
"""

from __future__ import annotations

from itertools import permutations

import numpy as np


def adjacency(n: int, edges: list[tuple[int, int]]) -> np.ndarray:
    a = np.zeros((n, n), dtype=bool)
    for s, t in edges:
        a[s, t] = True
    return a


def successors(n: int, edges: list[tuple[int, int]]) -> dict[int, list[int]]:
    """Successors in edge order, duplicates kept (one entry per edge)."""
    out: dict[int, list[int]] = {i: [] for i in range(n)}
    for s, t in edges:
        out[s].append(t)
    return out


def three_cycles(n: int, edges: list[tuple[int, int]]) -> set[tuple[int, int, int]]:
    """All ordered triples of pairwise-distinct nodes a->b->c->a, by exhaustive enumeration."""
    a = adjacency(n, edges)
    return {(x, y, z) for x, y, z in permutations(range(n), 3) if a[x, y] and a[y, z] and a[z, x]}


def transitive_step(n: int, edges: list[tuple[int, int]]) -> set[tuple[int, int]]:
    """Pairs reachable in exactly two steps that are not already edges: A^2 and not A."""
    a = adjacency(n, edges).astype(int)
    two = (a @ a) > 0
    new = two & ~a.astype(bool)
    return {(int(i), int(j)) for i, j in zip(*np.nonzero(new))}


def transitive_closure_extra(n: int, edges: list[tuple[int, int]]) -> set[tuple[int, int]]:
    """Everything the full closure would add; used to show the one-step result differs."""
    a = adjacency(n, edges)
    reach = a.copy()
    for _ in range(n):
        reach = reach | ((reach.astype(int) @ a.astype(int)) > 0)
    return {(int(i), int(j)) for i, j in zip(*np.nonzero(reach & ~a))}


def looping_edges(edges: list[tuple[int, int]]) -> int:
    return sum(1 for s, t in edges if s == t)


def isolated_nodes(n: int, edges: list[tuple[int, int]]) -> int:
    touched = {s for s, _ in edges} | {t for _, t in edges}
    return sum(1 for i in range(n) if i not in touched)
