"""Bipartite matching with deterministic lowest-index augmenting paths."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass


@dataclass(frozen=True)
class Matching:
    left_to_right: tuple[int | None, ...]
    n_right: int

    @property
    def size(self) -> int:
        return sum(1 for r in self.left_to_right if r is not None)

    def is_left_perfect(self) -> bool:
        return all(r is not None for r in self.left_to_right)


def max_matching(n_left: int, n_right: int, adj: list[list[int]]) -> Matching:
    """Maximum matching by augmenting paths; neighbours are tried in increasing order.

    Left vertices are processed in index order, so the output is a
    deterministic function of the input.
    """
    adj = [sorted(set(a)) for a in adj]
    match_r: list[int | None] = [None] * n_right
    match_l: list[int | None] = [None] * n_left

    for root in range(n_left):
        # iterative DFS for an augmenting path from root
        seen = [False] * n_right
        parent_r: dict[int, int] = {}
        stack = [(root, iter(adj[root]))]
        found = None
        while stack and found is None:
            u, it = stack[-1]
            advanced = False
            for v in it:
                if seen[v]:
                    continue
                seen[v] = True
                parent_r[v] = u
                if match_r[v] is None:
                    found = v
                else:
                    stack.append((match_r[v], iter(adj[match_r[v]])))
                advanced = True
                break
            if not advanced:
                stack.pop()
        if found is None:
            continue
        v = found
        while True:
            u = parent_r[v]
            prev = match_l[u]
            match_l[u] = v
            match_r[v] = u
            if u == root:
                break
            v = prev
    return Matching(tuple(match_l), n_right)


def hall_violator(n_left: int, adj: list[list[int]], m: Matching) -> tuple[list[int], list[int]] | None:
    """A left set whose neighbourhood is smaller than itself, if ``m`` is not left-perfect.

    Alternating search from the lowest unmatched left vertex: the reachable
    left vertices ``F`` have neighbourhood exactly the reachable right
    vertices, all matched into ``F``, so ``|N(F)| = |F| - 1``.
    """
    match_r = {r: l for l, r in enumerate(m.left_to_right) if r is not None}
    start = next((u for u in range(n_left) if m.left_to_right[u] is None), None)
    if start is None:
        return None
    left, right = {start}, set()
    queue = deque([start])
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if v in right:
                continue
            right.add(v)
            w = match_r[v]  # v is matched, otherwise m was not maximum
            if w not in left:
                left.add(w)
                queue.append(w)
    return sorted(left), sorted(right)
