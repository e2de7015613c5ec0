"""Dinic max-flow on a small residual network.

Works with integer capacities (exact, used for circulations) and float
capacities (used for subtour separation, with ``eps`` as the residual
threshold).  Arcs are scanned in insertion order, so results are
deterministic.
"""

from __future__ import annotations

from collections import deque


class FlowNetwork:
    def __init__(self, n: int):
        self.n = n
        self.head: list[int] = []
        self.cap: list = []
        self.adj: list[list[int]] = [[] for _ in range(n)]
        self._orig: list = []

    def add_edge(self, u: int, v: int, cap) -> int:
        """Add arc ``u -> v``; returns its handle for :meth:`flow`."""
        k = len(self.head)
        self.head += [v, u]
        self.cap += [cap, 0 * cap]
        self._orig += [cap, 0 * cap]
        self.adj[u].append(k)
        self.adj[v].append(k + 1)
        return k

    def flow(self, k: int):
        return self._orig[k] - self.cap[k]

    def _bfs(self, s: int, t: int, eps) -> list[int] | None:
        level = [-1] * self.n
        level[s] = 0
        queue = deque([s])
        while queue:
            u = queue.popleft()
            for k in self.adj[u]:
                v = self.head[k]
                if level[v] < 0 and self.cap[k] > eps:
                    level[v] = level[u] + 1
                    queue.append(v)
        return level if level[t] >= 0 else None

    def max_flow(self, s: int, t: int, eps=0):
        if s == t:
            raise ValueError("source equals sink")
        total = 0
        while True:
            level = self._bfs(s, t, eps)
            if level is None:
                return total
            it = [0] * self.n
            while True:
                pushed = self._augment(s, t, level, it, eps)
                if not pushed:
                    break
                total += pushed
                if pushed <= eps:
                    break

    def _augment(self, s: int, t: int, level: list[int], it: list[int], eps):
        # iterative DFS along the level graph
        path: list[int] = []
        u = s
        while True:
            if u == t:
                bottleneck = min(self.cap[k] for k in path)
                for k in path:
                    self.cap[k] -= bottleneck
                    self.cap[k ^ 1] += bottleneck
                return bottleneck
            advanced = False
            while it[u] < len(self.adj[u]):
                k = self.adj[u][it[u]]
                v = self.head[k]
                if self.cap[k] > eps and level[v] == level[u] + 1:
                    path.append(k)
                    u = v
                    advanced = True
                    break
                it[u] += 1
            if not advanced:
                if not path:
                    return 0
                level[u] = -1
                k = path.pop()
                u = self.head[k ^ 1]
                it[u] += 1

    def source_side(self, s: int, eps=0) -> set[int]:
        """Vertices reachable from ``s`` in the residual network."""
        seen = {s}
        stack = [s]
        while stack:
            u = stack.pop()
            for k in self.adj[u]:
                v = self.head[k]
                if v not in seen and self.cap[k] > eps:
                    seen.add(v)
                    stack.append(v)
        return seen
