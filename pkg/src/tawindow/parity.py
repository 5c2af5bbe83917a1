"""Turn-based parity games solved with Zielonka's algorithm.

Player 1 wins a play when the least priority occurring infinitely often is
even. Attractor strategies break ties by attractor rank, then edge index.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Optional


@dataclass
class ParityGame:
    owner: list  # 1 or 2 per vertex
    priority: list
    edges: list  # (source, target)
    initial: int = 0
    labels: list = field(default_factory=list)
    out: list = field(init=False)
    inc: list = field(init=False)

    def __post_init__(self):
        n = len(self.owner)
        self.out = [[] for _ in range(n)]
        self.inc = [[] for _ in range(n)]
        for i, (s, t) in enumerate(self.edges):
            self.out[s].append(i)
            self.inc[t].append(i)

    def __len__(self):
        return len(self.owner)

    def successors(self, v: int) -> list:
        return [self.edges[e][1] for e in self.out[v]]


@dataclass
class ParitySolution:
    win1: set
    win2: set
    strategy1: dict  # vertex -> edge index
    strategy2: dict

    def winner(self, v: int) -> int:
        return 1 if v in self.win1 else 2


def attractor(game: ParityGame, player: int, targets, within: Optional[set] = None):
    """Vertices from which ``player`` forces a visit to ``targets``.

    Returns the attractor and the player's choice on its own attracted
    vertices outside the targets.
    """
    within = set(range(len(game))) if within is None else within
    attr = set(targets)
    rank = {v: 0 for v in attr}
    strategy: dict = {}
    count = {}
    queue = deque(sorted(attr))
    while queue:
        v = queue.popleft()
        for e in game.inc[v]:
            u = game.edges[e][0]
            if u not in within or u in attr:
                continue
            if game.owner[u] == player:
                best = min(i for i in game.out[u]
                           if game.edges[i][1] in attr and rank[game.edges[i][1]] == rank[v])
                strategy[u] = best
                attr.add(u)
                rank[u] = rank[v] + 1
                queue.append(u)
            else:
                if u not in count:
                    count[u] = sum(1 for i in game.out[u] if game.edges[i][1] in within)
                count[u] -= 1
                if count[u] == 0:
                    attr.add(u)
                    rank[u] = rank[v] + 1
                    queue.append(u)
    return attr, strategy


def _solve(game: ParityGame, vertices: set):
    win = {1: set(), 2: set()}
    strat: dict = {1: {}, 2: {}}
    V = set(vertices)
    while V:
        d = min(game.priority[v] for v in V)
        alpha = 1 if d % 2 == 0 else 2
        opp = 3 - alpha
        top = {v for v in V if game.priority[v] == d}
        A, a_strat = attractor(game, alpha, top, V)
        sub_win, sub_strat = _solve(game, V - A)
        if not sub_win[opp]:
            win[alpha] |= V
            strat[alpha].update(sub_strat[alpha])
            strat[alpha].update(a_strat)
            for v in top:
                if game.owner[v] == alpha:
                    strat[alpha][v] = min(i for i in game.out[v] if game.edges[i][1] in V)
            return win, strat
        B, b_strat = attractor(game, opp, sub_win[opp], V)
        win[opp] |= B
        strat[opp].update(sub_strat[opp])
        strat[opp].update(b_strat)
        V -= B
    return win, strat


def solve_parity(game: ParityGame) -> ParitySolution:
    win, strat = _solve(game, set(range(len(game))))
    s1 = {v: e for v, e in strat[1].items() if v in win[1] and game.owner[v] == 1}
    s2 = {v: e for v, e in strat[2].items() if v in win[2] and game.owner[v] == 2}
    return ParitySolution(win[1], win[2], s1, s2)


def to_dot(game: ParityGame) -> str:
    lines = ["digraph arena {"]
    for v in range(len(game)):
        shape = "box" if game.owner[v] == 1 else "diamond"
        label = f"{v}: p={game.priority[v]}"
        extra = ", peripheries=2" if v == game.initial else ""
        lines.append(f'  v{v} [shape={shape}, label="{label}"{extra}];')
    for s, t in game.edges:
        lines.append(f"  v{s} -> v{t};")
    lines.append("}")
    return "\n".join(lines) + "\n"
