"""Turn-based region arena for a timed game with a tick/blame-expanded condition.

Each round, player 1 proposes an abstract move (a position on the delay
chain plus an optional edge) and player 2 either lets it fire or preempts it:
with one of its own edges at an earlier or equal chain position, or by a
shorter pure delay.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Optional

from .automata import ExpandedDPA, ExpandedState
from .model import TimedGame
from .parity import ParityGame
from .regions import StateRegion, apply_reset, delay_chain, delay_successor, gamma_integral, satisfies


@dataclass(frozen=True)
class AbstractMove:
    target: int  # position on the move chain of the current region
    edge: Optional[int] = None  # None for a pure delay


@dataclass(frozen=True)
class Pass:
    pass


@dataclass(frozen=True)
class Preempt:
    edge: Optional[int]  # None when player 2 only delays
    position: int


@dataclass(frozen=True)
class P1Choice:
    region: StateRegion
    tick: bool
    blame: bool
    qhat: ExpandedState


@dataclass(frozen=True)
class P2Response:
    region: StateRegion
    tick: bool
    blame: bool
    qhat: ExpandedState
    pending: AbstractMove


class MoveTable:
    """Per-region move chains, player 1 moves and player 2 responses (cached)."""

    def __init__(self, game: TimedGame, normalized: bool = True):
        self.game = game
        self.normalized = normalized
        self._chains: dict = {}
        self._moves: dict = {}
        self._responses: dict = {}

    def chain(self, region: StateRegion) -> list:
        """Delay chain from ``region`` up to and including the first later γ-integral region."""
        c = self._chains.get(region)
        if c is not None:
            return c
        a = self.game.automaton
        inv = a.invariant(region.location)
        chain, cyc = delay_chain(region.clocks, inv)
        out = [chain[0]]
        i = 1
        while True:
            if i < len(chain):
                nxt = chain[i]
            elif cyc is not None:
                nxt = delay_successor(out[-1])
            else:
                break
            out.append(nxt)
            if gamma_integral(nxt):
                break
            i += 1
        self._chains[region] = out
        return out

    def _enabled(self, cr, edge_index: int) -> Optional[StateRegion]:
        a = self.game.automaton
        e = a.edges[edge_index]
        if not satisfies(cr, e.guard):
            return None
        after = apply_reset(cr, e.resets)
        if not satisfies(after, a.invariant(e.target)):
            return None
        return StateRegion(e.target, after)

    def limit(self, region: StateRegion) -> int:
        chain = self.chain(region)
        last = len(chain) - 1
        if self.normalized and last > 0 and gamma_integral(chain[0]) and gamma_integral(chain[last]):
            return last - 1
        return last

    def moves(self, region: StateRegion) -> list:
        m = self._moves.get(region)
        if m is not None:
            return m
        a = self.game.automaton
        chain = self.chain(region)
        out = []
        # longest delays first, so that solver tie-breaks favour progress
        for i in range(self.limit(region), -1, -1):
            out.append(AbstractMove(i, None))
            for e in a.outgoing(region.location):
                if a.edges[e].action in self.game.p1_actions and self._enabled(chain[i], e) is not None:
                    out.append(AbstractMove(i, e))
        self._moves[region] = out
        return out

    def outcome(self, region: StateRegion, move: AbstractMove) -> StateRegion:
        cr = self.chain(region)[move.target]
        if move.edge is None:
            return StateRegion(region.location, cr)
        return self._enabled(cr, move.edge)

    def tick_upto(self, region: StateRegion, position: int) -> bool:
        chain = self.chain(region)
        return any(gamma_integral(chain[j]) for j in range(1, position + 1))

    def preemptions(self, region: StateRegion, upto: int) -> list:
        a = self.game.automaton
        chain = self.chain(region)
        out = []
        for i in range(upto + 1):
            if i < upto:
                out.append((Preempt(None, i), StateRegion(region.location, chain[i])))
            for e in a.outgoing(region.location):
                if a.edges[e].action in self.game.p2_actions:
                    succ = self._enabled(chain[i], e)
                    if succ is not None:
                        out.append((Preempt(e, i), succ))
        return out

    def responses(self, region: StateRegion, pending: AbstractMove) -> list:
        key = (region, pending)
        r = self._responses.get(key)
        if r is not None:
            return r
        out = [(Pass(), self.outcome(region, pending), self.tick_upto(region, pending.target), True)]
        for res, succ in self.preemptions(region, pending.target):
            out.append((res, succ, self.tick_upto(region, res.position), False))
        self._responses[key] = out
        return out


def p1_abstract_moves(game: TimedGame, region: StateRegion, normalized: bool = False) -> list:
    return MoveTable(game, normalized).moves(region)


def p2_responses(game: TimedGame, region: StateRegion, pending: AbstractMove) -> list:
    return MoveTable(game).responses(region, pending)


@dataclass
class Arena:
    game: ParityGame
    index: dict  # vertex key -> id
    keys: list
    table: MoveTable
    condition: ExpandedDPA
    resolution: dict  # edge id out of a P2Response vertex -> (resolution, successor, tick, blame)
    entries: dict  # region -> fresh-entry vertex id

    def vertex(self, key) -> Optional[int]:
        return self.index.get(key)

    def fresh(self, region: StateRegion) -> P1Choice:
        return P1Choice(region, False, False, self.condition.entry(region))


def build_arena(game: TimedGame, condition: ExpandedDPA, seeds: Optional[list] = None,
                table: Optional[MoveTable] = None, initial: Optional[StateRegion] = None) -> Arena:
    """Explicit arena reachable from the fresh entries of ``seeds``.

    A P1Choice vertex reached with blame set has a single edge to its
    blame-free twin, so that player 1's choice never depends on blame.
    """
    table = table or MoveTable(game)
    if seeds is None:
        from .regions import build_region_graph
        seeds = [build_region_graph(game.automaton).initial]
    index: dict = {}
    keys: list = []
    owner: list = []
    priority: list = []
    edges: list = []
    resolution: dict = {}
    queue = deque()

    def add(key, prio) -> int:
        v = index.get(key)
        if v is None:
            v = len(keys)
            index[key] = v
            keys.append(key)
            owner.append(1 if isinstance(key, P1Choice) else 2)
            priority.append(prio)
            queue.append(v)
        return v

    entries = {}
    for r in seeds:
        key = P1Choice(r, False, False, condition.entry(r))
        entries[r] = add(key, condition.priority(key.qhat))

    while queue:
        v = queue.popleft()
        key = keys[v]
        if isinstance(key, P1Choice):
            if key.blame:
                q = key.qhat
                twin = P1Choice(key.region, key.tick, False, ExpandedState(q.q, q.tick, False, q.h))
                edges.append((v, add(twin, condition.priority(twin.qhat))))
                continue
            for m in table.moves(key.region):
                w = add(P2Response(key.region, key.tick, key.blame, key.qhat, m), priority[v])
                edges.append((v, w))
        else:
            for res in table.responses(key.region, key.pending):
                _, succ, tick, blame = res
                q2 = condition.step(key.qhat, (succ, tick, blame))
                w = add(P1Choice(succ, tick, blame, q2), condition.priority(q2))
                resolution[len(edges)] = res
                edges.append((v, w))
    start = initial if initial is not None else seeds[0]
    pg = ParityGame(owner, priority, edges, entries.get(start, 0), keys)
    return Arena(pg, index, keys, table, condition, resolution, entries)
