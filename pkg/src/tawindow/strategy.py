"""Finite-memory region strategies read off solved arenas, and simulation against adversaries."""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .arena import AbstractMove, MoveTable, P1Choice, P2Response, Pass, Preempt
from .automata import ExpandedState
from .model import GAMMA, TimedGame
from .monitor import ConcreteState, Move, MoveError, Run, apply_move, initial_state, realize_delay
from .regions import ClockRegion, StateRegion, clock_region, gamma_integral


_ZERO = Fraction(0)


class LosingRegionError(LookupError):
    pass


@dataclass(frozen=True)
class Memory:
    integral: bool  # was the last observed region γ-integral
    q: object
    h: int  # running minimum to continue from (already reset after a tick)


class MealyStrategy:
    """Region strategy with memory (integral flag, objective state, running minimum).

    The tick of a step is inferred as "previous region γ-fractional and the
    current one γ-integral"; moves come from the arena strategy at the
    matching blame-free choice vertex.
    """

    def __init__(self, arena, solution, strict: bool = True):
        self.arena = arena
        self.solution = solution
        self.condition = arena.condition
        self.table: MoveTable = arena.table
        self.strict = strict

    def relaxed(self) -> "MealyStrategy":
        return MealyStrategy(self.arena, self.solution, strict=False)

    @property
    def D(self) -> int:
        return self.condition.D

    def initial(self) -> Memory:
        return Memory(True, self.condition.base.initial, self.D - 1)

    def memory_states(self) -> list:
        return [Memory(i, q, h) for i in (True, False) for q in self.condition.base.states for h in range(self.D)]

    def observe(self, m: Memory, region: StateRegion):
        """Arena choice vertex for reading ``region`` and the updated memory."""
        base = self.condition.base
        integral = gamma_integral(region)
        tick = (not m.integral) and integral
        q = base.step(m.q, region)
        h = min(m.h, base.priority[q])
        key = P1Choice(region, tick, False, ExpandedState(q, tick, False, h))
        return key, Memory(integral, q, self.D - 1 if tick else h)

    def update(self, m: Memory, region: StateRegion) -> Memory:
        return self.observe(m, region)[1]

    def winning(self, m: Memory, region: StateRegion) -> bool:
        v = self.arena.vertex(self.observe(m, region)[0])
        return v is not None and v in self.solution.win1

    def choose(self, key: P1Choice) -> AbstractMove:
        v = self.arena.vertex(key)
        if v is not None and v in self.solution.strategy1:
            e = self.solution.strategy1[v]
            return self.arena.keys[self.arena.game.edges[e][1]].pending
        if self.strict:
            raise LosingRegionError(f"no winning move at {key.region.encode()}")
        return fallback_move(self.table, key.region)

    def move(self, m: Memory, region: StateRegion) -> AbstractMove:
        return self.choose(self.observe(m, region)[0])

    def step(self, m: Memory, region: StateRegion):
        key, m2 = self.observe(m, region)
        return m2, self.choose(key), key

    def to_table(self) -> dict:
        mems = self.memory_states()
        ids = {m: i for i, m in enumerate(mems)}
        rows = []
        for m in mems:
            for r in self.arena.entries:
                key, m2 = self.observe(m, r)
                v = self.arena.vertex(key)
                row = {"memory": ids[m], "region": r.encode(), "next": ids[m2], "move": None}
                if v is not None and v in self.solution.strategy1:
                    mv = self.choose(key)
                    row["move"] = [mv.target, mv.edge]
                rows.append(row)
        return {
            "memory": [{"integral": m.integral, "q": str(m.q), "h": m.h} for m in mems],
            "initial": ids[self.initial()],
            "rows": rows,
        }


def fallback_move(table: MoveTable, region: StateRegion) -> AbstractMove:
    """Longest pure delay, or the latest player 1 edge if delaying is impossible."""
    moves = table.moves(region)
    best = max((m for m in moves if m.edge is None), key=lambda m: m.target)
    if best.target > 0:
        return best
    edges = [m for m in moves if m.edge is not None]
    return max(edges, key=lambda m: (m.target, m.edge)) if edges else best


def build_mealy(rr, strict: bool = True) -> MealyStrategy:
    return MealyStrategy(rr.arena, rr.parity, strict)


class MealyTable:
    """A Mealy strategy loaded back from its JSON table."""

    def __init__(self, data: dict, game: TimedGame):
        self.rows = {(row["memory"], row["region"]): row for row in data["rows"]}
        self.init = data["initial"]
        self.table = MoveTable(game)
        self.strict = True

    @classmethod
    def from_json(cls, text: str, game: TimedGame) -> "MealyTable":
        data = json.loads(text)
        data = data.get("strategy", data)
        if "layers" in data:
            raise ValueError("layered strategies cannot be replayed from a table")
        return cls(data, game)

    def initial(self):
        return self.init

    def step(self, m, region: StateRegion):
        row = self.rows.get((m, region.encode()))
        if row is None:
            raise LosingRegionError(f"region {region.encode()} not covered by the table")
        if row["move"] is None:
            raise LosingRegionError(f"no winning move at {region.encode()}")
        target, edge = row["move"]
        return row["next"], AbstractMove(target, edge), None


class LayeredMealy:
    """Plays the machine of the lowest layer containing the current region.

    Whenever the lowest such layer changes, that layer's machine restarts
    from its initial memory.
    """

    def __init__(self, layers: list):
        self.layers = layers  # (region set, MealyStrategy), innermost first

    @property
    def table(self) -> MoveTable:
        return self.layers[-1][1].table

    def layer_of(self, region: StateRegion) -> Optional[int]:
        return next((k for k, (w, _) in enumerate(self.layers) if region in w), None)

    def initial(self):
        return (None, None)

    def step(self, mem, region: StateRegion):
        m, k = mem
        e = self.layer_of(region)
        if e is None:
            e = len(self.layers) - 1
            machine = self.layers[e][1]
            if machine.strict:
                raise LosingRegionError(f"region {region.encode()} lies outside every layer")
        machine = self.layers[e][1]
        if e != k:
            m = machine.initial()
        m2, move, key = machine.step(m, region)
        return (m2, e), move, key

    def relaxed(self) -> "LayeredMealy":
        return LayeredMealy([(w, s.relaxed()) for w, s in self.layers])

    def to_table(self) -> dict:
        return {"layers": [{"regions": sorted(r.encode() for r in w), "machine": s.to_table()}
                           for w, s in self.layers]}


def layer_mealy(layers: list) -> LayeredMealy:
    return LayeredMealy(layers)


# Realization ---------------------------------------------------------------

def realize_move(table: MoveTable, move: AbstractMove, state: ConcreteState, simplest: bool = False) -> Move:
    """Concrete delay and action landing in the region the abstract move targets."""
    automaton = table.game.automaton
    cr = clock_region(state.valuation, automaton.clocks, _bounds(table))
    chain = table.chain(StateRegion(state.location, cr))
    if move.target >= len(chain):
        raise MoveError(f"move target {move.target} beyond the delay chain")
    delay = realize_delay(state.valuation, chain, move.target, simplest=simplest)
    action = None if move.edge is None else automaton.edges[move.edge].action
    return Move(delay, action)


def _bounds(table: MoveTable) -> tuple:
    b = getattr(table, "_bounds", None)
    if b is None:
        from .model import max_constants
        mc = max_constants(table.game.automaton)
        b = tuple(mc[x] for x in table.game.automaton.clocks)
        table._bounds = b
    return b


# Adversaries ---------------------------------------------------------------

class RandomAdversary:
    """Lets player 1's move fire with probability ``pass_rate``, else picks uniformly."""

    def __init__(self, seed: int, pass_rate: float = 0.5):
        self.rng = random.Random(seed)
        self.pass_rate = pass_rate

    def choose(self, region, pending, responses, key) -> int:
        if len(responses) == 1 or self.rng.random() < self.pass_rate:
            return 0
        return self.rng.randrange(len(responses))


class Script:
    """Fixed sequence of resolutions: "pass" or (action, chain position); action None delays."""

    def __init__(self, items: list):
        self.items = list(items)
        self.pos = 0

    def choose(self, region, pending, responses, key) -> int:
        if self.pos >= len(self.items):
            return 0
        item = self.items[self.pos]
        self.pos += 1
        if item == "pass" or isinstance(item, Pass):
            return 0
        action, position = item
        for i, (res, *_rest) in enumerate(responses):
            if isinstance(res, Preempt) and res.position == position:
                if (None if res.edge is None else self._action(res.edge)) == action:
                    return i
        raise MoveError(f"scripted move {action} at position {position} is not enabled")

    def bind(self, automaton):
        self._action = lambda e: automaton.edges[e].action
        return self


class ArenaAdversary:
    """Plays player 2's arena strategy; passes where it has none."""

    def __init__(self, arena, solution):
        self.arena = arena
        self.solution = solution

    def choose(self, region, pending, responses, key) -> int:
        if key is None:
            return 0
        v = self.arena.vertex(P2Response(key.region, key.tick, key.blame, key.qhat, pending))
        if v is None or v not in self.solution.strategy2:
            return 0
        res = self.arena.resolution[self.solution.strategy2[v]]
        return responses.index(res)


def _grid_region(vals: list, scale: int, clocks: tuple, bounds: tuple) -> ClockRegion:
    ints = []
    fracs: dict = {}
    for x, v, c in zip(clocks, vals, bounds):
        k, rem = divmod(v, scale)
        if k > c or (k == c and rem):
            ints.append(None)
            if x != GAMMA:
                continue
        else:
            ints.append(k)
        fracs.setdefault(rem, []).append(x)
    zero = frozenset(fracs.pop(0, ()))
    return ClockRegion(clocks, bounds, tuple(ints), (zero,) + tuple(frozenset(fracs[k]) for k in sorted(fracs)))


def simulate(game: TimedGame, strategy, adversary, horizon, start: Optional[ConcreteState] = None,
             max_steps: Optional[int] = None) -> Run:
    """Play ``strategy`` against ``adversary`` until the global clock has advanced by ``horizon``.

    Values are kept as integer multiples of a shared dyadic grid step; an
    open stretch of a delay chain is realized at its grid midpoint, and the
    grid is halved when a stretch has no interior grid point. The run records
    blame and tick flags per move; ``run.memory`` and ``run.regions`` hold the
    strategy memory and region before each move.
    """
    automaton = game.automaton
    clocks = automaton.clocks
    idx = {c: i for i, c in enumerate(clocks)}
    table = strategy.table
    bounds = _bounds(table)
    if isinstance(adversary, Script):
        adversary.bind(automaton)
    state = start or initial_state(automaton)
    scale = math.lcm(*(Fraction(v).denominator for v in state.valuation.values()))
    vals = [int(Fraction(state.valuation[c]) * scale) for c in clocks]
    gi = idx[GAMMA]
    end = Fraction(state.valuation[GAMMA]) + Fraction(horizon)
    limit = max_steps if max_steps is not None else 8 * (math.ceil(horizon) + 1) * max(2, len(clocks)) + 64
    trail = [(state.location, tuple(vals), scale)]
    moves, blames, ticks, memory, regions = [], [], [], [], []
    mem = strategy.initial()
    loc = state.location
    r = StateRegion(loc, clock_region(state.valuation, clocks, bounds))
    memo: dict = {}  # the strategy is deterministic in (memory, region)
    while vals[gi] * end.denominator < end.numerator * scale and len(moves) < limit:
        memory.append(mem)
        regions.append(r)
        hit = memo.get((mem, r))
        if hit is None:
            mem2, move, key = strategy.step(mem, r)
            hit = memo[mem, r] = (mem2, move, key, table.responses(r, move))
        mem, move, key, responses = hit
        res, succ, tick, blame = responses[adversary.choose(r, move, responses, key)]
        target, edge = (move.target, move.edge) if isinstance(res, Pass) else (res.position, res.edge)
        d = 0
        if target:
            offs = sorted({scale - rem if rem else scale
                           for rem in (vals[idx[next(iter(b))]] % scale for b in r.clocks.blocks if b)})

            def event(j):
                if j == 0:
                    return 0
                n, i = divmod(j - 1, len(offs))
                return offs[i] + n * scale

            shift = 0 if r.clocks.blocks[0] else 1
            if (target + shift) % 2 == 0:
                d = event((target + shift) // 2)
            else:
                lo, hi = event((target + shift - 1) // 2), event((target + shift + 1) // 2)
                if hi - lo < 2:
                    scale *= 2
                    vals = [2 * v for v in vals]
                    lo, hi = 2 * lo, 2 * hi
                d = (lo + hi) // 2
        before = vals[gi] // scale
        vals = [v + d for v in vals]
        if edge is None:
            action = None
        else:
            e = automaton.edges[edge]
            for c in e.resets:
                vals[idx[c]] = 0
            action, loc = e.action, e.target
        landed = StateRegion(loc, _grid_region(vals, scale, clocks, bounds))
        if landed != succ:
            raise AssertionError(f"realized move left the abstract successor: {landed} vs {succ}")
        if (vals[gi] // scale > before) != tick:
            raise AssertionError("tick flag disagrees with the concrete global clock")
        moves.append(Move(Fraction(d, scale), action))
        trail.append((loc, tuple(vals), scale))
        blames.append(blame)
        ticks.append(tick)
        r = landed
    states = [ConcreteState(l, {c: Fraction(v, sc) for c, v in zip(clocks, vs)}) for l, vs, sc in trail]
    run = Run(states, moves, blames, ticks)
    run.memory, run.regions = memory, regions
    return run


def start_state(region: StateRegion) -> ConcreteState:
    from .regions import representative

    return ConcreteState(region.location, representative(region))


def convergent_tail_blameless(run: Run) -> bool:
    """No blamed move between two visits of the same configuration after the last tick.

    A run that stops short of its horizon is a prefix of a time-convergent
    play; the strategy must not let player 1 take the blame on a repeatable
    stretch of that tail.
    """
    last = max((i for i, t in enumerate(run.ticks) if t), default=-1)
    seen: dict = {}
    blamed = 0
    for i in range(last + 1, len(run.moves)):
        cfg = (run.regions[i], run.memory[i])
        if cfg in seen and blamed > seen[cfg]:
            return False
        seen.setdefault(cfg, blamed)
        blamed += 1 if run.blame[i] else 0
    return True
