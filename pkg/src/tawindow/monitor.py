"""Concrete semantics with exact rational time and an online window monitor."""

from __future__ import annotations

import bisect
import json
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import networkx as nx

from .model import GAMMA, PriorityFunction, TimedAutomaton, format_constraint, holds, max_constants
from .regions import (
    ClockRegion, StateRegion, apply_reset, build_region_graph, clock_region, delay_chain, gamma_integral,
    satisfies,
)


class MoveError(ValueError):
    pass


class DeadlockError(RuntimeError):
    pass


@dataclass(frozen=True)
class ConcreteState:
    location: str
    valuation: dict

    def __repr__(self):
        vals = ", ".join(f"{k}={v}" for k, v in self.valuation.items())
        return f"({self.location}, {vals})"


@dataclass(frozen=True)
class Move:
    delay: Fraction
    action: Optional[str] = None


@dataclass
class Run:
    states: list
    moves: list = field(default_factory=list)
    blame: list = field(default_factory=list)  # per move: True when player 1's move fired
    ticks: list = field(default_factory=list)  # per move: whether the global clock crossed an integer

    def elapsed(self) -> list:
        return [s.valuation[GAMMA] for s in self.states]

    def __len__(self):
        return len(self.states)


def initial_state(automaton: TimedAutomaton) -> ConcreteState:
    return ConcreteState(automaton.initial, {c: Fraction(0) for c in automaton.clocks})


def apply_move(automaton: TimedAutomaton, state: ConcreteState, move: Move) -> ConcreteState:
    delay = Fraction(move.delay)
    if delay < 0:
        raise MoveError(f"negative delay {delay}")
    if move.action is not None and move.action not in automaton.actions:
        raise MoveError(f"unknown action {move.action}")
    v = {c: x + delay for c, x in state.valuation.items()}
    inv = automaton.invariant(state.location)
    if not holds(inv, v):
        raise MoveError(f"invariant {format_constraint(inv, pretty=True)} violated during delay")
    if move.action is None:
        return ConcreteState(state.location, v)
    for i in automaton.outgoing(state.location):
        e = automaton.edges[i]
        if e.action == move.action and holds(e.guard, v):
            for c in e.resets:
                v[c] = Fraction(0)
            tinv = automaton.invariant(e.target)
            if not holds(tinv, v):
                raise MoveError(f"invariant {format_constraint(tinv, pretty=True)} of {e.target} violated after reset")
            return ConcreteState(e.target, v)
    raise MoveError(f"no {move.action}-edge enabled from {state.location} after delay {delay}")


# Window statuses -----------------------------------------------------------

@dataclass(frozen=True)
class Closed:
    at_index: int
    elapsed: Fraction


@dataclass(frozen=True)
class Open:
    min_priority: int
    elapsed: Fraction


@dataclass(frozen=True)
class Broken:
    elapsed: Fraction


@dataclass(frozen=True)
class ViolatedAt:
    index: int


@dataclass(frozen=True)
class PendingFrom:
    index: int


@dataclass(frozen=True)
class ClearSoFar:
    pass


def window_status(run: Run, priorities: PriorityFunction, k: int, start: int, lam) -> object:
    """Status of the window opened at ``start`` on dimension ``k``."""
    g0 = run.states[start].valuation[GAMMA]
    low = None
    elapsed = Fraction(0)
    for j in range(start, len(run.states)):
        s = run.states[j]
        elapsed = s.valuation[GAMMA] - g0
        if elapsed >= lam:
            return Broken(elapsed)
        p = priorities(s.location, k)
        low = p if low is None else min(low, p)
        if low % 2 == 0:
            return Closed(j, elapsed)
    return Open(low, elapsed)


_CLOSED, _BROKEN, _OPEN = range(3)


def _window_scan(run: Run, priorities: PriorityFunction, k: int, lam):
    """Per start index: (kind, closing index or running minimum, elapsed), elapsed scaled by ``scale``."""
    n = len(run.states)
    pr = [priorities(s.location, k) for s in run.states]
    g = [s.valuation[GAMMA] for s in run.states]
    # first later index with a strictly smaller priority
    nxt: list = [None] * n
    stack: list[int] = []
    for i in range(n - 1, -1, -1):
        while stack and pr[stack[-1]] >= pr[i]:
            stack.pop()
        nxt[i] = stack[-1] if stack else None
        stack.append(i)
    close: list = [None] * n
    for i in range(n - 1, -1, -1):
        if pr[i] % 2 == 0:
            close[i] = i
        elif nxt[i] is not None:
            j = nxt[i]
            close[i] = j if pr[j] % 2 == 0 else close[j]
    suffix_min = pr[:]
    for i in range(n - 2, -1, -1):
        suffix_min[i] = min(pr[i], suffix_min[i + 1])
    # integer time stamps over a common denominator
    lam = Fraction(lam)
    scale = math.lcm(*{x.denominator for x in g}) * lam.denominator
    t = [x.numerator * (scale // x.denominator) for x in g]
    span = lam.numerator * (scale // lam.denominator)
    out = []
    for i in range(n):
        c = close[i]
        if c is not None and t[c] - t[i] < span:
            out.append((_CLOSED, c, t[c] - t[i]))
            continue
        j = bisect.bisect_left(t, t[i] + span, lo=i)
        if j < n:
            out.append((_BROKEN, j, t[j] - t[i]))
        else:
            out.append((_OPEN, suffix_min[i], t[-1] - t[i]))
    return out, scale


def window_statuses(run: Run, priorities: PriorityFunction, k: int, lam) -> list:
    """window_status for every start index, in O(n log n)."""
    scan, scale = _window_scan(run, priorities, k, lam)
    make = {_CLOSED: lambda a, e: Closed(a, e), _BROKEN: lambda a, e: Broken(e), _OPEN: lambda a, e: Open(a, e)}
    return [make[kind](a, Fraction(e, scale)) for kind, a, e in scan]


def check_prefix_direct(run: Run, priorities: PriorityFunction, lam, start: int = 0) -> list:
    """Per dimension: the first window (from ``start`` on) that broke, else the first still open."""
    verdicts = []
    for k in range(priorities.dimensions):
        scan, _ = _window_scan(run, priorities, k, lam)
        broken = next((i for i in range(start, len(scan)) if scan[i][0] == _BROKEN), None)
        if broken is not None:
            verdicts.append(ViolatedAt(broken))
            continue
        pending = next((i for i in range(start, len(scan)) if scan[i][0] == _OPEN), None)
        verdicts.append(PendingFrom(pending) if pending is not None else ClearSoFar())
    return verdicts


# Delay realization ---------------------------------------------------------

def _event_times(valuation: dict, region: ClockRegion, count: int) -> list:
    """The first ``count`` positive delays at which some tracked clock becomes integral.

    A clock other than the global one stops producing events once it passes
    its maximal constant.
    """
    times = set()
    for x, c in zip(region.clocks, region.bounds):
        v = valuation[x]
        k = math.floor(v) + 1
        last = k + count if x == GAMMA else c
        while k <= last:
            times.add(k - v)
            k += 1
    return sorted(times)[:count]


def simplest_between(a: Fraction, b: Fraction) -> Fraction:
    """The rational with the smallest denominator strictly between a and b."""
    n = math.floor(a)
    if n + 1 < b:
        return Fraction(n + 1)
    fa, fb = a - n, b - n
    if fa == 0:
        return n + Fraction(1, math.floor(1 / fb) + 1)
    return n + 1 / simplest_between(1 / fb, 1 / fa)


def realize_delay(valuation: dict, chain: list, target: int, cycle_start: Optional[int] = None,
                  extra_units: int = 0, simplest: bool = False, checked: bool = True) -> Fraction:
    """A delay from ``valuation`` (inside chain[0]) that lands inside chain[target].

    Open stretches are realized at their midpoint, or at the simplest rational
    inside them when ``simplest`` is set (keeps denominators small on long
    runs). ``extra_units`` whole time units are added when the target lies on
    the terminal cycle of the chain.
    """
    if target == 0:
        return Fraction(0)
    region = chain[0]
    # with no clock on an integer, the first step of the chain is a point
    shift = 0 if region.blocks[0] else 1
    times = [Fraction(0)] + _event_times(valuation, region, (target + shift) // 2 + 1)
    if (target + shift) % 2 == 0:
        delta = times[(target + shift) // 2]
    else:
        lo, hi = times[(target + shift - 1) // 2], times[(target + shift + 1) // 2]
        delta = simplest_between(lo, hi) if simplest else (lo + hi) / 2
    if checked:
        r = clock_region({x: valuation[x] + delta for x in region.clocks}, region.clocks, region.bounds)
        if r != chain[target]:
            raise MoveError("delay chain does not match the valuation")
    if extra_units and cycle_start is not None and target >= cycle_start:
        delta += extra_units
    return delta


# Random sampling -----------------------------------------------------------

def divergent_regions(graph) -> set:
    """Regions from which some path lets time diverge."""
    g = nx.DiGraph()
    g.add_nodes_from(graph.vertices)
    for s, _, t in graph.edges:
        g.add_edge(s, t)
    seeds = set()
    for comp in nx.strongly_connected_components(g):
        if len(comp) < 2:
            continue
        if any(gamma_integral(r) for r in comp) and not all(gamma_integral(r) for r in comp):
            seeds |= comp
    out = set(seeds)
    for s in seeds:
        out |= nx.ancestors(g, s)
    return out


class _Sampler:
    def __init__(self, automaton: TimedAutomaton):
        self.automaton = automaton
        bounds = max_constants(automaton)
        self.bounds = tuple(bounds[x] for x in automaton.clocks)
        self.graph = build_region_graph(automaton)
        self.divergent = divergent_regions(self.graph)
        self.cache: dict = {}

    def region(self, state: ConcreteState) -> StateRegion:
        return StateRegion(state.location, clock_region(state.valuation, self.automaton.clocks, self.bounds))

    def options(self, r: StateRegion):
        if r in self.cache:
            return self.cache[r]
        a = self.automaton
        chain, cyc = delay_chain(r.clocks, a.invariant(r.location))
        opts = []
        for i, cr in enumerate(chain):
            if i > 0 and StateRegion(r.location, cr) in self.divergent:
                opts.append((i, None))
            for e in a.outgoing(r.location):
                edge = a.edges[e]
                if satisfies(cr, edge.guard):
                    after = apply_reset(cr, edge.resets)
                    if satisfies(after, a.invariant(edge.target)) and StateRegion(edge.target, after) in self.divergent:
                        opts.append((i, edge.action))
        if cyc is not None:
            opts.append((len(chain) - 1, "long"))
        self.cache[r] = (chain, cyc, opts)
        return self.cache[r]


def sample_runs(automaton: TimedAutomaton, count: int, horizon, seed: int) -> list[Run]:
    """Random runs choosing uniformly among region-level options.

    Each run is extended until the global clock reaches ``horizon``. Options
    that lead to regions with no time-divergent continuation are never taken.
    On a terminal delay cycle one extra option delays a random number of
    whole time units.
    """
    horizon = Fraction(horizon)
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    sampler = _Sampler(automaton)
    if sampler.graph.initial not in sampler.divergent:
        raise DeadlockError(f"no time-divergent continuation from {sampler.graph.initial.encode()}")
    rng = random.Random(seed)
    units = max(1, math.ceil(horizon))
    runs = []
    for _ in range(count):
        state = initial_state(automaton)
        run = Run([state])
        while state.valuation[GAMMA] < horizon:
            r = sampler.region(state)
            chain, cyc, opts = sampler.options(r)
            if not opts:
                raise DeadlockError(f"no time-divergent continuation from {r.encode()}")
            target, action = rng.choice(opts)
            extra = 0
            if action == "long":
                action, extra = None, rng.randint(1, units)
            delay = realize_delay(state.valuation, chain, target, cyc, extra)
            move = Move(delay, action)
            state = apply_move(automaton, state, move)
            run.moves.append(move)
            run.states.append(state)
        runs.append(run)
    return runs


# Serialization -------------------------------------------------------------

def _q(x: Fraction) -> str:
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


def run_to_json(run: Run) -> str:
    data = {
        "states": [{"location": s.location, "valuation": {c: _q(v) for c, v in s.valuation.items()}}
                   for s in run.states],
        "moves": [{"delay": _q(m.delay), "action": m.action} for m in run.moves],
    }
    if run.blame:
        data["blame"] = list(run.blame)
    return json.dumps(data, indent=1)


def run_from_json(text: str) -> Run:
    data = json.loads(text)
    states = [ConcreteState(s["location"], {c: Fraction(v) for c, v in s["valuation"].items()})
              for s in data["states"]]
    moves = [Move(Fraction(m["delay"]), m["action"]) for m in data.get("moves", [])]
    return Run(states, moves, list(data.get("blame", [])))
