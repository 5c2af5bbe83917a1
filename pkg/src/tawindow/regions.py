"""Clock regions, region operations and the region graph.

A clock region records, per clock, either its integer part (while the clock
is at most its maximal constant) or ``None`` for "above", together with an
ordered list of fraction blocks. Block 0 holds the clocks with zero
fractional part; later blocks are listed by increasing fractional part. The
global clock always sits in some block, even once it is above its constant.
"""

from __future__ import annotations

import itertools
import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Optional

from .model import GAMMA, Constraint, TimedAutomaton, max_constants


class RegionGranularityError(ValueError):
    pass


@dataclass(frozen=True, slots=True)
class ClockRegion:
    clocks: tuple
    bounds: tuple
    ints: tuple  # integer part per clock, None when above the bound
    blocks: tuple  # tuple of frozensets; blocks[0] is the zero-fraction block

    def index(self, clock: str) -> int:
        return self.clocks.index(clock)

    def interval(self, clock: str) -> Optional[int]:
        return self.ints[self.clocks.index(clock)]

    def integral(self, clock: str) -> bool:
        return clock in self.blocks[0]

    def tracked(self) -> frozenset:
        return frozenset().union(*self.blocks)

    def encode(self) -> str:
        parts = []
        for x, k in zip(self.clocks, self.ints):
            if k is None:
                parts.append(f"{x}:above")
            elif x in self.blocks[0]:
                parts.append(f"{x}:{k}")
            else:
                parts.append(f"{x}:{k}+")
        order = {c: i for i, c in enumerate(self.clocks)}
        frac = "".join(
            f"({i}:{{{','.join(sorted(b, key=order.__getitem__))}}})" for i, b in enumerate(self.blocks)
        )
        return " / ".join(parts) + "|frac:" + frac


@dataclass(frozen=True, slots=True)
class StateRegion:
    location: str
    clocks: ClockRegion

    def encode(self) -> str:
        return f"{self.location}|{self.clocks.encode()}"

    def __str__(self):
        return self.encode()


def clock_region(valuation: Mapping, clocks: tuple, bounds: tuple) -> ClockRegion:
    ints = []
    fracs: dict = {}
    for x, c in zip(clocks, bounds):
        v = valuation[x]
        if not isinstance(v, Fraction):
            v = Fraction(v)
        num, den = v.numerator, v.denominator
        if num < 0:
            raise ValueError(f"negative value for clock {x}")
        k, rem = divmod(num, den)
        if k > c or (k == c and rem):
            ints.append(None)
            if x != GAMMA:
                continue
        else:
            ints.append(k)
        key = (rem, den) if rem else (0, 1)
        group = fracs.get(key)
        if group is None:
            fracs[key] = [x]
        else:
            group.append(x)
    zero = frozenset(fracs.pop((0, 1), ()))
    if len(fracs) > 1:
        rest = tuple(frozenset(fracs[f]) for f in sorted(fracs, key=lambda f: Fraction(*f)))
    else:
        rest = tuple(frozenset(g) for g in fracs.values())
    return ClockRegion(clocks, bounds, tuple(ints), (zero,) + rest)


def region_of(automaton: TimedAutomaton, location: str, valuation: Mapping) -> StateRegion:
    bounds = max_constants(automaton)
    return StateRegion(location, clock_region(valuation, automaton.clocks, tuple(bounds[x] for x in automaton.clocks)))


def satisfies(region, constraint: Constraint, bounds: Optional[Mapping] = None) -> bool:
    if isinstance(region, StateRegion):
        region = region.clocks
    zero = region.blocks[0]
    for a in constraint:
        i = region.clocks.index(a.clock)
        limit = bounds[a.clock] if bounds is not None else region.bounds[i]
        if a.bound > limit:
            raise RegionGranularityError(
                f"constant exceeds region granularity: {a.clock} {a.op} {a.bound} with c_{a.clock}={limit}")
        k = region.ints[i]
        if k is None:
            ok = a.op in (">", ">=")
        elif a.clock in zero:
            ok = a.holds(k)
        elif a.op in ("<", "<="):
            ok = k + 1 <= a.bound
        else:
            ok = k >= a.bound
        if not ok:
            return False
    return True


def apply_reset(region: ClockRegion, resets) -> ClockRegion:
    resets = frozenset(resets)
    if GAMMA in resets:
        raise ValueError("the global clock cannot be reset")
    if not resets:
        return region
    ints = tuple(0 if x in resets else k for x, k in zip(region.clocks, region.ints))
    zero = region.blocks[0] | resets
    rest = tuple(b - resets for b in region.blocks[1:])
    return ClockRegion(region.clocks, region.bounds, ints, (zero,) + tuple(b for b in rest if b))


def delay_successor(region: ClockRegion) -> ClockRegion:
    zero = region.blocks[0]
    ints = list(region.ints)
    if zero:
        moved = set()
        for x in zero:
            i = region.clocks.index(x)
            if ints[i] is not None and ints[i] == region.bounds[i]:
                ints[i] = None
                if x != GAMMA:
                    continue
            moved.add(x)
        blocks = (frozenset(),) + ((frozenset(moved),) if moved else ()) + region.blocks[1:]
    else:
        last = region.blocks[-1]
        for x in last:
            i = region.clocks.index(x)
            if ints[i] is not None:
                ints[i] += 1
        blocks = (last,) + region.blocks[1:-1]
    return ClockRegion(region.clocks, region.bounds, tuple(ints), blocks)


def delay_chain(region: ClockRegion, invariant: Constraint) -> tuple[list, Optional[int]]:
    chain = [region]
    seen = {region: 0}
    while True:
        nxt = delay_successor(chain[-1])
        if not satisfies(nxt, invariant):
            return chain, None
        if nxt in seen:
            return chain, seen[nxt]
        seen[nxt] = len(chain)
        chain.append(nxt)


def gamma_integral(region) -> bool:
    if isinstance(region, StateRegion):
        region = region.clocks
    return GAMMA in region.blocks[0]


def zero_region(automaton: TimedAutomaton) -> ClockRegion:
    bounds = max_constants(automaton)
    clocks = automaton.clocks
    return ClockRegion(clocks, tuple(bounds[x] for x in clocks), (0,) * len(clocks), (frozenset(clocks),))


DELAY = None  # edge kind of a delay step in the region graph


@dataclass
class RegionGraph:
    automaton: Optional[TimedAutomaton]
    initial: Optional[StateRegion]
    vertices: list = field(default_factory=list)
    edges: list = field(default_factory=list)  # (source, kind, target), kind DELAY or an edge index
    succ: dict = field(default_factory=dict)

    def __contains__(self, r) -> bool:
        return r in self.succ

    def __len__(self) -> int:
        return len(self.vertices)

    def successors(self, r) -> list:
        return self.succ.get(r, [])


def build_region_graph(automaton: TimedAutomaton) -> RegionGraph:
    init = StateRegion(automaton.initial, zero_region(automaton))
    graph = RegionGraph(automaton, init)
    queue = deque([init])
    graph.succ[init] = []
    graph.vertices.append(init)
    while queue:
        r = queue.popleft()
        out = []
        nxt = delay_successor(r.clocks)
        if satisfies(nxt, automaton.invariant(r.location)):
            out.append((DELAY, StateRegion(r.location, nxt)))
        for i in automaton.outgoing(r.location):
            e = automaton.edges[i]
            if satisfies(r.clocks, e.guard):
                after = apply_reset(r.clocks, e.resets)
                if satisfies(after, automaton.invariant(e.target)):
                    out.append((i, StateRegion(e.target, after)))
        for kind, t in out:
            graph.edges.append((r, kind, t))
            if t not in graph.succ:
                graph.succ[t] = []
                graph.vertices.append(t)
                queue.append(t)
        graph.succ[r] = out
    return graph


def _ordered_partitions(items: list):
    if not items:
        yield ()
        return
    for size in range(1, len(items) + 1):
        for first in itertools.combinations(items, size):
            rest = [x for x in items if x not in first]
            for tail in _ordered_partitions(rest):
                yield (frozenset(first),) + tail


def enumerate_clock_regions(clocks: tuple, bounds: tuple) -> list[ClockRegion]:
    """Every clock region over the given clocks, built combinatorially."""
    choices = []
    for x, c in zip(clocks, bounds):
        opts = [("int", k) for k in range(c + 1)] + [("frac", k) for k in range(c)]
        if x == GAMMA:
            opts += [("int", None), ("frac", None)]
        else:
            opts.append(("above", None))
        choices.append(opts)
    out = []
    for combo in itertools.product(*choices):
        ints = tuple(k for _, k in combo)
        zero = frozenset(x for x, (kind, _) in zip(clocks, combo) if kind == "int")
        fractional = [x for x, (kind, _) in zip(clocks, combo) if kind == "frac"]
        for blocks in _ordered_partitions(fractional):
            out.append(ClockRegion(clocks, bounds, ints, (zero,) + blocks))
    return out


def region_count(automaton: TimedAutomaton) -> int:
    bounds = max_constants(automaton)
    return len(enumerate_clock_regions(automaton.clocks, tuple(bounds[x] for x in automaton.clocks)))


def region_bound(automaton: TimedAutomaton) -> int:
    bounds = max_constants(automaton)
    n = len(automaton.clocks)
    return math.factorial(n) * 2 ** n * math.prod(2 * bounds[x] + 1 for x in automaton.clocks)


def representative(region) -> dict:
    """A concrete valuation inside the region."""
    if isinstance(region, StateRegion):
        region = region.clocks
    n = len(region.blocks)
    frac = {}
    for i, b in enumerate(region.blocks):
        for x in b:
            frac[x] = Fraction(i, n)
    val = {}
    for x, c, k in zip(region.clocks, region.bounds, region.ints):
        if k is not None:
            val[x] = k + frac[x]
        elif x in frac:
            val[x] = c + (frac[x] if frac[x] else 1)
        else:
            val[x] = Fraction(c + 1)
    return val
