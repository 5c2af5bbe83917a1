"""Request-response families, their deterministic automata, and the tick/blame expansion."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Callable, Optional


@dataclass(frozen=True)
class RegionPredicate:
    """Membership by location, overridden by explicit region sets."""

    locations: frozenset = frozenset()
    added: frozenset = frozenset()
    removed: frozenset = frozenset()

    def __contains__(self, region) -> bool:
        if region in self.added:
            return True
        if region in self.removed:
            return False
        return region.location in self.locations

    def with_regions(self, add=frozenset(), remove=frozenset()) -> "RegionPredicate":
        add, remove = frozenset(add), frozenset(remove)
        return RegionPredicate(self.locations, (self.added - remove) | add, (self.removed - add) | remove)


@dataclass(frozen=True)
class ChainFamily:
    pairs: tuple  # (requests, responses), largest response set first
    labels: tuple = ()  # the odd priority behind each pair

    @property
    def r(self) -> int:
        return len(self.pairs)


def derive_chain_family(priorities, k: int) -> ChainFamily:
    locs = list(priorities.table)
    pairs, labels = [], []
    for j in range(priorities.D - 1, -1, -1):
        if j % 2 == 0:
            continue
        rq = frozenset(l for l in locs if priorities(l, k) == j)
        if not rq:
            # a pair nobody requests accepts every word
            continue
        rp = frozenset(l for l in locs if priorities(l, k) % 2 == 0 and priorities(l, k) <= j)
        pairs.append((RegionPredicate(rq), RegionPredicate(rp)))
        labels.append(j)
    return ChainFamily(tuple(pairs), tuple(labels))


def absorb_winning_regions(family: ChainFamily, regions) -> ChainFamily:
    regions = frozenset(regions)
    if not regions:
        return family
    pairs = tuple((rq.with_regions(remove=regions), rp.with_regions(add=regions)) for rq, rp in family.pairs)
    return ChainFamily(pairs, family.labels)


def rr_holds_on_lasso(family: ChainFamily, prefix: list, loop: list) -> bool:
    """Brute-force request-response check on the word prefix·loop^ω."""
    word = list(prefix) + list(loop)
    n = len(prefix)
    for rq, rp in family.pairs:
        answered_in_loop = any(a in rp for a in loop)
        for pos, a in enumerate(word):
            if a not in rq:
                continue
            if pos >= n:
                if not answered_in_loop:
                    return False
            elif not (answered_in_loop or any(b in rp for b in word[pos:])):
                return False
    return True


@dataclass
class DBA:
    """Deterministic automaton with state priorities; accepting means the
    least priority visited infinitely often is even."""

    states: list
    initial: object
    step: Callable
    priority: dict
    alphabet: str = "region"
    components: tuple = ()

    @property
    def D(self) -> int:
        return max(self.priority.values()) + 1 if self.priority else 1

    def run_lasso(self, prefix: list, loop: list) -> bool:
        if not loop:
            raise ValueError("loop must be non-empty")
        q = self.initial
        for a in prefix:
            q = self.step(q, a)
        seen: dict = {}
        trace = []
        while q not in seen:
            seen[q] = len(trace)
            for a in loop:
                q = self.step(q, a)
                trace.append(q)
        return min(self.priority[s] for s in trace[seen[q]:]) % 2 == 0

    def dump(self, letters: list, name: Callable = str) -> str:
        rows = [{"state": str(q), "priority": self.priority[q],
                 "next": {name(a): str(self.step(q, a)) for a in letters}} for q in self.states]
        return json.dumps({"initial": str(self.initial), "states": rows}, indent=1)


def chain_dba(family: ChainFamily) -> DBA:
    pairs = family.pairs
    r = len(pairs)

    def up(q: int, region) -> int:
        if q != 0 and region in pairs[q - 1][1]:
            return 0
        best = q
        for i in range(r, q, -1):
            if region in pairs[i - 1][0]:
                best = i
                break
        return best

    return DBA(list(range(r + 1)), 0, up, {q: (0 if q == 0 else 1) for q in range(r + 1)})


def intersect_dbas(machines: list) -> DBA:
    if not machines:
        raise ValueError("need at least one automaton")
    alphabets = {m.alphabet for m in machines}
    if len(alphabets) != 1:
        raise ValueError(f"alphabet mismatch: {sorted(alphabets)}")
    n = len(machines)
    accepting = [{q for q, p in m.priority.items() if p == 0} for m in machines]

    def step(state, a):
        qs, i = state
        nxt_i = (i + 1) % n if qs[i] in accepting[i] else i
        return tuple(m.step(q, a) for m, q in zip(machines, qs)), nxt_i

    states = [(qs, i) for qs in itertools.product(*(m.states for m in machines)) for i in range(n)]
    priority = {(qs, i): (0 if qs[i] in accepting[i] else 1) for qs, i in states}
    init = (tuple(m.initial for m in machines), 0)
    return DBA(states, init, step, priority, machines[0].alphabet, tuple(machines))


@dataclass(frozen=True)
class ExpandedState:
    q: object
    tick: bool
    blame: bool
    h: int


@dataclass
class ExpandedDPA:
    base: DBA
    D: int
    states: list = field(default_factory=list)

    @property
    def D_prime(self) -> int:
        return self.D if self.D % 2 == 1 else self.D - 1

    @property
    def initial(self) -> ExpandedState:
        return ExpandedState(self.base.initial, False, False, self.D - 1)

    def step(self, s: ExpandedState, letter) -> ExpandedState:
        region, tick, blame = letter
        q = self.base.step(s.q, region)
        p = self.base.priority[q]
        return ExpandedState(q, tick, blame, p if s.tick else min(s.h, p))

    def priority(self, s: ExpandedState) -> int:
        if s.tick:
            return s.h
        return self.D_prime if s.blame else self.D_prime + 1

    def entry(self, region) -> ExpandedState:
        """State after reading ``region`` fresh, with no tick and no blame."""
        return self.step(self.initial, (region, False, False))

    def run_lasso(self, prefix: list, loop: list) -> bool:
        s = self.initial
        for a in prefix:
            s = self.step(s, a)
        seen: dict = {}
        trace = []
        while s not in seen:
            seen[s] = len(trace)
            for a in loop:
                s = self.step(s, a)
                trace.append(s)
        return min(self.priority(x) for x in trace[seen[s]:]) % 2 == 0

    def dump(self) -> str:
        rows = [{"state": [str(s.q), s.tick, s.blame, s.h], "priority": self.priority(s)} for s in self.states]
        return json.dumps({"D": self.D, "D_prime": self.D_prime, "states": rows}, indent=1)


def expand_condition(machine: DBA, D: Optional[int] = None) -> ExpandedDPA:
    D = D if D is not None else max(2, machine.D)
    states = [ExpandedState(q, t, b, h) for q in machine.states for t in (False, True)
              for b in (False, True) for h in range(D)]
    return ExpandedDPA(machine, D, states)
