"""Timed automata, priority functions and timed games."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional

GAMMA = "gamma"

OPS = ("<", "<=", ">=", ">")
PRETTY = {"<": "<", "<=": "≤", ">=": "≥", ">": ">"}


@dataclass(frozen=True, order=True)
class Atom:
    clock: str
    op: str
    bound: int

    def holds(self, value) -> bool:
        if self.op == "<":
            return value < self.bound
        if self.op == "<=":
            return value <= self.bound
        if self.op == ">=":
            return value >= self.bound
        return value > self.bound


# A constraint is a conjunction of atoms; the empty tuple means true.
Constraint = tuple


def constraint(*atoms: Atom) -> Constraint:
    return tuple(sorted(set(atoms)))


def eq(clock: str, bound: int) -> Constraint:
    return constraint(Atom(clock, ">=", bound), Atom(clock, "<=", bound))


def holds(c: Constraint, valuation: Mapping) -> bool:
    return all(a.holds(valuation[a.clock]) for a in c)


def format_constraint(c: Constraint, pretty: bool = False) -> str:
    if not c:
        return "true"
    ops = PRETTY if pretty else {o: o for o in OPS}
    sep = " ∧ " if pretty else " && "
    join = "" if pretty else " "
    return sep.join(f"{a.clock}{join}{ops[a.op]}{join}{a.bound}" for a in c)


def interval_satisfiable(atoms) -> bool:
    """Integer-bounded box satisfiability of a conjunction over independent clocks."""
    lo: dict[str, tuple[int, bool]] = {}
    hi: dict[str, tuple[int, bool]] = {}
    for a in atoms:
        if a.op in (">", ">="):
            cur = lo.get(a.clock, (0, False))
            cand = (a.bound, a.op == ">")
            if cand > cur:
                lo[a.clock] = cand
        else:
            cand = (a.bound, a.op == "<")
            cur = hi.get(a.clock)
            if cur is None or (cand[0], not cand[1]) < (cur[0], not cur[1]):
                hi[a.clock] = cand
    for clock, (ub, ustrict) in hi.items():
        lb, lstrict = lo.get(clock, (0, False))
        if lb > ub or (lb == ub and (lstrict or ustrict)):
            return False
    return True


@dataclass(frozen=True)
class Edge:
    source: str
    guard: Constraint
    action: str
    resets: frozenset
    target: str

    def sort_key(self):
        return (self.source, self.action, self.target, self.guard, tuple(sorted(self.resets)))


@dataclass(frozen=True)
class TimedAutomaton:
    """Locations, clocks (the global clock included) and edges.

    Locations and edges are kept in canonical order so that edge indices are
    stable across parse/render round trips.
    """

    locations: tuple
    initial: str
    clocks: tuple
    actions: frozenset
    invariants: Mapping[str, Constraint]
    edges: tuple

    def __post_init__(self):
        clocks = tuple(c for c in self.clocks if c != GAMMA) + (GAMMA,)
        object.__setattr__(self, "clocks", clocks)
        object.__setattr__(self, "locations", tuple(sorted(set(self.locations))))
        object.__setattr__(self, "edges", tuple(sorted(self.edges, key=Edge.sort_key)))
        object.__setattr__(self, "actions", frozenset(self.actions) | {e.action for e in self.edges})
        inv = {loc: tuple(self.invariants.get(loc, ())) for loc in self.locations}
        for loc, c in self.invariants.items():
            inv.setdefault(loc, tuple(c))
        object.__setattr__(self, "invariants", inv)
        object.__setattr__(self, "_out", None)

    def invariant(self, location: str) -> Constraint:
        return self.invariants.get(location, ())

    def outgoing(self, location: str) -> list[int]:
        if self._out is None:
            out: dict[str, list[int]] = {}
            for i, e in enumerate(self.edges):
                out.setdefault(e.source, []).append(i)
            object.__setattr__(self, "_out", out)
        return self._out.get(location, [])

    def constraints(self):
        yield from self.invariants.values()
        for e in self.edges:
            yield e.guard


@dataclass(frozen=True)
class PriorityFunction:
    table: Mapping[str, tuple]
    count: Optional[int] = None

    @property
    def dimensions(self) -> int:
        return max((len(v) for v in self.table.values()), default=1)

    @property
    def D(self) -> int:
        if self.count is not None:
            return self.count
        return max((max(v) for v in self.table.values() if v), default=0) + 1

    def __call__(self, location: str, k: int = 0) -> int:
        return self.table[location][k]


@dataclass(frozen=True)
class TimedGame:
    automaton: TimedAutomaton
    p1_actions: frozenset
    p2_actions: frozenset = field(default_factory=frozenset)

    def owner(self, edge_index: int) -> int:
        return 1 if self.automaton.edges[edge_index].action in self.p1_actions else 2


@dataclass(frozen=True)
class Violation:
    ref: str
    message: str

    def __str__(self):
        return f"{self.ref}: {self.message}"


def max_constant(automaton: TimedAutomaton, clock: str) -> int:
    if clock not in automaton.clocks:
        raise KeyError(f"unknown clock {clock}")
    return max((a.bound for c in automaton.constraints() for a in c if a.clock == clock), default=0)


def max_constants(automaton: TimedAutomaton) -> dict[str, int]:
    bounds = {c: 0 for c in automaton.clocks}
    for c in automaton.constraints():
        for a in c:
            if a.clock in bounds and a.bound > bounds[a.clock]:
                bounds[a.clock] = a.bound
    return bounds


def validate_model(automaton: TimedAutomaton, priorities: Optional[PriorityFunction] = None,
                   partition: Optional[tuple] = None) -> list[Violation]:
    out: list[Violation] = []
    locs = set(automaton.locations)
    clocks = set(automaton.clocks)

    def check_constraint(ref, c):
        for a in c:
            if a.clock not in clocks:
                out.append(Violation(ref, f"unknown clock {a.clock}"))
            if a.op not in OPS:
                out.append(Violation(ref, f"unknown relation {a.op}"))
            if not isinstance(a.bound, int) or a.bound < 0:
                out.append(Violation(ref, f"bound {a.bound} is not a natural number"))

    if automaton.initial not in locs:
        out.append(Violation("init", f"unknown location {automaton.initial}"))
    for loc in sorted(automaton.invariants):
        if loc not in locs:
            out.append(Violation(f"location {loc}", f"unknown location {loc}"))
        check_constraint(f"location {loc}", automaton.invariants[loc])
    zero = {c: 0 for c in automaton.clocks}
    if automaton.initial in locs and not holds(automaton.invariant(automaton.initial), zero):
        out.append(Violation("init", "initial state violates its invariant"))

    for i, e in enumerate(automaton.edges):
        ref = f"edge {i} ({e.source} -> {e.target})"
        for end in (e.source, e.target):
            if end not in locs:
                out.append(Violation(ref, f"unknown location {end}"))
        check_constraint(ref, e.guard)
        if GAMMA in e.resets:
            out.append(Violation(ref, "global clock reset"))
        for c in sorted(e.resets - clocks):
            out.append(Violation(ref, f"unknown clock {c}"))

    seen = set()
    for i, e in enumerate(automaton.edges):
        for j in range(i + 1, len(automaton.edges)):
            f = automaton.edges[j]
            if e.source == f.source and e.action == f.action and interval_satisfiable(e.guard + f.guard):
                key = (e.source, e.action)
                if key not in seen:
                    seen.add(key)
                    out.append(Violation(f"location {e.source}", f"nondeterministic action {e.action}"))

    if priorities is not None:
        K = priorities.dimensions
        D = priorities.D
        for loc in automaton.locations:
            vec = priorities.table.get(loc)
            if vec is None:
                out.append(Violation(f"location {loc}", "missing priority"))
                continue
            if len(vec) != K:
                out.append(Violation(f"location {loc}", f"priority vector has {len(vec)} entries, expected {K}"))
            for p in vec:
                if not isinstance(p, int) or p < 0 or p >= D:
                    out.append(Violation(f"location {loc}", f"priority {p} outside 0..{D - 1}"))
        for loc in sorted(set(priorities.table) - locs):
            out.append(Violation(f"priority {loc}", f"unknown location {loc}"))

    if partition is not None:
        p1, p2 = (frozenset(s) for s in partition)
        for a in sorted(p1 & p2):
            out.append(Violation(f"action {a}", "action owned by both players"))
        for a in sorted(automaton.actions - (p1 | p2)):
            out.append(Violation(f"action {a}", "action owned by no player"))
        for a in sorted((p1 | p2) - automaton.actions):
            out.append(Violation(f"action {a}", "unknown action"))
    return out
