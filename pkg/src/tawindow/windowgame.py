"""Solving bounded window games through request-response games on regions."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .arena import Arena, MoveTable, build_arena
from .automata import ChainFamily, absorb_winning_regions, chain_dba, derive_chain_family, expand_condition, intersect_dbas
from .model import Edge, PriorityFunction, TimedAutomaton, TimedGame
from .modelformat import ModelBundle
from .parity import ParitySolution, solve_parity
from .regions import RegionGraph, build_region_graph, region_count

DIRECT = "direct"
INDIRECT = "indirect"


def lambda_bound(automaton: TimedAutomaton, priorities: PriorityFunction, regions: Optional[int] = None) -> int:
    reg = region_count(automaton) if regions is None else regions
    K = priorities.dimensions
    return 8 * len(automaton.locations) * reg * (priorities.D // 2 + 1) ** K * K + 3


@dataclass
class RRSolution:
    winning: frozenset
    arena: Arena
    parity: ParitySolution

    @property
    def condition(self):
        return self.arena.condition


def solve_request_response(game: TimedGame, families: list, graph: Optional[RegionGraph] = None,
                           table: Optional[MoveTable] = None) -> RRSolution:
    """Winning regions of the conjunction of chain request-response objectives.

    A region counts as winning when player 1 wins from it with the objective
    automaton restarted there.
    """
    if isinstance(families, ChainFamily):
        families = [families]
    graph = graph or build_region_graph(game.automaton)
    machine = intersect_dbas([chain_dba(f) for f in families]) if families else chain_dba(ChainFamily(()))
    condition = expand_condition(machine)
    arena = build_arena(game, condition, list(graph.vertices), table, graph.initial)
    sol = solve_parity(arena.game)
    winning = frozenset(r for r, v in arena.entries.items() if v in sol.win1)
    return RRSolution(winning, arena, sol)


@dataclass
class GameSolution:
    mode: str
    winning_regions: frozenset
    lambda_bound: int
    initial: object
    layers: list = field(default_factory=list)  # indirect: (W^k, RRSolution) per iteration
    strategy: object = None

    @property
    def initial_winning(self) -> bool:
        return self.initial in self.winning_regions


def _families(priorities: PriorityFunction) -> list:
    return [derive_chain_family(priorities, k) for k in range(priorities.dimensions)]


def solve_direct(bundle: ModelBundle, graph: Optional[RegionGraph] = None) -> GameSolution:
    from .strategy import build_mealy

    game = bundle.game
    graph = graph or build_region_graph(game.automaton)
    rr = solve_request_response(game, _families(bundle.priorities), graph)
    return GameSolution(DIRECT, rr.winning, lambda_bound(game.automaton, bundle.priorities),
                        graph.initial, [(rr.winning, rr)], build_mealy(rr))


def solve_indirect(bundle: ModelBundle, graph: Optional[RegionGraph] = None) -> GameSolution:
    """Fixed point: solve, absorb the winning regions into every family, repeat."""
    from .strategy import build_mealy, layer_mealy

    game = bundle.game
    graph = graph or build_region_graph(game.automaton)
    table = MoveTable(game)
    base = _families(bundle.priorities)
    families = base
    previous: frozenset = frozenset()
    layers = []
    while True:
        rr = solve_request_response(game, families, graph, table)
        if not previous <= rr.winning:
            raise AssertionError("winning sets must not shrink between iterations")
        if rr.winning == previous:
            break
        layers.append((rr.winning, rr))
        previous = rr.winning
        families = [absorb_winning_regions(f, previous) for f in base]
    strategy = layer_mealy([(w, build_mealy(r)) for w, r in layers]) if layers else None
    return GameSolution(INDIRECT, previous, lambda_bound(game.automaton, bundle.priorities),
                        graph.initial, layers, strategy)


def solve(bundle: ModelBundle, mode: str = DIRECT) -> GameSolution:
    if mode == DIRECT:
        return solve_direct(bundle)
    if mode == INDIRECT:
        return solve_indirect(bundle)
    raise ValueError(f"unknown mode {mode}")


def safety_to_window(bundle: ModelBundle, unsafe) -> ModelBundle:
    """Window game equivalent to avoiding ``unsafe`` locations forever.

    Each location is paired with a flag remembering whether an unsafe
    location was seen; flagged copies get priority 1, the rest priority 0.
    """
    a = bundle.automaton
    unsafe = frozenset(unsafe)

    def name(loc, seen):
        return f"{loc}_bad" if seen else f"{loc}_ok"

    locs, inv, prio, edges = [], {}, {}, []
    for loc in a.locations:
        for seen in (False, True):
            if loc in unsafe and not seen:
                continue
            n = name(loc, seen)
            locs.append(n)
            inv[n] = a.invariant(loc)
            prio[n] = (1 if seen else 0,)
    for e in a.edges:
        for seen in (False, True):
            if e.source in unsafe and not seen:
                continue
            seen2 = seen or e.target in unsafe
            edges.append(Edge(name(e.source, seen), e.guard, e.action, e.resets, name(e.target, seen2)))
    automaton = TimedAutomaton(tuple(locs), name(a.initial, a.initial in unsafe), a.clocks, a.actions,
                               inv, tuple(edges))
    return ModelBundle(automaton, PriorityFunction(prio, 2), bundle.partition)
