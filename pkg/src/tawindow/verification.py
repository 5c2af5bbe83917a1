"""Deciding direct and indirect bounded window objectives on all time-divergent paths."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Callable, Optional

import networkx as nx

from .modelformat import ModelBundle
from .monitor import Move, Run, apply_move, initial_state, realize_delay
from .regions import DELAY, RegionGraph, StateRegion, build_region_graph, clock_region, gamma_integral

DIRECT = "direct"
INDIRECT = "indirect"


@dataclass(frozen=True)
class RegionPath:
    regions: tuple
    kinds: tuple = ()  # one entry per step: DELAY or an edge index

    def __len__(self):
        return len(self.regions)

    def then(self, other: "RegionPath") -> "RegionPath":
        assert self.regions[-1] == other.regions[0]
        return RegionPath(self.regions + other.regions[1:], self.kinds + other.kinds)


@dataclass(frozen=True)
class ViolationWitness:
    dimension: int
    anchor: StateRegion
    lead: RegionPath  # initial region to the anchor
    stem: RegionPath  # anchor to the cycle entry, running minimum odd throughout
    cycle: RegionPath  # closed path through a γ-integral and a γ-fractional region
    integral_at: int
    fractional_at: int
    min_priority: int
    back: Optional[RegionPath] = None  # cycle entry back to the anchor (indirect only)

    def prefix_regions(self) -> tuple:
        return self.lead.then(self.stem).regions


@dataclass(frozen=True)
class Verdict:
    mode: str
    results: tuple  # per dimension: None (holds) or a ViolationWitness

    @property
    def holds(self) -> bool:
        return all(w is None for w in self.results)

    def first_witness(self) -> Optional[ViolationWitness]:
        return next((w for w in self.results if w is not None), None)


def _bfs_path(graph: RegionGraph, start, goal: Callable, allowed: Optional[set] = None) -> Optional[RegionPath]:
    parent = {start: None}
    queue = deque([start])
    while queue:
        r = queue.popleft()
        if goal(r):
            regions, kinds = [r], []
            while parent[r] is not None:
                r, kind = parent[r]
                regions.append(r)
                kinds.append(kind)
            return RegionPath(tuple(reversed(regions)), tuple(reversed(kinds)))
        for kind, t in graph.successors(r):
            if t not in parent and (allowed is None or t in allowed):
                parent[t] = (r, kind)
                queue.append(t)
    return None


def ordered_target_reach(graph: RegionGraph, priorities, k: int, start: StateRegion,
                         targets: list) -> Optional[RegionPath]:
    """Path from ``start`` visiting ``targets`` in order, every prefix having an odd minimum."""
    preds = [t if callable(t) else (lambda r, t=t: r == t) for t in targets]
    m0 = priorities(start.location, k)
    if m0 % 2 == 0:
        return None

    def advance(stage, r):
        while stage < len(preds) and preds[stage](r):
            stage += 1
        return stage

    node = (start, m0, advance(0, start))
    parent = {node: None}
    queue = deque([node])
    while queue:
        node = queue.popleft()
        r, m, stage = node
        if stage == len(preds):
            regions, kinds = [r], []
            while parent[node] is not None:
                node, kind = parent[node]
                regions.append(node[0])
                kinds.append(kind)
            return RegionPath(tuple(reversed(regions)), tuple(reversed(kinds)))
        for kind, t in graph.successors(r):
            m2 = min(m, priorities(t.location, k))
            if m2 % 2 == 0:
                continue
            nxt = (t, m2, advance(stage, t))
            if nxt not in parent:
                parent[nxt] = (node, kind)
                queue.append(nxt)
    return None


class _Product:
    """Region graph paired with an odd running minimum, restricted to a region set."""

    def __init__(self, graph: RegionGraph, priorities, k: int, seeds: list, allowed: set):
        self.graph, self.priorities, self.k = graph, priorities, k
        self.g = nx.DiGraph()
        self.kind: dict = {}
        queue = deque()
        for r in seeds:
            node = (r, priorities(r.location, k))
            if node not in self.g:
                self.g.add_node(node)
                queue.append(node)
        while queue:
            node = queue.popleft()
            r, m = node
            for kind, t in graph.successors(r):
                if t not in allowed:
                    continue
                m2 = min(m, priorities(t.location, k))
                if m2 % 2 == 0:
                    continue
                nxt = (t, m2)
                if nxt not in self.g:
                    self.g.add_node(nxt)
                    queue.append(nxt)
                if not self.g.has_edge(node, nxt):
                    self.g.add_edge(node, nxt)
                    self.kind[node, nxt] = kind
        self.qualifying = []
        for comp in nx.strongly_connected_components(self.g):
            has_edge = len(comp) > 1 or any(self.g.has_edge(n, n) for n in comp)
            parities = {gamma_integral(r) for r, _ in comp}
            if has_edge and len(parities) == 2:
                self.qualifying.append(comp)
        self.good = set()
        for comp in self.qualifying:
            self.good |= comp
        for comp in self.qualifying:
            self.good |= nx.ancestors(self.g, next(iter(comp)))

    def path(self, start, goal: Callable, within: Optional[set] = None) -> RegionPath:
        parent = {start: None}
        queue = deque([start])
        while queue:
            node = queue.popleft()
            if goal(node):
                regions, kinds = [node[0]], []
                while parent[node] is not None:
                    prev = parent[node]
                    kinds.append(self.kind[prev, node])
                    node = prev
                    regions.append(node[0])
                return RegionPath(tuple(reversed(regions)), tuple(reversed(kinds)))
            for nxt in self.g.successors(node):
                if nxt not in parent and (within is None or nxt in within):
                    parent[nxt] = node
                    queue.append(nxt)
        raise AssertionError("product path expected to exist")

    def lasso(self, seed):
        comp = next(c for c in self.qualifying if self._reaches(seed, c))
        stem = self.path(seed, lambda n: n in comp and gamma_integral(n[0]))
        entry = (stem.regions[-1], self._min_along(seed, stem))
        frac = self.path(entry, lambda n: not gamma_integral(n[0]), comp)
        frac_node = (frac.regions[-1], entry[1])
        home = self.path(frac_node, lambda n: n == entry, comp)
        cycle = frac.then(home)
        return stem, cycle, len(frac) - 1, entry[1]

    def _reaches(self, seed, comp) -> bool:
        probe = next(iter(comp))
        return seed == probe or seed in comp or nx.has_path(self.g, seed, probe)

    def _min_along(self, seed, path: RegionPath) -> int:
        m = seed[1]
        for r in path.regions:
            m = min(m, self.priorities(r.location, self.k))
        return m


def _region_sccs(graph: RegionGraph) -> list[set]:
    g = nx.DiGraph()
    g.add_nodes_from(graph.vertices)
    g.add_edges_from((s, t) for s, _, t in graph.edges)
    return [c for c in nx.strongly_connected_components(g)]


def _anchors(graph: RegionGraph, priorities, k: int) -> list:
    return [r for r in graph.vertices if priorities(r.location, k) % 2 == 1]


def _lead(graph: RegionGraph, anchor) -> RegionPath:
    return _bfs_path(graph, graph.initial, lambda r: r == anchor)


def find_direct_violation(graph: RegionGraph, priorities, k: int) -> Optional[ViolationWitness]:
    anchors = _anchors(graph, priorities, k)
    if not anchors:
        return None
    product = _Product(graph, priorities, k, anchors, set(graph.vertices))
    for r1 in anchors:
        seed = (r1, priorities(r1.location, k))
        if seed in product.good:
            stem, cycle, frac_at, m = product.lasso(seed)
            return ViolationWitness(k, r1, _lead(graph, r1), stem, cycle, 0, frac_at, m)
    return None


def find_indirect_violation(graph: RegionGraph, priorities, k: int) -> Optional[ViolationWitness]:
    anchors = set(_anchors(graph, priorities, k))
    if not anchors:
        return None
    order = {r: i for i, r in enumerate(graph.vertices)}
    found = []
    for comp in _region_sccs(graph):
        seeds = sorted((r for r in comp if r in anchors), key=order.__getitem__)
        if not seeds:
            continue
        product = _Product(graph, priorities, k, seeds, comp)
        for r1 in seeds:
            seed = (r1, priorities(r1.location, k))
            if seed in product.good:
                found.append((order[r1], r1, product))
                break
    if not found:
        return None
    _, r1, product = min(found, key=lambda x: x[0])
    seed = (r1, priorities(r1.location, k))
    stem, cycle, frac_at, m = product.lasso(seed)
    back = _bfs_path(graph, stem.regions[-1], lambda r: r == r1)
    return ViolationWitness(k, r1, _lead(graph, r1), stem, cycle, 0, frac_at, m, back)


def verify(bundle: ModelBundle, mode: str = DIRECT, graph: Optional[RegionGraph] = None) -> Verdict:
    if mode not in (DIRECT, INDIRECT):
        raise ValueError(f"unknown mode {mode}")
    graph = graph or build_region_graph(bundle.automaton)
    finder = find_direct_violation if mode == DIRECT else find_indirect_violation
    return Verdict(mode, tuple(finder(graph, bundle.priorities, k) for k in range(bundle.priorities.dimensions)))


@dataclass
class RealizedRun:
    run: Run
    anchor_index: int
    stage_starts: list  # state index at which each stage leaves the anchor


def _follow(automaton, run: Run, path: RegionPath, bounds: tuple):
    state = run.states[-1]
    clocks = automaton.clocks
    for i, kind in enumerate(path.kinds):
        cur, nxt = path.regions[i], path.regions[i + 1]
        if StateRegion(state.location, clock_region(state.valuation, clocks, bounds)) != cur:
            raise ValueError("witness inconsistent with graph")
        if kind is DELAY:
            move = Move(realize_delay(state.valuation, [cur.clocks, nxt.clocks], 1), None)
        else:
            move = Move(0, automaton.edges[kind].action)
        state = apply_move(automaton, state, move)
        if StateRegion(state.location, clock_region(state.valuation, clocks, bounds)) != nxt:
            raise ValueError("witness inconsistent with graph")
        run.moves.append(move)
        run.states.append(state)


def realize_witness(bundle: ModelBundle, witness: ViolationWitness, stages: int,
                    mode: Optional[str] = None) -> RealizedRun:
    """Concrete run following the witness.

    Direct: reach the anchor, follow the stem, then repeat the cycle ``stages``
    times. Indirect: stage n follows the stem, repeats the cycle n+1 times and
    returns to the anchor.
    """
    automaton = bundle.automaton
    mode = mode or (INDIRECT if witness.back is not None else DIRECT)
    bounds = witness.anchor.clocks.bounds
    run = Run([initial_state(automaton)])
    _follow(automaton, run, witness.lead, bounds)
    anchor_index = len(run.states) - 1
    starts = []
    if mode == DIRECT:
        starts.append(anchor_index)
        _follow(automaton, run, witness.stem, bounds)
        for _ in range(stages):
            _follow(automaton, run, witness.cycle, bounds)
    else:
        if witness.back is None:
            raise ValueError("indirect realization needs a return path")
        for n in range(1, stages + 1):
            starts.append(len(run.states) - 1)
            _follow(automaton, run, witness.stem, bounds)
            for _ in range(n + 1):
                _follow(automaton, run, witness.cycle, bounds)
            _follow(automaton, run, witness.back, bounds)
    return RealizedRun(run, anchor_index, starts)
