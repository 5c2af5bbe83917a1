import json
import random
from fractions import Fraction as F

import pytest

from conftest import load_fixture
from oracles import grid_time_successor, random_valuation
from tawindow.arena import AbstractMove
from tawindow.model import GAMMA
from tawindow.monitor import Broken, ConcreteState, apply_move, window_statuses
from tawindow.regions import StateRegion, clock_region, gamma_integral, region_of
from tawindow.strategy import (
    ArenaAdversary, LayeredMealy, LosingRegionError, MealyTable, RandomAdversary, Script, convergent_tail_blameless,
    realize_move, simulate, start_state,
)
from tawindow.windowgame import solve_direct, solve_indirect


def broken_windows(run, bundle, lam, start=0):
    return sum(isinstance(s, Broken) for k in range(bundle.priorities.dimensions)
               for s in window_statuses(run, bundle.priorities, k, lam)[start:])


def test_memory_size(fig1):
    m = solve_direct(fig1).strategy
    assert len(m.memory_states()) == 2 * len(m.condition.base.states) * m.D
    assert len(set(m.memory_states())) == len(m.memory_states())
    assert m.initial().h == m.D - 1 and m.initial().integral


def test_all_even_machine_only_delays():
    bundle = load_fixture("trivial_even")
    sol = solve_direct(bundle)
    m = sol.strategy
    seen = 0
    for r in sol.winning_regions:
        for mem in m.memory_states():
            if not m.winning(mem, r):
                continue
            move = m.move(mem, r)
            assert move.edge is None
            assert move.target == max(x.target for x in m.table.moves(r))
            assert move.target > 0
            seen += 1
    assert seen >= len(sol.winning_regions)


def test_fig1_requests_answered(fig1):
    sol = solve_direct(fig1)
    for seed in range(20):
        run = simulate(fig1.game, sol.strategy, RandomAdversary(seed), 40)
        assert run.states[-1].valuation[GAMMA] >= 40
        statuses = window_statuses(run, fig1.priorities, 0, sol.lambda_bound)
        assert not any(isinstance(s, Broken) for s in statuses)
        # every visit to l0 is followed by l2 within two time units
        for i, s in enumerate(run.states):
            if s.location == "l0":
                later = [t for t in run.states[i:] if t.location == "l2"]
                if later:
                    assert later[0].valuation[GAMMA] - s.valuation[GAMMA] <= 2
                else:
                    assert run.states[-1].valuation[GAMMA] - s.valuation[GAMMA] < 2


def test_realize_move_examples(fig1):
    table = solve_direct(fig1).strategy.table
    s = ConcreteState("l1", {"x": F(1, 3), GAMMA: F(2)})
    assert realize_move(table, AbstractMove(0, None), s).delay == 0
    assert realize_move(table, AbstractMove(1, None), s).delay == F(1, 2) * (1 - F(1, 3))
    assert realize_move(table, AbstractMove(0, 0 + 1), s).action == "a"


def _random_states(bundle, rng, n):
    a = bundle.automaton
    clocks = a.clocks
    bounds = tuple(2 for _ in clocks)
    out = []
    while len(out) < n:
        loc = rng.choice(a.locations)
        v = random_valuation(rng, clocks, bounds)
        s = ConcreteState(loc, v)
        try:
            apply_move(a, s, __import__("tawindow.monitor", fromlist=["Move"]).Move(0))
        except ValueError:
            continue
        out.append(s)
    return out


@pytest.mark.parametrize("name", ["fig1", "alarm", "pair"])
def test_realized_moves_land_in_target(name):
    bundle = load_fixture(name)
    table = solve_direct(bundle).strategy.table
    rng = random.Random(11)
    a = bundle.automaton
    checked = 0
    for s in _random_states(bundle, rng, 1000):
        r = region_of(a, s.location, s.valuation)
        moves = table.moves(r)
        if not moves:
            continue
        move = rng.choice(moves)
        for simplest in (False, True):
            nxt = apply_move(a, s, realize_move(table, move, s, simplest=simplest))
            assert region_of(a, nxt.location, nxt.valuation) == table.outcome(r, move)
        checked += 1
    assert checked == 1000


def _traversed(a, s, delay):
    """Regions visited while delaying ``delay`` from ``s``, by grid scanning."""
    seen = [region_of(a, s.location, s.valuation)]
    v, spent = dict(s.valuation), F(0)
    here = lambda w: region_of(a, s.location, w)
    while True:
        succ, t, _ = grid_time_successor(v, here)
        if spent + t > delay:
            return seen
        spent += t
        v = {x: q + t for x, q in v.items()}
        seen.append(succ)


def test_region_uniformity(fig1):
    a = fig1.automaton
    table = solve_direct(fig1).strategy.table
    rng = random.Random(3)
    states = _random_states(fig1, rng, 400)
    by_region: dict = {}
    for s in states:
        by_region.setdefault(region_of(a, s.location, s.valuation), []).append(s)
    pairs = 0
    for r, group in by_region.items():
        for s1, s2 in zip(group, group[1:]):
            for move in table.moves(r):
                m1, m2 = realize_move(table, move, s1), realize_move(table, move, s2)
                n1, n2 = apply_move(a, s1, m1), apply_move(a, s2, m2)
                assert region_of(a, n1.location, n1.valuation) == region_of(a, n2.location, n2.valuation)
                assert _traversed(a, s1, m1.delay) == _traversed(a, s2, m2.delay)
                pairs += 1
    assert pairs > 100


@pytest.mark.parametrize("name,mode", [("fig1", "direct"), ("settle", "indirect"), ("pingpong", "direct")])
def test_tick_inference_and_determinism(name, mode):
    bundle = load_fixture(name)
    sol = solve_direct(bundle) if mode == "direct" else solve_indirect(bundle)
    for seed in range(10):
        run = simulate(bundle.game, sol.strategy, RandomAdversary(seed), 30)
        again = simulate(bundle.game, sol.strategy, RandomAdversary(seed), 30)
        assert run.states == again.states and run.moves == again.moves
        regions = run.regions + [region_of(bundle.automaton, run.states[-1].location, run.states[-1].valuation)]
        for i, tick in enumerate(run.ticks):
            assert tick == (not gamma_integral(regions[i]) and gamma_integral(regions[i + 1]))


def test_layers_never_climb():
    bundle = load_fixture("settle")
    sol = solve_indirect(bundle)
    strat = sol.strategy
    for seed in range(500):
        run = simulate(bundle.game, strat, RandomAdversary(seed, pass_rate=0.3), 6)
        layers = [strat.layer_of(r) for r in run.regions]
        assert None not in layers
        assert all(b <= a for a, b in zip(layers, layers[1:]))


def test_single_layer_is_its_base(fig1):
    sol = solve_direct(fig1)
    layered = LayeredMealy([(sol.winning_regions, sol.strategy)])
    run = simulate(fig1.game, sol.strategy, RandomAdversary(4), 20)
    lrun = simulate(fig1.game, layered, RandomAdversary(4), 20)
    assert run.states == lrun.states
    # the layered machine picks its layer, and so its memory, on the first step
    assert [m for m, _ in lrun.memory[1:]] == run.memory[1:]


def test_lower_layer_resets_memory():
    bundle = load_fixture("settle")
    strat = solve_indirect(bundle).strategy
    low, high = strat.layers[0][0], strat.layers[1][0]
    outer = next(r for r in high if r not in low)
    inner = next(iter(low))
    mem, _, _ = strat.step(strat.initial(), outer)
    assert mem[1] == 1
    (m2, k), _, _ = strat.step(mem, inner)
    expected, _, _ = strat.layers[0][1].step(strat.layers[0][1].initial(), inner)
    assert k == 0 and m2 == expected


def test_losing_region_raises():
    bundle = load_fixture("fig1_p2")
    sol = solve_direct(bundle)
    losing = next(r for r in sol.layers[0][1].arena.entries if r not in sol.winning_regions)
    with pytest.raises(LosingRegionError):
        sol.strategy.step(sol.strategy.initial(), losing)


@pytest.mark.parametrize("name", ["pair", "twodim"])
def test_large_fixture_soundness(name):
    bundle = load_fixture(name)
    sol = solve_direct(bundle)
    assert sol.initial_winning
    for seed in range(3):
        run = simulate(bundle.game, sol.strategy, RandomAdversary(seed), 3 * sol.lambda_bound)
        assert broken_windows(run, bundle, sol.lambda_bound) == 0
        assert convergent_tail_blameless(run)


def test_fig1_opponent_complement():
    bundle = load_fixture("fig1_p2")
    sol = solve_direct(bundle)
    rr = sol.layers[0][1]
    adversary = ArenaAdversary(rr.arena, rr.parity)
    losing = sorted((r for r in rr.arena.entries if r not in sol.winning_regions), key=lambda r: r.encode())
    assert losing
    for r in losing:
        run = simulate(bundle.game, sol.strategy.relaxed(), adversary, 2 * sol.lambda_bound, start=start_state(r),
                       max_steps=5000)
        assert broken_windows(run, bundle, sol.lambda_bound) > 0 or not convergent_tail_blameless(run)


def test_script_adversary(fig1):
    bundle = load_fixture("fig1_p2")
    sol = solve_indirect(load_fixture("fig1"))
    with pytest.raises(ValueError):
        simulate(fig1.game, sol.strategy, Script([("zz", 0)]), 3)
    run = simulate(fig1.game, sol.strategy, Script(["pass"] * 4), 3)
    assert run.states[-1].valuation[GAMMA] >= 3
    assert bundle.game.p2_actions == {"a"}


def test_mealy_table_replay(fig1):
    sol = solve_direct(fig1)
    text = json.dumps(sol.strategy.to_table())
    replay = MealyTable.from_json(text, fig1.game)
    for seed in range(5):
        one = simulate(fig1.game, sol.strategy, RandomAdversary(seed), 15)
        two = simulate(fig1.game, replay, RandomAdversary(seed), 15)
        assert one.states == two.states
    with pytest.raises(ValueError):
        MealyTable.from_json(json.dumps(solve_indirect(fig1).strategy.to_table()), fig1.game)
