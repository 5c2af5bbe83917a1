"""Text format for timed games with priorities, plus DOT and JSON exports.

Grammar (one declaration per statement, ``#`` starts a comment)::

    clocks x y;
    location l0 { invariant: x <= 1; priority: [1]; }
    edge l0 -> l1 { guard: x >= 1 && y < 2; action: a; reset: {x}; }
    init l0;
    player1: a;
    player2: b;
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import Optional

from .model import (
    GAMMA, Atom, Edge, PriorityFunction, TimedAutomaton, TimedGame, Violation, constraint,
    format_constraint, validate_model,
)


class ParseError(Exception):
    def __init__(self, line: int, column: int, expected: str, found: str):
        super().__init__(f"{line}:{column}: expected {expected}, found {found!r}")
        self.line = line
        self.column = column
        self.expected = expected
        self.found = found


class ModelError(Exception):
    def __init__(self, violations: list[Violation]):
        super().__init__("; ".join(str(v) for v in violations))
        self.violations = violations


@dataclass(frozen=True)
class ModelBundle:
    automaton: TimedAutomaton
    priorities: PriorityFunction
    partition: Optional[tuple] = None

    def validate(self) -> list[Violation]:
        return validate_model(self.automaton, self.priorities, self.partition)

    @property
    def game(self) -> TimedGame:
        if self.partition is None:
            return TimedGame(self.automaton, self.automaton.actions, frozenset())
        return TimedGame(self.automaton, frozenset(self.partition[0]), frozenset(self.partition[1]))


_TOKEN = re.compile(r"\s+|#[^\n]*|(?P<tok>->|&&|<=|>=|==|[<>;{}\[\],:]|\d+|[^\W\d]\w*)", re.UNICODE)


def _tokenize(text: str):
    tokens = []
    pos, line, col = 0, 1, 1
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(line, col, "a token", text[pos])
        tok = m.group("tok")
        if tok is not None:
            tokens.append((tok, line, col))
        chunk = m.group(0)
        nl = chunk.count("\n")
        if nl:
            line += nl
            col = len(chunk) - chunk.rfind("\n")
        else:
            col += len(chunk)
        pos = m.end()
    tokens.append(("", line, col))
    return tokens


def _is_ident(tok: str) -> bool:
    return bool(tok) and (tok[0].isalpha() or tok[0] == "_")


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self) -> str:
        return self.toks[self.i][0]

    def fail(self, expected: str):
        tok, line, col = self.toks[self.i]
        raise ParseError(line, col, expected, tok or "end of input")

    def take(self, expected: str) -> str:
        if self.peek() != expected:
            self.fail(f"'{expected}'")
        self.i += 1
        return expected

    def ident(self, what: str = "an identifier") -> str:
        tok = self.peek()
        if not _is_ident(tok):
            self.fail(what)
        self.i += 1
        return tok

    def number(self) -> int:
        tok = self.peek()
        if not tok.isdigit():
            self.fail("a natural number")
        self.i += 1
        return int(tok)

    def idents_until(self, stop: str) -> list[str]:
        out = []
        while self.peek() != stop:
            out.append(self.ident())
            if self.peek() == ",":
                self.i += 1
        self.take(stop)
        return out

    def constraint(self):
        if self.peek() == "true":
            self.i += 1
            return ()
        atoms = []
        while True:
            clock = self.ident("a clock name or 'true'")
            op = self.peek()
            if op not in ("<", "<=", ">=", ">", "=="):
                self.fail("a comparison operator")
            self.i += 1
            bound = self.number()
            if op == "==":
                atoms += [Atom(clock, ">=", bound), Atom(clock, "<=", bound)]
            else:
                atoms.append(Atom(clock, op, bound))
            if self.peek() != "&&":
                return constraint(*atoms)
            self.i += 1

    def body(self, fields: dict):
        self.take("{")
        seen = {}
        while self.peek() != "}":
            name = self.peek()
            if name not in fields:
                self.fail("one of " + ", ".join(fields) + " or '}'")
            self.i += 1
            self.take(":")
            seen[name] = fields[name]()
            self.take(";")
        self.take("}")
        return seen

    def reset_set(self):
        self.take("{")
        return frozenset(self.idents_until("}"))

    def priority_vector(self):
        self.take("[")
        out = []
        while self.peek() != "]":
            out.append(self.number())
            if self.peek() == ",":
                self.i += 1
            elif self.peek() != "]":
                self.fail("',' or ']'")
        self.take("]")
        return tuple(out)

    def parse(self) -> ModelBundle:
        clocks: list[str] = []
        locations, invariants, priorities = [], {}, {}
        edges = []
        init = None
        players: dict[int, list] = {}
        if self.peek() == "":
            self.fail("a declaration")
        while self.peek() != "":
            kw = self.peek()
            if kw == "clocks":
                self.i += 1
                clocks += self.idents_until(";")
            elif kw == "location":
                self.i += 1
                name = self.ident("a location name")
                b = self.body({"invariant": self.constraint, "priority": self.priority_vector})
                locations.append(name)
                invariants[name] = b.get("invariant", ())
                if "priority" in b:
                    priorities[name] = b["priority"]
            elif kw == "edge":
                self.i += 1
                src = self.ident("a location name")
                self.take("->")
                tgt = self.ident("a location name")
                b = self.body({"guard": self.constraint, "action": lambda: self.ident("an action name"),
                               "reset": self.reset_set})
                if "action" not in b:
                    self.i -= 1
                    self.fail("an action field")
                edges.append(Edge(src, b.get("guard", ()), b["action"], b.get("reset", frozenset()), tgt))
            elif kw == "init":
                self.i += 1
                init = self.ident("a location name")
                self.take(";")
            elif kw in ("player1", "player2"):
                self.i += 1
                self.take(":")
                players[1 if kw == "player1" else 2] = self.idents_until(";")
            else:
                self.fail("a declaration")
        if init is None:
            self.fail("an 'init' declaration")
        automaton = TimedAutomaton(
            locations=tuple(locations), initial=init, clocks=tuple(clocks),
            actions=frozenset(e.action for e in edges) | frozenset(a for v in players.values() for a in v),
            invariants=invariants, edges=tuple(edges))
        partition = None
        if players:
            partition = (frozenset(players.get(1, ())), frozenset(players.get(2, ())))
        return ModelBundle(automaton, PriorityFunction(priorities), partition)


def parse_model(text: str) -> ModelBundle:
    """Parse a model; raises ParseError on the first syntax error."""
    return _Parser(text).parse()


def load_model(text: str) -> ModelBundle:
    """Parse and validate; raises ModelError when the model is ill-formed."""
    bundle = parse_model(text)
    violations = bundle.validate()
    if violations:
        raise ModelError(violations)
    return bundle


def render_model(bundle: ModelBundle) -> str:
    a = bundle.automaton
    lines = []
    user_clocks = [c for c in a.clocks if c != GAMMA]
    if user_clocks:
        lines.append("clocks " + " ".join(user_clocks) + ";")
    for loc in a.locations:
        fields = [f"invariant: {format_constraint(a.invariant(loc))};"]
        if loc in bundle.priorities.table:
            vec = ", ".join(str(p) for p in bundle.priorities.table[loc])
            fields.append(f"priority: [{vec}];")
        lines.append(f"location {loc} {{ " + " ".join(fields) + " }")
    for e in a.edges:
        reset = ", ".join(c for c in a.clocks if c in e.resets)
        lines.append(f"edge {e.source} -> {e.target} {{ guard: {format_constraint(e.guard)}; "
                     f"action: {e.action}; reset: {{{reset}}}; }}")
    lines.append(f"init {a.initial};")
    if bundle.partition is not None:
        for n, acts in zip((1, 2), bundle.partition):
            lines.append(f"player{n}: " + " ".join(sorted(acts)) + ";")
    return "\n".join(lines) + "\n"


def _dot_escape(s: str) -> str:
    return s.replace("\\", "\\\\").replace('"', '\\"')


def export_region_graph_dot(graph) -> str:
    lines = ["digraph regions {", "  node [shape=box, fontname=monospace];"]
    ids = {r: f"n{i}" for i, r in enumerate(graph.vertices)}
    for r, name in ids.items():
        extra = ", peripheries=2" if r == graph.initial else ""
        lines.append(f'  {name} [label="{_dot_escape(r.encode())}"{extra}];')
    for src, kind, tgt in graph.edges:
        if kind is None:
            lines.append(f'  {ids[src]} -> {ids[tgt]} [style=dashed, label="delay"];')
        else:
            act = graph.automaton.edges[kind].action
            lines.append(f'  {ids[src]} -> {ids[tgt]} [style=solid, label="{_dot_escape(act)} #{kind}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def result_dict(result) -> dict:
    """Build the stable JSON schema for a verdict or a game solution."""
    from .verification import Verdict
    from .windowgame import GameSolution

    if isinstance(result, Verdict):
        out = {"query": f"verify {result.mode}", "verdict": "holds" if result.holds else "violated"}
        witness = result.first_witness()
        if witness is not None:
            out["witness"] = {
                "dimension": witness.dimension + 1,
                "prefix": [r.encode() for r in witness.prefix_regions()],
                "cycle": [r.encode() for r in witness.cycle.regions],
            }
            if witness.back is not None:
                out["witness"]["return"] = [r.encode() for r in witness.back.regions]
        return out
    if isinstance(result, GameSolution):
        out = {
            "query": f"solve {result.mode}",
            "verdict": "winning" if result.initial_winning else "losing",
            "winning_regions": sorted(r.encode() for r in result.winning_regions),
            "lambda_bound": result.lambda_bound,
        }
        if result.strategy is not None:
            out["strategy"] = result.strategy.to_table()
        return out
    raise TypeError(f"cannot export {type(result).__name__}")


def export_result_json(result) -> str:
    return json.dumps(result_dict(result), indent=2, sort_keys=True)
