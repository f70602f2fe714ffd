"""Two-way alternating finite automata with least-fixpoint acceptance.

Positions on the tape ``LEFT w RIGHT`` are 0 (left endmarker), 1..n (letters)
and n+1 (right endmarker).  A configuration (q, i) holds when delta(q, tape[i])
is satisfied by configurations that already hold; moves off the tape are
false.  The word is accepted when (initial, 0) holds in the least such set.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Hashable, Iterable, Sequence

LEFT = "|>"
RIGHT = "<|"


class Formula:
    __slots__ = ()


@dataclass(frozen=True)
class Const(Formula):
    value: bool

    def __repr__(self):
        return "true" if self.value else "false"


TRUE = Const(True)
FALSE = Const(False)


@dataclass(frozen=True)
class Atom(Formula):
    state: Hashable
    move: int

    def __post_init__(self):
        if self.move not in (-1, 0, 1):
            raise ValueError("moves are -1, 0 or +1")


@dataclass(frozen=True)
class And(Formula):
    items: tuple


@dataclass(frozen=True)
class Or(Formula):
    items: tuple


def conj(items: Iterable[Formula]) -> Formula:
    items = tuple(items)
    if any(x is FALSE or x == FALSE for x in items):
        return FALSE
    items = tuple(x for x in items if x != TRUE)
    if not items:
        return TRUE
    return items[0] if len(items) == 1 else And(items)


def disj(items: Iterable[Formula]) -> Formula:
    items = tuple(items)
    if any(x == TRUE for x in items):
        return TRUE
    items = tuple(x for x in items if x != FALSE)
    if not items:
        return FALSE
    return items[0] if len(items) == 1 else Or(items)


def formula_size(f: Formula) -> int:
    """Symbols in a formula: an atom counts its state and its move."""
    if isinstance(f, Const):
        return 1
    if isinstance(f, Atom):
        return 2
    return sum(formula_size(x) for x in f.items) + len(f.items) - 1


def atoms(f: Formula):
    if isinstance(f, Atom):
        yield f
    elif isinstance(f, (And, Or)):
        for x in f.items:
            yield from atoms(x)


def formula_to_json(f: Formula, state_key=lambda s: s):
    if isinstance(f, Const):
        return f.value
    if isinstance(f, Atom):
        return {"move": [state_key(f.state), f.move]}
    tag = "and" if isinstance(f, And) else "or"
    return {tag: [formula_to_json(x, state_key) for x in f.items]}


def formula_from_json(data, state_key=lambda s: s) -> Formula:
    if data is True:
        return TRUE
    if data is False:
        return FALSE
    if "move" in data:
        s, d = data["move"]
        return Atom(state_key(s), int(d))
    if "and" in data:
        return And(tuple(formula_from_json(x, state_key) for x in data["and"]))
    if "or" in data:
        return Or(tuple(formula_from_json(x, state_key) for x in data["or"]))
    raise ValueError(f"bad formula {data!r}")


def _hashable(x):
    return tuple(_hashable(y) for y in x) if isinstance(x, list) else x


@dataclass
class TwoAfa:
    """A 2AFA given by a transition callback.

    ``states`` is a callable yielding every state and ``alphabet`` the finite
    letter set; both are needed only by :func:`autolen` and JSON export, so
    automata over huge alphabets may leave them out.
    """

    initial: Hashable
    delta: Callable[[Hashable, object], Formula]
    alphabet: tuple | None = None
    states: Callable[[], Iterable[Hashable]] | None = None
    name: str = ""

    @classmethod
    def from_table(cls, initial, table: dict, alphabet: Sequence, states: Iterable | None = None, name: str = ""):
        table = dict(table)
        if states is None:
            found = {initial}
            for (q, _), f in table.items():
                found.add(q)
                found.update(a.state for a in atoms(f))
            states = sorted(found, key=repr)
        else:
            states = list(states)
        frozen = tuple(states)

        def delta(q, a):
            return table.get((q, a), FALSE)

        return cls(initial, delta, tuple(alphabet), lambda: iter(frozen), name)

    def letters_with_ends(self) -> tuple:
        if self.alphabet is None:
            raise ValueError("alphabet not materialised")
        return tuple(self.alphabet) + (LEFT, RIGHT)

    def to_json(self) -> dict:
        if self.states is None:
            raise ValueError("state set not materialised")
        states = list(self.states())
        key = {s: i for i, s in enumerate(states)}
        delta = []
        for s in states:
            for a in self.letters_with_ends():
                f = self.delta(s, a)
                if f != FALSE:
                    delta.append({"state": key[s], "letter": a, "formula": formula_to_json(f, key.__getitem__)})
        return {
            "name": self.name,
            "states": [repr(s) for s in states],
            "alphabet": list(self.alphabet),
            "initial": key[self.initial],
            "delta": delta,
        }

    @classmethod
    def from_json(cls, data: dict) -> "TwoAfa":
        table = {}
        for row in data["delta"]:
            table[(row["state"], _hashable(row["letter"]))] = formula_from_json(row["formula"])
        return cls.from_table(data["initial"], table, [_hashable(a) for a in data["alphabet"]], range(len(data["states"])), data.get("name", ""))


def autolen(a: TwoAfa) -> int:
    if a.states is None or a.alphabet is None:
        raise ValueError("autolen needs a materialised state set and alphabet")
    letters = a.letters_with_ends()
    return sum(formula_size(a.delta(q, x)) for q in a.states() for x in letters)


@dataclass
class SaturationStats:
    pairs: int = 0
    evaluations: int = 0


def _compile(f: Formula, pos: int, last: int, ids: dict, pending: list):
    """Replace atoms by node ids; out-of-tape atoms become False."""
    if isinstance(f, Const):
        return f.value
    if isinstance(f, Atom):
        j = pos + f.move
        if j < 0 or j > last:
            return False
        key = (f.state, j)
        nid = ids.get(key)
        if nid is None:
            nid = len(ids)
            ids[key] = nid
            pending.append(key)
        return nid
    items = [_compile(x, pos, last, ids, pending) for x in f.items]
    if isinstance(f, And):
        if any(x is False for x in items):
            return False
        items = [x for x in items if x is not True]
        return ("&", items) if items else True
    if any(x is True for x in items):
        return True
    items = [x for x in items if x is not False]
    return ("|", items) if items else False


def _holds(c, value: list) -> bool:
    if c is True or c is False:
        return c
    if isinstance(c, int):
        return value[c]
    if c[0] == "&":
        return all(_holds(x, value) for x in c[1])
    return any(_holds(x, value) for x in c[1])


def _deps(c, out: set):
    if isinstance(c, bool):
        return
    if isinstance(c, int):
        out.add(c)
        return
    for x in c[1]:
        _deps(x, out)


def tape_of(word: Sequence) -> list:
    return [LEFT, *word, RIGHT]


def saturate(a: TwoAfa, word: Sequence, roots: Iterable[tuple] | None = None, stats: SaturationStats | None = None, order_seed: int | None = None) -> set:
    """Least fixpoint restricted to configurations reachable from ``roots``.

    Returns the configurations (state, position) found to hold.  The default
    root is the initial configuration.
    """
    tape = tape_of(word)
    if a.alphabet is not None:
        allowed = set(a.alphabet)
        for x in word:
            if x not in allowed:
                raise ValueError(f"letter {x!r} outside the alphabet")
    last = len(tape) - 1
    ids: dict = {}
    pending: list = []
    for r in roots if roots is not None else [(a.initial, 0)]:
        if r not in ids:
            ids[r] = len(ids)
            pending.append(r)
    compiled: list = []
    while pending:
        q, i = pending.pop()
        nid = ids[(q, i)]
        c = _compile(a.delta(q, tape[i]), i, last, ids, pending)
        while len(compiled) <= nid:
            compiled.append(None)
        compiled[nid] = c
    while len(compiled) < len(ids):
        compiled.append(False)
    n = len(ids)
    rdeps: list[list[int]] = [[] for _ in range(n)]
    for nid, c in enumerate(compiled):
        ds: set = set()
        _deps(c, ds)
        for d in ds:
            rdeps[d].append(nid)
    value = [False] * n
    work = list(range(n))
    if order_seed is not None:
        import random

        random.Random(order_seed).shuffle(work)
    evals = 0
    while work:
        nid = work.pop()
        if value[nid]:
            continue
        evals += 1
        if _holds(compiled[nid], value):
            value[nid] = True
            work.extend(d for d in rdeps[nid] if not value[d])
    if stats is not None:
        stats.pairs = n
        stats.evaluations = evals
    keys = list(ids)
    return {keys[i] for i in range(n) if value[i]}


def membership(a: TwoAfa, word: Sequence, stats: SaturationStats | None = None) -> bool:
    return (a.initial, 0) in saturate(a, word, stats=stats)


def holds_at(a: TwoAfa, word: Sequence, config: tuple) -> bool:
    """Whether one configuration belongs to the least fixpoint."""
    return config in saturate(a, word, roots=[config])


def dumps(a: TwoAfa) -> str:
    return json.dumps(a.to_json())
