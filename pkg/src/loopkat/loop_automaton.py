"""Loop-automata: compilation from terms and run relations over structures.

A loop-automaton is an NFA-like graph whose edges carry a letter, the
identity label, or a loop label ``loop(p', q')``.  A loop edge may be taken
at vertex x only if the automaton can itself run from p' to q' starting and
ending at x.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .structure import DecompString, Structure, glue
from .term import Comp, Id, Loop, Star, Term, TermError, Top, Union, Var, Zero


@dataclass(frozen=True)
class LoopAutomaton:
    states: tuple[int, ...]
    letter_edges: dict          # letter -> frozenset[(p, q)]
    id_edges: frozenset         # frozenset[(p, q)]
    loop_edges: dict            # (p', q') -> frozenset[(p, q)]
    source: int
    target: int

    def __post_init__(self):
        qs = set(self.states)
        if self.source not in qs or self.target not in qs:
            raise ValueError("source and target must be states")
        for (p1, q1), rel in self.loop_edges.items():
            if p1 not in qs or q1 not in qs:
                raise ValueError(f"loop label refers to unknown states {(p1, q1)}")
            for p, q in rel:
                if p not in qs or q not in qs:
                    raise ValueError("loop edge between unknown states")
        for rel in list(self.letter_edges.values()) + [self.id_edges]:
            for p, q in rel:
                if p not in qs or q not in qs:
                    raise ValueError("edge between unknown states")

    @property
    def size(self) -> int:
        return len(self.states)

    @property
    def letters(self) -> tuple[str, ...]:
        return tuple(sorted(a for a, r in self.letter_edges.items() if r))

    def edges(self) -> Iterator[tuple[int, object, int]]:
        """Yield (p, label, q) with label a letter, ``"I"`` marker or a loop pair."""
        for a in sorted(self.letter_edges):
            for p, q in sorted(self.letter_edges[a]):
                yield p, ("letter", a), q
        for p, q in sorted(self.id_edges):
            yield p, ("id",), q
        for pq in sorted(self.loop_edges):
            for p, q in sorted(self.loop_edges[pq]):
                yield p, ("loop", pq), q

    def to_json(self) -> dict:
        out = []
        for p, lab, q in self.edges():
            if lab[0] == "letter":
                out.append({"from": p, "to": q, "letter": lab[1]})
            elif lab[0] == "id":
                out.append({"from": p, "to": q, "id": True})
            else:
                out.append({"from": p, "to": q, "loop": list(lab[1])})
        return {"states": list(self.states), "source": self.source, "target": self.target, "edges": out}

    @classmethod
    def from_json(cls, data: dict) -> "LoopAutomaton":
        letters: dict[str, set] = {}
        ids: set = set()
        loops: dict[tuple[int, int], set] = {}
        for e in data["edges"]:
            pq = (e["from"], e["to"])
            if "letter" in e:
                letters.setdefault(e["letter"], set()).add(pq)
            elif "loop" in e:
                loops.setdefault(tuple(e["loop"]), set()).add(pq)
            else:
                ids.add(pq)
        return make_automaton(data["states"], letters, ids, loops, data["source"], data["target"])

    def to_dot(self) -> str:
        lines = ["digraph loop_automaton {", "  rankdir=LR;", '  start [shape=point];']
        for s in self.states:
            shape = "doublecircle" if s == self.target else "circle"
            lines.append(f'  q{s} [label="{s}", shape={shape}];')
        lines.append(f"  start -> q{self.source};")
        for p, lab, q in self.edges():
            if lab[0] == "letter":
                text = lab[1]
            elif lab[0] == "id":
                text = "I"
            else:
                text = f"loop<{lab[1][0]},{lab[1][1]}>"
            lines.append(f'  q{p} -> q{q} [label="{text}"];')
        lines.append("}")
        return "\n".join(lines)

    def dumps(self) -> str:
        return json.dumps(self.to_json())


def make_automaton(states, letter_edges, id_edges, loop_edges, source, target) -> LoopAutomaton:
    return LoopAutomaton(
        tuple(states),
        {a: frozenset(r) for a, r in letter_edges.items() if r},
        frozenset(id_edges),
        {tuple(pq): frozenset(r) for pq, r in loop_edges.items() if r},
        source,
        target,
    )


class _Builder:
    def __init__(self):
        self.counter = itertools.count()
        self.states: list[int] = []
        self.letters: dict[str, set] = {}
        self.ids: set = set()
        self.loops: dict[tuple[int, int], set] = {}

    def fresh(self) -> int:
        s = next(self.counter)
        self.states.append(s)
        return s

    def build(self, t: Term) -> tuple[int, int]:
        if isinstance(t, Var):
            s, f = self.fresh(), self.fresh()
            self.letters.setdefault(t.name, set()).add((s, f))
            return s, f
        if isinstance(t, Zero):
            return self.fresh(), self.fresh()
        if isinstance(t, Id):
            s, f = self.fresh(), self.fresh()
            self.ids.add((s, f))
            return s, f
        if isinstance(t, Union):
            s = self.fresh()
            s1, f1 = self.build(t.left)
            s2, f2 = self.build(t.right)
            f = self.fresh()
            self.ids.update({(s, s1), (s, s2), (f1, f), (f2, f)})
            return s, f
        if isinstance(t, Comp):
            s1, f1 = self.build(t.left)
            s2, f2 = self.build(t.right)
            self._merge(s2, f1)
            return s1, f2
        if isinstance(t, Star):
            s = self.fresh()
            s1, f1 = self.build(t.body)
            f = self.fresh()
            self.ids.update({(s, s1), (f1, f), (f1, s1), (s, f)})
            return s, f
        if isinstance(t, Loop):
            inner = self.build(t.body)
            s, f = self.fresh(), self.fresh()
            self.loops.setdefault(inner, set()).add((s, f))
            return s, f
        if isinstance(t, Top):
            raise TermError("top must be encoded before compiling (see wrap_for_decision)")
        raise ValueError(f"term node {type(t).__name__} must be desugared before compiling")

    def _merge(self, old: int, new: int) -> None:
        """Identify state ``old`` with ``new``; ``old`` disappears."""

        def ren(p):
            return new if p == old else p

        def ren_rel(rel):
            return {(ren(p), ren(q)) for p, q in rel}

        self.states.remove(old)
        self.letters = {a: ren_rel(r) for a, r in self.letters.items()}
        self.ids = ren_rel(self.ids)
        loops: dict[tuple[int, int], set] = {}
        for pq, r in self.loops.items():
            loops.setdefault((ren(pq[0]), ren(pq[1])), set()).update(ren_rel(r))
        self.loops = loops


def compile_term(t: Term) -> LoopAutomaton:
    """Thompson-style construction with one extra case for the graph loop."""
    b = _Builder()
    s, f = b.build(t)
    return make_automaton(b.states, b.letters, b.ids, b.loops, s, f)


compile = compile_term


# ---------------------------------------------------------------------------
# run relations over a structure


def trim(a: LoopAutomaton, source, target) -> LoopAutomaton:
    """Sub-automaton of the states lying on some path from source to target.

    Loop edges drag in the states between their inner pair.  Runs from
    source to target are unchanged.
    """
    succ: dict = {}
    for p, _, q in a.edges():
        succ.setdefault(p, set()).add(q)
    pred: dict = {}
    for p, qs in succ.items():
        for q in qs:
            pred.setdefault(q, set()).add(p)

    def reach(start, nbrs):
        seen = {start}
        stack = [start]
        while stack:
            x = stack.pop()
            for y in nbrs.get(x, ()):
                if y not in seen:
                    seen.add(y)
                    stack.append(y)
        return seen

    keep: set = set()
    todo = [(source, target)]
    done = set()
    while todo:
        pq = todo.pop()
        if pq in done:
            continue
        done.add(pq)
        region = reach(pq[0], succ) & reach(pq[1], pred)
        region |= {pq[0], pq[1]}
        keep |= region
        for inner, rel in a.loop_edges.items():
            if any(p in region and q in region for p, q in rel):
                todo.append(inner)

    def sub(rel):
        return {(p, q) for p, q in rel if p in keep and q in keep}

    states = [q for q in a.states if q in keep]
    loops = {pq: sub(r) for pq, r in a.loop_edges.items() if pq[0] in keep and pq[1] in keep}
    return make_automaton(states, {x: sub(r) for x, r in a.letter_edges.items()}, sub(a.id_edges), loops, source, target)


class RunRelation:
    """Endpoint quadruples (p, x, q, y) of runs, stored as a closure matrix.

    Rows and columns are indexed by (state, vertex) nodes.
    """

    def __init__(self, automaton: LoopAutomaton, vertices: tuple, closure: np.ndarray):
        self.automaton = automaton
        self.vertices = vertices
        self.closure = closure
        self.sidx = {q: i for i, q in enumerate(automaton.states)}
        self.vidx = {v: i for i, v in enumerate(vertices)}

    def _node(self, q, x) -> int:
        return self.sidx[q] * len(self.vertices) + self.vidx[x]

    def __contains__(self, quad) -> bool:
        p, x, q, y = quad
        return bool(self.closure[self._node(p, x), self._node(q, y)])

    def quads(self) -> Iterator[tuple]:
        n = len(self.vertices)
        qs = self.automaton.states
        vs = self.vertices
        for i, j in zip(*np.nonzero(self.closure)):
            yield qs[i // n], vs[i % n], qs[j // n], vs[j % n]

    def between(self, p, q) -> frozenset:
        n = len(self.vertices)
        block = self.closure[self.sidx[p] * n : (self.sidx[p] + 1) * n, self.sidx[q] * n : (self.sidx[q] + 1) * n]
        vs = self.vertices
        return frozenset((vs[i], vs[j]) for i, j in zip(*np.nonzero(block)))

    def semantics(self) -> frozenset:
        return self.between(self.automaton.source, self.automaton.target)


def _closure(m: np.ndarray) -> np.ndarray:
    c = (m | np.eye(m.shape[0], dtype=bool)).astype(np.float32)
    count = int(np.count_nonzero(c))
    while True:
        c = ((c @ c) > 0).astype(np.float32)
        now = int(np.count_nonzero(c))
        if now == count:
            return c > 0
        count = now


class _Plan:
    """State-side matrices of an automaton, reused across structures."""

    def __init__(self, a: LoopAutomaton):
        nq = len(a.states)
        sidx = {q: i for i, q in enumerate(a.states)}

        def mat(rel):
            m = np.zeros((nq, nq), dtype=bool)
            for p, q in rel:
                m[sidx[p], sidx[q]] = True
            return m

        self.letters = [(x, mat(r)) for x, r in sorted(a.letter_edges.items())]
        self.ids = mat(a.id_edges)
        self.loops = [(sidx[p1], sidx[q1], mat(r)) for (p1, q1), r in sorted(a.loop_edges.items())]


def _kron(m: np.ndarray, r: np.ndarray) -> np.ndarray:
    a, b = m.shape[0], r.shape[0]
    return (m[:, None, :, None] & r[None, :, None, :]).reshape(a * b, a * b)


def _plan(a: LoopAutomaton) -> _Plan:
    plan = a.__dict__.get("_plan")
    if plan is None:
        plan = _Plan(a)
        object.__setattr__(a, "_plan", plan)
    return plan


def eval_automaton(s: Structure, a: LoopAutomaton) -> RunRelation:
    """Least relation closed under reflexivity, steps, composition and loop steps.

    Nodes are (state, vertex) pairs numbered state * n + vertex, so a state
    edge p -> q labelled by a relation R contributes kron(E_pq, R).
    """
    n = len(s.vertices)
    vidx = {v: i for i, v in enumerate(s.vertices)}
    plan = _plan(a)
    eye = np.eye(n, dtype=bool)
    step = _kron(plan.ids, eye)
    for letter, m in plan.letters:
        rel = s.rel(letter)
        if not rel:
            continue
        r = np.zeros((n, n), dtype=bool)
        for u, v in rel:
            r[vidx[u], vidx[v]] = True
        step |= _kron(m, r)
    closure = _closure(step)
    if plan.loops:
        ar = np.arange(n)
        while True:
            extra = np.zeros_like(step)
            for p1, q1, m in plan.loops:
                here = closure[p1 * n + ar, q1 * n + ar]
                if here.any():
                    extra |= _kron(m, np.diag(here))
            if not (extra & ~step).any():
                break
            step |= extra
            closure = _closure(step)
    return RunRelation(a, tuple(s.vertices), closure)


def semantics(s: Structure, a: LoopAutomaton) -> frozenset:
    return eval_automaton(s, a).semantics()


# ---------------------------------------------------------------------------
# decomposed run relation


class DecomposedRunRelation:
    """Quadruples over glued classes derivable with block-local endpoints."""

    def __init__(self, quads: set, glued, trace: dict | None = None):
        self.quads = quads
        self.glued = glued
        self.trace = trace

    def __contains__(self, quad) -> bool:
        return quad in self.quads

    def __iter__(self):
        return iter(self.quads)

    def __len__(self):
        return len(self.quads)

    def semantics(self, source, target) -> frozenset:
        return frozenset((x, y) for p, x, q, y in self.quads if p == source and q == target)


def eval_decomposed(w: DecompString, a: LoopAutomaton, trace: bool = False) -> DecomposedRunRelation:
    """Saturate the decomposed rules with a worklist.

    Base facts come from single blocks.  Composition and loop steps only
    produce facts whose two endpoint classes share some block.
    """
    g = glue(w)
    allowed = set()
    for cls in g.block_classes:
        allowed.update(itertools.product(cls, repeat=2))
    facts: set = set()
    why: dict | None = {} if trace else None
    out_by: dict = {}   # (p, x) -> set of (q, y)
    in_by: dict = {}    # (q, y) -> set of (p, x)
    work: list = []

    def add(f, reason):
        if f in facts:
            return
        facts.add(f)
        if why is not None:
            why[f] = reason
        work.append(f)

    states = a.states
    for i, blk in enumerate(w.blocks, start=1):
        cls = {x: g.class_of[(i, x)] for x in blk.universe}
        for c in cls.values():
            for p in states:
                add((p, c, p, c), ("R",))
        for letter, rel in a.letter_edges.items():
            for u, v in blk.rel(letter):
                for p, q in rel:
                    add((p, cls[u], q, cls[v]), ("step", letter, i))
        for p, q in a.id_edges:
            for c in cls.values():
                add((p, c, q, c), ("step", "I", i))
    loops_by_inner = a.loop_edges
    while work:
        f = work.pop()
        p, x, q, y = f
        out_by.setdefault((p, x), set()).add((q, y))
        in_by.setdefault((q, y), set()).add((p, x))
        # f as the left premise of composition
        for r, z in list(out_by.get((q, y), ())):
            if (x, z) in allowed:
                add((p, x, r, z), ("T", f, (q, y, r, z)))
        # f as the right premise
        for o, u in list(in_by.get((p, x), ())):
            if (u, y) in allowed:
                add((o, u, q, y), ("T", (o, u, p, x), f))
        if x == y:
            rel = loops_by_inner.get((p, q))
            if rel:
                for p2, q2 in rel:
                    add((p2, x, q2, x), ("loop", f))
    return DecomposedRunRelation(facts, g, why)


def explain(rel: DecomposedRunRelation, quad, depth: int = 0) -> list[str]:
    """Render the stored derivation of a quadruple (requires trace mode)."""
    if rel.trace is None:
        raise ValueError("relation was computed without trace=True")
    reason = rel.trace[quad]
    lines = ["  " * depth + f"{quad} by {reason[0]}"]
    if reason[0] == "T":
        lines += explain(rel, reason[1], depth + 1) + explain(rel, reason[2], depth + 1)
    elif reason[0] == "loop":
        lines += explain(rel, reason[1], depth + 1)
    return lines
