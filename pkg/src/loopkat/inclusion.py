"""Inclusion engines.

* :func:`decide_bounded` searches decomposition strings up to a length bound
  for a refutation of a wrapped inequation.
* :func:`decide_loop_free` decides inclusion of plain regular expressions.
* :func:`decide_full_micro` decides inclusion of small binary 2AFAs through
  behavior tables.
"""
from __future__ import annotations

import functools
import itertools
from collections import deque
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .loop_automaton import LoopAutomaton, compile_term, eval_automaton, semantics, trim
from .structure import Block, DecompString, block_length, edge_offset, encode_block, glue, nominal_violated, universe_offset
from .term import (
    RESERVED_LEFT,
    RESERVED_RIGHT,
    RESERVED_TOP,
    Comp,
    ExtensionConfig,
    Plus,
    Star,
    Term,
    TermError,
    is_loop_free,
    walk,
)
from .two_afa import LEFT, RIGHT, And, Atom, Const, TwoAfa


@dataclass(frozen=True)
class Valid:
    certificate: object = None


@dataclass(frozen=True)
class Refuted:
    """``witness`` is a DecompString or a word; x, y name glued classes."""

    witness: object
    x: tuple | None = None
    y: tuple | None = None


@dataclass(frozen=True)
class ExhaustedBound:
    bound: int
    examined: int = 0


InclusionVerdict = Valid | Refuted | ExhaustedBound


# ---------------------------------------------------------------------------
# bounded search over decomposition strings


def _marker_edge(a: LoopAutomaton, letter: str):
    rel = a.letter_edges.get(letter, frozenset())
    return next(iter(rel)) if len(rel) == 1 else None


def _inner_endpoints(a: LoopAutomaton):
    """States delimiting the wrapped inner term, or None when not wrapped."""
    left, right = _marker_edge(a, RESERVED_LEFT), _marker_edge(a, RESERVED_RIGHT)
    if left is None or right is None:
        return None
    return left[1], right[0]


def _block_choices(uni: tuple, cfg: ExtensionConfig, free: tuple, fixed_empty: tuple):
    """Relation choices per working letter respecting the per-block classes."""
    square = [(p, q) for p in uni for q in uni]
    diag = [(x, x) for x in uni]
    full = frozenset(square)
    subsets = [frozenset(pq for pq, bit in zip(square, bits) if bit) for bits in itertools.product((0, 1), repeat=len(square))]
    per_letter: list[list] = []
    test_bars = {bb for _, bb in cfg.test_pairs}
    conv_partners = {cc for _, cc in cfg.converse_pairs}
    for a in free:
        if a in test_bars or a in conv_partners:
            continue
        if a == RESERVED_TOP:
            per_letter.append([((a, full),)])
        elif a in fixed_empty:
            per_letter.append([((a, frozenset()),)])
        elif a in cfg.tests:
            bb = dict(cfg.test_pairs)[a]
            opts = []
            for bits in itertools.product((0, 1), repeat=len(diag)):
                r = frozenset(d for d, bit in zip(diag, bits) if bit)
                opts.append(((a, r), (bb, frozenset(diag) - r)))
            per_letter.append(opts)
        elif a in cfg.converse:
            cc = dict(cfg.converse_pairs)[a]
            per_letter.append([((a, s), (cc, frozenset((v, u) for u, v in s))) for s in subsets])
        elif a in cfg.nominals:
            per_letter.append([((a, frozenset()),)] + [((a, frozenset([d])),) for d in diag])
        else:
            per_letter.append([((a, s),) for s in subsets])
    return per_letter


@functools.lru_cache(maxsize=32)
def _pool(k: int, cfg: ExtensionConfig, rest_empty: tuple) -> tuple:
    """Blocks over the working alphabet satisfying every per-block class.

    Letters in ``rest_empty`` are left empty.  Sorted by binary code.
    """
    letters = cfg.working
    out = []
    for ubits in itertools.product((0, 1), repeat=k):
        uni = tuple(x for x in range(1, k + 1) if ubits[x - 1])
        if not uni:
            continue
        per_letter = _block_choices(uni, cfg, letters, rest_empty)
        for combo in itertools.product(*per_letter):
            edges = {a: r for part in combo for a, r in part}
            out.append(Block(k, frozenset(uni), edges))
    out.sort(key=lambda b: encode_block(b, letters))
    return tuple(out)


def _bit_matrix(pool, letters) -> np.ndarray:
    return np.array([[c == "1" for c in encode_block(b, letters)] for b in pool], dtype=bool).reshape(len(pool), -1)


@functools.lru_cache(maxsize=32)
def _pool_bits(k: int, cfg: ExtensionConfig, rest_empty: tuple) -> np.ndarray:
    return _bit_matrix(_pool(k, cfg, rest_empty), cfg.working)


@functools.lru_cache(maxsize=256)
def _orbit_minimal(k: int, cfg: ExtensionConfig, rest_empty: tuple, fixed: frozenset = frozenset()) -> frozenset:
    """Pool indices whose code is minimal among renamings fixing ``fixed``."""
    pool = _pool(k, cfg, rest_empty)
    m = len(cfg.working)
    bits = _pool_bits(k, cfg, rest_empty)
    keep = np.ones(len(pool), dtype=bool)
    rows = np.arange(len(pool))
    movable = [x for x in range(1, k + 1) if x not in fixed]
    for perm in itertools.permutations(movable):
        if list(perm) == movable:
            continue
        pi = {x: x for x in fixed}
        pi.update(zip(movable, perm))
        src = np.empty(block_length(k, m), dtype=int)
        for x in range(1, k + 1):
            src[universe_offset(pi[x])] = universe_offset(x)
        for i in range(m):
            for p in range(1, k + 1):
                for q in range(1, k + 1):
                    src[edge_offset(k, i, pi[p], pi[q])] = edge_offset(k, i, p, q)
        moved = bits[:, src]
        diff = moved != bits
        first = diff.argmax(axis=1)
        smaller = diff.any(axis=1) & ~moved[rows, first]
        keep &= ~smaller
    return frozenset(int(i) for i in np.nonzero(keep)[0])


def _compatible(b: Block, c: Block, letters) -> bool:
    shared = b.universe & c.universe
    if not shared:
        return False
    for a in letters:
        rb = {pq for pq in b.rel(a) if pq[0] in shared and pq[1] in shared}
        rc = {pq for pq in c.rel(a) if pq[0] in shared and pq[1] in shared}
        if rb != rc:
            return False
    return True


class _Strings:
    """Filter-respecting decomposition strings of one exact length."""

    def __init__(self, k: int, cfg: ExtensionConfig, rest_empty: tuple, symmetry: bool = True):
        self.k = k
        self.cfg = cfg
        self.pool = _pool(k, cfg, rest_empty)
        self.rest_empty = rest_empty
        self.symmetry = symmetry
        self.firsts = sorted(_orbit_minimal(k, cfg, rest_empty)) if symmetry else list(range(len(self.pool)))
        self.succ: dict[int, tuple] = {}

    def successors(self, i: int) -> tuple:
        """Compatible next blocks; with symmetry, one per renaming of fresh names."""
        s = self.succ.get(i)
        if s is None:
            b = self.pool[i]
            s = [j for j, c in enumerate(self.pool) if _compatible(b, c, self.cfg.working)]
            if self.symmetry:
                # renaming the names outside b in the whole suffix keeps the gluing
                ok = _orbit_minimal(self.k, self.cfg, self.rest_empty, b.universe)
                s = [j for j in s if j in ok]
            s = tuple(s)
            self.succ[i] = s
        return s

    def of_length(self, n: int) -> Iterator[DecompString]:
        k = self.k

        def bound(classes, cur, remaining):
            if remaining == 0:
                return classes
            return classes + (k - len(cur)) + (remaining - 1) * (k - 1)

        def go(prefix, classes):
            cur = self.pool[prefix[-1]].universe
            remaining = n - len(prefix)
            # strings whose gluing has at most k classes reduce to one block
            if n > 1 and bound(classes, cur, remaining) <= k:
                return
            if remaining == 0:
                w = DecompString(tuple(self.pool[i] for i in prefix))
                if not any(nominal_violated(w, l) for l in self.cfg.nominals):
                    yield w
                return
            for j in self.successors(prefix[-1]):
                nxt = self.pool[j].universe
                yield from go(prefix + [j], classes + len(nxt - cur))

        for i in self.firsts:
            b = self.pool[i]
            if n == 1:
                w = DecompString((b,))
                if not any(nominal_violated(w, l) for l in self.cfg.nominals):
                    yield w
            else:
                yield from go([i], len(b.universe))


def _endpoint_matrix(s, a: LoopAutomaton) -> np.ndarray:
    rel = eval_automaton(s, a)
    n = len(s.vertices)
    i, j = rel.sidx[a.source], rel.sidx[a.target]
    return rel.closure[i * n : (i + 1) * n, j * n : (j + 1) * n]


def _shape(s, ignore=(RESERVED_TOP,)) -> tuple:
    """Isomorphism-invariant key of a structure, ignoring some letters.

    Vertices are sorted by degree signature and only ties are permuted.
    """
    letters = sorted(a for a in s.edges if a not in ignore)
    verts = s.vertices
    sig = {}
    for v in verts:
        parts = []
        for a in letters:
            r = s.rel(a)
            parts.append((sum(1 for p in r if p[0] == v), sum(1 for p in r if p[1] == v), (v, v) in r))
        sig[v] = tuple(parts)
    groups = [sorted(g) for _, g in itertools.groupby(sorted(verts, key=lambda v: sig[v]), key=lambda v: sig[v])]
    best = None
    for choice in itertools.product(*[itertools.permutations(g) for g in groups]):
        order = [v for g in choice for v in g]
        pos = {v: i for i, v in enumerate(order)}
        edges = tuple(sorted((a, pos[u], pos[v]) for a in letters for u, v in s.rel(a)))
        if best is None or edges < best:
            best = edges
    return len(verts), tuple(sig[v] for v in sorted(verts, key=lambda v: sig[v])), best


def _mark_class(glued, cls, letter: str, extra: dict) -> None:
    for (i, x), c in glued.class_of.items():
        if c == cls:
            extra.setdefault(i, {}).setdefault(letter, set()).add((x, x))


def decide_bounded(lhs: LoopAutomaton, rhs: LoopAutomaton, cfg: ExtensionConfig, k: int, max_blocks: int, symmetry: bool = True) -> InclusionVerdict:
    """Search strings of at most ``max_blocks`` blocks for a refutation.

    For wrapped automata the markers are placed after the search: the inner
    relations are compared on strings without marker edges and a violating
    pair receives the two marker loops.  Otherwise every working letter is
    enumerated and a pair between block-1 classes in lhs but not in rhs is
    sought.
    """
    if k < 2:
        raise ValueError("k must be at least 2")
    if max_blocks < 1:
        raise ValueError("max_blocks must be at least 1")
    ends1, ends2 = _inner_endpoints(lhs), _inner_endpoints(rhs)
    wrapped = ends1 is not None and ends2 is not None
    rest_empty = (RESERVED_LEFT, RESERVED_RIGHT) if wrapped else ()
    if wrapped:
        inner1, inner2 = trim(lhs, *ends1), trim(rhs, *ends2)
    strings = _Strings(k, cfg, rest_empty, symmetry)
    examined = 0
    seen: set = set()
    for n in range(1, max_blocks + 1):
        for w in strings.of_length(n):
            examined += 1
            g = glue(w)
            s = g.structure
            if wrapped:
                # the inner relations depend only on the glued structure
                key = _shape(s)
                if key in seen:
                    continue
                seen.add(key)
                m1 = _endpoint_matrix(s, inner1)
                if not m1.any():
                    continue
                diff = m1 & ~_endpoint_matrix(s, inner2)
                if not diff.any():
                    continue
                i, j = (int(t) for t in np.argwhere(diff)[0])
                u, v = s.vertices[i], s.vertices[j]
                extra: dict = {}
                _mark_class(g, u, RESERVED_LEFT, extra)
                _mark_class(g, v, RESERVED_RIGHT, extra)
                full = DecompString(tuple(b.with_edges(extra.get(i, {})) for i, b in enumerate(w.blocks, start=1)))
                gs = glue(full).structure
                if not semantics(gs, lhs) or semantics(gs, rhs):
                    raise RuntimeError("marker placement did not produce a refutation")
                return Refuted(full, u, v)
            r1 = semantics(s, lhs)
            if not r1:
                continue
            r2 = semantics(s, rhs)
            first = g.block_classes[0]
            for u, v in sorted(r1 - r2):
                if u in first and v in first:
                    return Refuted(w, u, v)
    return ExhaustedBound(max_blocks, examined)


# ---------------------------------------------------------------------------
# regular expressions


def _strip_plus(t: Term) -> Term:
    if isinstance(t, Plus):
        b = _strip_plus(t.body)
        return Comp(b, Star(b))
    kids = t.children()
    if not kids:
        return t
    if len(kids) == 1:
        return type(t)(_strip_plus(kids[0]))
    return type(t)(_strip_plus(kids[0]), _strip_plus(kids[1]))


class _Nfa:
    def __init__(self, t: Term):
        a = compile_term(t)
        self.initial = a.source
        self.final = a.target
        self.eps: dict[int, set] = {}
        for p, q in a.id_edges:
            self.eps.setdefault(p, set()).add(q)
        self.step: dict[tuple[int, str], set] = {}
        for letter, rel in a.letter_edges.items():
            for p, q in rel:
                self.step.setdefault((p, letter), set()).add(q)
        self.letters = set(a.letter_edges)

    def close(self, states) -> frozenset:
        seen = set(states)
        stack = list(states)
        while stack:
            p = stack.pop()
            for q in self.eps.get(p, ()):
                if q not in seen:
                    seen.add(q)
                    stack.append(q)
        return frozenset(seen)

    def post(self, states, letter) -> frozenset:
        out = set()
        for p in states:
            out |= self.step.get((p, letter), set())
        return self.close(out)


def decide_loop_free(t1: Term, t2: Term) -> InclusionVerdict:
    """Language inclusion of two regular expressions (identity is the empty word).

    Explores pairs (state of t1, closed state set of t2) breadth first and
    keeps only pairs not subsumed by one with a smaller set.  The certificate
    of a Valid verdict is that antichain.
    """
    t1, t2 = _strip_plus(t1), _strip_plus(t2)
    for t in (t1, t2):
        if not is_loop_free(t):
            bad = next(n for n in walk(t) if not is_loop_free(n))
            raise TermError(f"not a regular expression: contains {type(bad).__name__}")
    n1, n2 = _Nfa(t1), _Nfa(t2)
    letters = sorted(n1.letters)
    start2 = n2.close([n2.initial])
    queue: deque = deque()
    parent: dict = {}
    antichain: dict[int, list[frozenset]] = {}

    def subsumed(p, s):
        return any(old <= s for old in antichain.get(p, ()))

    def push(p, s, prev, letter):
        if subsumed(p, s):
            return None
        kept = [old for old in antichain.get(p, []) if not s <= old]
        kept.append(s)
        antichain[p] = kept
        parent[(p, s)] = (prev, letter)
        if p == n1.final and n2.final not in s:
            return (p, s)
        queue.append((p, s))
        return None

    def word_of(node):
        out = []
        while node is not None:
            prev, letter = parent[node]
            if letter is not None:
                out.append(letter)
            node = prev
        return tuple(reversed(out))

    for p in sorted(n1.close([n1.initial])):
        hit = push(p, start2, None, None)
        if hit:
            return Refuted(word_of(hit))
    while queue:
        p, s = queue.popleft()
        if s not in antichain.get(p, ()):
            continue   # superseded by a pair with a smaller set
        for letter in letters:
            targets = n1.step.get((p, letter))
            if not targets:
                continue
            s2 = n2.post(s, letter)
            for q in sorted(n1.close(targets)):
                hit = push(q, s2, (p, s), letter)
                if hit:
                    return Refuted(word_of(hit))
    cert = sorted((p, tuple(sorted(s))) for p, ss in antichain.items() for s in ss)
    return Valid(cert)


def regex_language_contains(t: Term, word) -> bool:
    """Direct NFA simulation of one word."""
    n = _Nfa(_strip_plus(t))
    cur = n.close([n.initial])
    for letter in word:
        cur = n.post(cur, letter)
    return n.final in cur


# ---------------------------------------------------------------------------
# behavior tables for small 2AFAs


def _dnf_or(*parts) -> frozenset:
    clauses = set().union(*parts)
    return _minimise(clauses)


def _minimise(clauses) -> frozenset:
    clauses = sorted(set(clauses), key=len)
    out: list[frozenset] = []
    for c in clauses:
        if not any(o <= c for o in out):
            out.append(c)
    return frozenset(out)


def _dnf_and(x: frozenset, y: frozenset) -> frozenset:
    return _minimise(a | b for a in x for b in y)


DNF_TRUE = frozenset([frozenset()])
DNF_FALSE = frozenset()


def _dnf(f, env) -> frozenset:
    """Formula to DNF; ``env(state, move)`` gives the DNF of an atom."""
    if isinstance(f, Const):
        return DNF_TRUE if f.value else DNF_FALSE
    if isinstance(f, Atom):
        return env(f.state, f.move)
    parts = [_dnf(x, env) for x in f.items]
    if isinstance(f, And):
        out = DNF_TRUE
        for p in parts:
            out = _dnf_and(out, p)
            if not out:
                break
        return out
    return _dnf_or(*parts)


def _subst(d: frozenset, table) -> frozenset:
    """Replace every variable v in a DNF by the DNF ``table(v)``."""
    out = set()
    for clause in d:
        acc = DNF_TRUE
        for v in clause:
            acc = _dnf_and(acc, table(v))
            if not acc:
                break
        out |= acc
    return _minimise(out)


class _Behaviors:
    """Monotone summaries of tape segments.

    A behavior maps an entry (state, side) to a DNF over exits (side, state),
    where side "L" is the cell left of the segment and "R" the cell right of
    it.  Entering from the left means starting on the segment's first cell.
    """

    def __init__(self, a: TwoAfa):
        self.a = a
        self.states = tuple(a.states())
        self.entries = tuple((q, side) for q in self.states for side in "LR")
        self.letter_cache: dict = {}
        self.comp_cache: dict = {}
        self.identity = tuple(frozenset([frozenset([("R" if side == "L" else "L", q)])]) for q, side in self.entries)

    def _get(self, beh, q, side):
        return beh[self.entries.index((q, side))]

    def of_letter(self, letter):
        got = self.letter_cache.get(letter)
        if got is not None:
            return got
        x = {q: DNF_FALSE for q in self.states}
        while True:
            def env(s, move):
                if move == 0:
                    return x[s]
                return frozenset([frozenset([("L" if move < 0 else "R", s)])])

            nxt = {q: _dnf(self.a.delta(q, letter), env) for q in self.states}
            if nxt == x:
                break
            x = nxt
        beh = tuple(x[q] for q, _ in self.entries)
        self.letter_cache[letter] = beh
        return beh

    def compose(self, f, g):
        key = (f, g)
        got = self.comp_cache.get(key)
        if got is not None:
            return got
        left = {q: DNF_FALSE for q in self.states}    # entering g from the left
        right = {q: DNF_FALSE for q in self.states}   # entering f from the right
        while True:
            def in_g(v):
                side, s = v
                return right[s] if side == "L" else frozenset([frozenset([("R", s)])])

            def in_f(v):
                side, s = v
                return left[s] if side == "R" else frozenset([frozenset([("L", s)])])

            new_left = {q: _subst(self._get(g, q, "L"), in_g) for q in self.states}
            new_right = {q: _subst(self._get(f, q, "R"), in_f) for q in self.states}
            if new_left == left and new_right == right:
                break
            left, right = new_left, new_right
        out = []
        for q, side in self.entries:
            if side == "L":
                out.append(_subst(self._get(f, q, "L"), in_f))
            else:
                out.append(_subst(self._get(g, q, "R"), in_g))
        out = tuple(out)
        self.comp_cache[key] = out
        return out

    def accepts(self, beh) -> bool:
        whole = self.compose(self.compose(self.of_letter(LEFT), beh), self.of_letter(RIGHT))
        return frozenset() in self._get(whole, self.a.initial, "L")


def decide_full_micro(a1: TwoAfa, a2: TwoAfa, budget: int = 20000) -> InclusionVerdict:
    """Complete inclusion test L(a1) ⊆ L(a2) for small automata.

    Words are grouped by the pair of their behaviors; the search closes over
    reachable pairs breadth first, so a refutation is a shortest word.  The
    budget caps the number of distinct pairs.
    """
    if a1.alphabet is None or a2.alphabet is None or set(a1.alphabet) != set(a2.alphabet):
        raise ValueError("automata must share a materialised alphabet")
    if a1.states is None or a2.states is None:
        raise ValueError("automata must list their states")
    letters = sorted(a1.alphabet, key=str)
    b1, b2 = _Behaviors(a1), _Behaviors(a2)
    start = (b1.identity, b2.identity)
    parent = {start: None}
    queue = deque([start])
    while queue:
        node = queue.popleft()
        f, g = node
        if b1.accepts(f) and not b2.accepts(g):
            word = []
            while parent[node] is not None:
                node, letter = parent[node]
                word.append(letter)
            return Refuted(tuple(reversed(word)))
        for letter in letters:
            nxt = (b1.compose(f, b1.of_letter(letter)), b2.compose(g, b2.of_letter(letter)))
            if nxt not in parent:
                if len(parent) >= budget:
                    return ExhaustedBound(budget, len(parent))
                parent[nxt] = (node, letter)
                queue.append(nxt)
    return Valid({"behavior_pairs": len(parent)})
