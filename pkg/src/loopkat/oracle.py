"""Brute-force ground truth over explicitly enumerated structures."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator

from .structure import Structure, class_violations, eval_matrix, _Matrices
from .term import Comp, ExtensionConfig, Id, Plus, Star, Term, TermError, Union, Var, Zero, bar_name, breve_name, desugar


@dataclass(frozen=True)
class OracleRefuted:
    structure: Structure
    pair: tuple


@dataclass(frozen=True)
class NoCounterexampleUpTo:
    max_vertices: int
    structures: int = 0


def _all_relations(n: int) -> list[frozenset]:
    square = [(p, q) for p in range(1, n + 1) for q in range(1, n + 1)]
    return [frozenset(pq for pq, bit in zip(square, bits) if bit) for bits in itertools.product((0, 1), repeat=len(square))]


def enumerate_structures(letters, max_vertices: int, cfg: ExtensionConfig | None = None) -> Iterator[Structure]:
    """All structures on ``1..n`` for n up to ``max_vertices``.

    With a config, complement letters of tests and converse partners are
    derived from their base letters, and every emitted structure is
    re-checked against the class conditions.
    """
    if max_vertices < 1:
        raise ValueError("max_vertices must be at least 1")
    if cfg is None:
        cfg = ExtensionConfig(tuple(letters), reserved=False)
    elif letters:
        extra = set(letters) - set(cfg.user_letters)
        if extra:
            raise ValueError(f"letters {sorted(extra)} are not in the configuration")
    free = list(cfg.letters)
    for n in range(1, max_vertices + 1):
        verts = tuple(range(1, n + 1))
        diag = frozenset((x, x) for x in verts)
        rels = _all_relations(n)
        for combo in itertools.product(rels, repeat=len(free)):
            edges = dict(zip(free, combo))
            if any(not edges[b] <= diag for b in cfg.tests):
                continue
            if any(len(edges[l]) != 1 or not edges[l] <= diag for l in cfg.nominals):
                continue
            for b in cfg.tests:
                edges[bar_name(b)] = diag - edges[b]
            for c in cfg.converse:
                edges[breve_name(c)] = frozenset((v, u) for u, v in edges[c])
            s = Structure(verts, edges)
            if class_violations(s, cfg):
                raise AssertionError("enumeration emitted a structure outside the class")
            yield s


def oracle_decide(t1: Term, t2: Term, cfg: ExtensionConfig, max_vertices: int) -> OracleRefuted | NoCounterexampleUpTo:
    """Search every structure up to the bound for a pair in t1 but not in t2."""
    d1, d2 = desugar(t1, cfg), desugar(t2, cfg)
    count = 0
    for s in enumerate_structures((), max_vertices, cfg):
        count += 1
        mats = _Matrices(s)
        m1 = eval_matrix(mats, d1)
        if not m1.any():
            continue
        diff = m1 & ~eval_matrix(mats, d2)
        if diff.any():
            i, j = (int(v) for v in next(zip(*diff.nonzero())))
            return OracleRefuted(s, (s.vertices[i], s.vertices[j]))
    return NoCounterexampleUpTo(max_vertices, count)


def brute_language_upto(t: Term, max_len: int) -> set[tuple]:
    """Words of length at most ``max_len`` in a regular expression, as tuples."""

    def go(t: Term) -> set:
        if isinstance(t, Var):
            return {(t.name,)} if max_len >= 1 else set()
        if isinstance(t, Zero):
            return set()
        if isinstance(t, Id):
            return {()}
        if isinstance(t, Union):
            return go(t.left) | go(t.right)
        if isinstance(t, Comp):
            left, right = go(t.left), go(t.right)
            return {u + v for u in left for v in right if len(u) + len(v) <= max_len}
        if isinstance(t, Plus):
            return go(Comp(t.body, Star(t.body)))
        if isinstance(t, Star):
            body = go(t.body)
            out = {()}
            frontier = {()}
            while frontier:
                new = {u + v for u in frontier for v in body if v and len(u) + len(v) <= max_len} - out
                out |= new
                frontier = new
            return out
        raise TermError(f"{type(t).__name__} is outside the regular fragment")

    return go(t)
