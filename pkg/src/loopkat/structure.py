"""Finite relational structures, path-decomposition strings and their codes."""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Iterator, Mapping

import numpy as np

from .term import (
    RESERVED_TOP,
    Comp,
    ExtensionConfig,
    Id,
    Loop,
    Star,
    Term,
    Top,
    Union,
    Var,
    Zero,
)

Pair = tuple[Hashable, Hashable]


def _freeze_edges(edges: Mapping[str, Iterable[Pair]]) -> dict[str, frozenset]:
    out = {}
    for a, rel in edges.items():
        rel = frozenset((u, v) for u, v in rel)
        if rel:
            out[a] = rel
    return out


@dataclass(frozen=True)
class Structure:
    """Nonempty vertex set with one binary relation per letter.

    Letters missing from ``edges`` denote the empty relation.
    """

    vertices: tuple
    edges: Mapping[str, frozenset] = field(default_factory=dict)

    def __post_init__(self):
        verts = tuple(self.vertices)
        if not verts:
            raise ValueError("a structure needs at least one vertex")
        if len(set(verts)) != len(verts):
            raise ValueError("duplicate vertex names")
        edges = _freeze_edges(self.edges)
        vs = set(verts)
        for a, rel in edges.items():
            for u, v in rel:
                if u not in vs or v not in vs:
                    raise ValueError(f"edge {a}:{u}->{v} leaves the universe")
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "edges", edges)

    def rel(self, a: str) -> frozenset:
        return self.edges.get(a, frozenset())

    @property
    def letters(self) -> tuple[str, ...]:
        return tuple(sorted(self.edges))

    def __hash__(self):
        return hash((self.vertices, tuple(sorted((a, tuple(sorted(map(repr, r)))) for a, r in self.edges.items()))))

    def to_json(self) -> dict:
        return {
            "vertices": [_jsonable(v) for v in self.vertices],
            "edges": {a: sorted([_jsonable(u), _jsonable(v)] for u, v in sorted(r, key=repr)) for a, r in self.edges.items()},
        }

    @classmethod
    def from_json(cls, data: dict) -> "Structure":
        verts = tuple(_from_jsonable(v) for v in data["vertices"])
        edges = {a: [(_from_jsonable(u), _from_jsonable(v)) for u, v in rel] for a, rel in data.get("edges", {}).items()}
        return cls(verts, edges)


def _jsonable(v):
    return list(v) if isinstance(v, tuple) else v


def _from_jsonable(v):
    return tuple(v) if isinstance(v, list) else v


@dataclass(frozen=True)
class Block:
    """A structure whose universe is a nonempty subset of ``1..k``."""

    k: int
    universe: frozenset
    edges: Mapping[str, frozenset] = field(default_factory=dict)

    def __post_init__(self):
        uni = frozenset(self.universe)
        if not uni:
            raise ValueError("a block needs a nonempty universe")
        if not all(isinstance(x, int) and 1 <= x <= self.k for x in uni):
            raise ValueError(f"universe {sorted(uni)} is not inside 1..{self.k}")
        edges = _freeze_edges(self.edges)
        for a, rel in edges.items():
            for u, v in rel:
                if u not in uni or v not in uni:
                    raise ValueError(f"edge {a}:{u}->{v} leaves the universe")
        object.__setattr__(self, "universe", uni)
        object.__setattr__(self, "edges", edges)

    def rel(self, a: str) -> frozenset:
        return self.edges.get(a, frozenset())

    def __hash__(self):
        return hash((self.k, self.universe, frozenset(self.edges.items())))

    def __eq__(self, other):
        return (
            isinstance(other, Block)
            and self.k == other.k
            and self.universe == other.universe
            and self.edges == other.edges
        )

    def as_structure(self) -> Structure:
        return Structure(tuple(sorted(self.universe)), self.edges)

    def with_edges(self, extra: Mapping[str, Iterable[Pair]]) -> "Block":
        edges = {a: set(r) for a, r in self.edges.items()}
        for a, r in extra.items():
            edges.setdefault(a, set()).update(r)
        return Block(self.k, self.universe, edges)

    def to_json(self) -> dict:
        return {
            "k": self.k,
            "universe": sorted(self.universe),
            "edges": {a: sorted([u, v] for u, v in r) for a, r in sorted(self.edges.items())},
        }

    @classmethod
    def from_json(cls, data: dict, k: int | None = None) -> "Block":
        kk = data.get("k", k)
        if kk is None:
            raise ValueError("block without k")
        edges = {a: [tuple(p) for p in rel] for a, rel in data.get("edges", {}).items()}
        return cls(int(kk), frozenset(data["universe"]), edges)


@dataclass(frozen=True)
class DecompString:
    blocks: tuple[Block, ...]

    def __post_init__(self):
        blocks = tuple(self.blocks)
        if not blocks:
            raise ValueError("a decomposition string needs at least one block")
        ks = {b.k for b in blocks}
        if len(ks) != 1:
            raise ValueError(f"blocks disagree on k: {sorted(ks)}")
        object.__setattr__(self, "blocks", blocks)

    @property
    def k(self) -> int:
        return self.blocks[0].k

    def __len__(self):
        return len(self.blocks)

    def __iter__(self):
        return iter(self.blocks)

    def __getitem__(self, i):
        return self.blocks[i]

    def to_json(self) -> list:
        return [b.to_json() for b in self.blocks]

    @classmethod
    def from_json(cls, data) -> "DecompString":
        if isinstance(data, dict):
            data = data["blocks"]
        return cls(tuple(Block.from_json(b) for b in data))


@dataclass(frozen=True)
class GluedStructure:
    """Gluing of a decomposition string.

    Vertices are canonical class names ``(i, x)``: the first (1-based) block
    index holding the class together with the vertex name there.
    """

    structure: Structure
    class_of: Mapping[tuple[int, int], tuple[int, int]]
    block_classes: tuple[frozenset, ...]

    @property
    def vertices(self):
        return self.structure.vertices


def glue(w: DecompString) -> GluedStructure:
    class_of: dict[tuple[int, int], tuple[int, int]] = {}
    prev: Block | None = None
    order: list[tuple[int, int]] = []
    edges: dict[str, set] = {}
    block_classes = []
    for i, blk in enumerate(w.blocks, start=1):
        for x in sorted(blk.universe):
            if prev is not None and x in prev.universe:
                class_of[(i, x)] = class_of[(i - 1, x)]
            else:
                class_of[(i, x)] = (i, x)
                order.append((i, x))
        for a, rel in blk.edges.items():
            tgt = edges.setdefault(a, set())
            for u, v in rel:
                tgt.add((class_of[(i, u)], class_of[(i, v)]))
        block_classes.append(frozenset(class_of[(i, x)] for x in blk.universe))
        prev = blk
    return GluedStructure(Structure(tuple(order), edges), class_of, tuple(block_classes))


# ---------------------------------------------------------------------------
# semantics


class _Matrices:
    """Boolean adjacency matrices of a structure, built lazily per letter."""

    def __init__(self, s: Structure):
        self.s = s
        self.index = {v: i for i, v in enumerate(s.vertices)}
        self.n = len(s.vertices)
        self.cache: dict[str, np.ndarray] = {}

    def letter(self, a: str) -> np.ndarray:
        m = self.cache.get(a)
        if m is None:
            m = np.zeros((self.n, self.n), dtype=bool)
            for u, v in self.s.rel(a):
                m[self.index[u], self.index[v]] = True
            self.cache[a] = m
        return m


def bool_mul(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    # float32 goes through BLAS; counts stay exact far beyond our sizes
    return (x.astype(np.float32) @ y.astype(np.float32)) > 0


def reflexive_transitive_closure(m: np.ndarray) -> np.ndarray:
    c = m | np.eye(m.shape[0], dtype=bool)
    while True:
        nxt = bool_mul(c, c)
        if np.array_equal(nxt, c):
            return c
        c = nxt


def eval_matrix(s: Structure | _Matrices, t: Term) -> np.ndarray:
    mats = s if isinstance(s, _Matrices) else _Matrices(s)
    n = mats.n

    def go(t: Term) -> np.ndarray:
        if isinstance(t, Var):
            return mats.letter(t.name)
        if isinstance(t, Zero):
            return np.zeros((n, n), dtype=bool)
        if isinstance(t, Id):
            return np.eye(n, dtype=bool)
        if isinstance(t, Top):
            return np.ones((n, n), dtype=bool)
        if isinstance(t, Union):
            return go(t.left) | go(t.right)
        if isinstance(t, Comp):
            return bool_mul(go(t.left), go(t.right))
        if isinstance(t, Star):
            return reflexive_transitive_closure(go(t.body))
        if isinstance(t, Loop):
            return go(t.body) & np.eye(n, dtype=bool)
        raise ValueError(f"term node {type(t).__name__} must be desugared before evaluation")

    return go(t)


def eval_term(s: Structure, t: Term) -> frozenset:
    """Relation denoted by a desugared term; top is the full relation."""
    m = eval_matrix(s, t)
    vs = s.vertices
    return frozenset((vs[i], vs[j]) for i, j in zip(*np.nonzero(m)))


# ---------------------------------------------------------------------------
# enumeration and binary code


def _letters(letters) -> tuple[str, ...]:
    if isinstance(letters, ExtensionConfig):
        return letters.working
    return tuple(letters)


def block_length(k: int, m: int) -> int:
    return k + m * k * k


def universe_offset(x: int) -> int:
    """0-based position of the universe bit of vertex x (1-based)."""
    return x - 1


def edge_offset(k: int, letter_index: int, p: int, q: int) -> int:
    """0-based position of the bit for (p, q) in the relation of a letter.

    Within a letter the pair (p, q) is the ((p-1)k + q)-th bit, counting from 1.
    """
    return k + letter_index * k * k + (p - 1) * k + (q - 1)


def encode_block(b: Block, letters) -> str:
    letters = _letters(letters)
    k = b.k
    extra = set(b.edges) - set(letters)
    if extra:
        raise ValueError(f"block uses letters outside the alphabet: {sorted(extra)}")
    bits = ["0"] * block_length(k, len(letters))
    for x in b.universe:
        bits[universe_offset(x)] = "1"
    for i, a in enumerate(letters):
        for p, q in b.rel(a):
            bits[edge_offset(k, i, p, q)] = "1"
    return "".join(bits)


def encode_string(w: DecompString, letters) -> str:
    return "".join(encode_block(b, letters) for b in w.blocks)


class DecodeError(ValueError):
    pass


def decode_block(bits: str, k: int, letters) -> Block:
    letters = _letters(letters)
    bits = "".join(ch for ch in bits if not ch.isspace())
    expected = block_length(k, len(letters))
    if len(bits) != expected:
        raise DecodeError(f"wrong length: expected {expected} bits, got {len(bits)}")
    if set(bits) - {"0", "1"}:
        raise DecodeError("bits must be 0 or 1")
    universe = {x for x in range(1, k + 1) if bits[universe_offset(x)] == "1"}
    if not universe:
        raise DecodeError("empty universe")
    edges: dict[str, set] = {}
    for i, a in enumerate(letters):
        for p in range(1, k + 1):
            for q in range(1, k + 1):
                if bits[edge_offset(k, i, p, q)] == "1":
                    if p not in universe or q not in universe:
                        raise DecodeError(f"edge bit for {a}:{p}->{q} set outside the universe")
                    edges.setdefault(a, set()).add((p, q))
    return Block(k, frozenset(universe), edges)


def decode_string(bits: str, k: int, letters) -> DecompString:
    letters = _letters(letters)
    bits = "".join(ch for ch in bits if not ch.isspace())
    size = block_length(k, len(letters))
    if not bits or len(bits) % size:
        raise DecodeError(f"length {len(bits)} is not a positive multiple of {size}")
    return DecompString(tuple(decode_block(bits[i : i + size], k, letters) for i in range(0, len(bits), size)))


def enumerate_blocks(k: int, letters) -> Iterator[Block]:
    """Every block over 1..k, in lexicographic order of its binary code."""
    if k < 1:
        raise ValueError("k must be at least 1")
    letters = _letters(letters)
    for ubits in itertools.product((0, 1), repeat=k):
        universe = [x for x in range(1, k + 1) if ubits[x - 1]]
        if not universe:
            continue
        square = [(p, q) for p in range(1, k + 1) for q in range(1, k + 1) if ubits[p - 1] and ubits[q - 1]]
        slots = [(a, pq) for a in letters for pq in square]
        for ebits in itertools.product((0, 1), repeat=len(slots)):
            edges: dict[str, set] = {}
            for bit, (a, pq) in zip(ebits, slots):
                if bit:
                    edges.setdefault(a, set()).add(pq)
            yield Block(k, frozenset(universe), edges)


# ---------------------------------------------------------------------------
# class filters

FILTER_NAMES = ("Inac", "Incon", "Top", "Test", "Conv", "Nom")


def _restrict(rel: frozenset, keep: frozenset) -> frozenset:
    return frozenset((u, v) for u, v in rel if u in keep and v in keep)


def block_filter_violations(b: Block, cfg: ExtensionConfig) -> set[str]:
    """Per-block conditions (Top, Test, Conv and the diagonal part of Nom)."""
    out = set()
    diag = frozenset((x, x) for x in b.universe)
    if RESERVED_TOP in cfg.working:
        full = frozenset(itertools.product(b.universe, repeat=2))
        if b.rel(RESERVED_TOP) != full:
            out.add("Top")
    for t, tb in cfg.test_pairs:
        r, rb = b.rel(t), b.rel(tb)
        if r & rb or (r | rb) != diag:
            out.add("Test")
    for c, cc in cfg.converse_pairs:
        if frozenset((v, u) for u, v in b.rel(c)) != b.rel(cc):
            out.add("Conv")
    for l in cfg.nominals:
        r = b.rel(l)
        if not r <= diag or len(r) > 1:
            out.add("Nom")
    return out


def nominal_violated(w: DecompString, l: str) -> bool:
    blocks = w.blocks
    if all(not b.rel(l) for b in blocks):
        return True
    for b in blocks:
        if any(u != v for u, v in b.rel(l)):
            return True
    loops = [(i, u) for i, b in enumerate(blocks) for u, v in b.rel(l)]
    for i, x in loops:
        for j, y in loops:
            if j < i:
                continue
            if x != y:
                return True
            if any(x not in blocks[h].universe for h in range(i, j + 1)):
                return True
    return False


def block_filters(w: DecompString, cfg: ExtensionConfig) -> set[str]:
    """Names of the normalisation and class conditions violated by w."""
    out: set[str] = set()
    letters = cfg.working
    for b1, b2 in zip(w.blocks, w.blocks[1:]):
        shared = b1.universe & b2.universe
        if not shared:
            out.add("Inac")
        elif any(_restrict(b1.rel(a), shared) != _restrict(b2.rel(a), shared) for a in letters):
            out.add("Incon")
    for b in w.blocks:
        out |= block_filter_violations(b, cfg) - {"Nom"}
    if any(nominal_violated(w, l) for l in cfg.nominals):
        out.add("Nom")
    return out


def class_violations(s: Structure, cfg: ExtensionConfig) -> set[str]:
    """Test, converse and nominal conditions checked on a whole structure."""
    out = set()
    diag = frozenset((x, x) for x in s.vertices)
    for t, tb in cfg.test_pairs:
        r, rb = s.rel(t), s.rel(tb)
        if r & rb or (r | rb) != diag:
            out.add("Test")
    for c, cc in cfg.converse_pairs:
        if frozenset((v, u) for u, v in s.rel(c)) != s.rel(cc):
            out.add("Conv")
    for l in cfg.nominals:
        r = s.rel(l)
        if len(r) != 1 or not r <= diag:
            out.add("Nom")
    return out


def load_json(path) -> object:
    with open(path) as fh:
        return json.load(fh)
