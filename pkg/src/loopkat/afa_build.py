"""Two-way alternating automata over decomposition strings.

``build_lambda`` reads one block per tape cell and computes the run relation
of a loop-automaton along the string.  A state ``("ok", x, p, y, q)`` at cell
j claims a decomposed run from p at the class of (j, x) to q at the class of
(j, y); ``("?", ...)`` is the same claim before checking that x and y belong
to the block.

``build_lambda_bin`` does the same over the bit encoding: block-level states
sit on the first bit of a block, bit tests are delegated to shared probe
states that walk forward a fixed number of cells, and moving to a
neighbouring block is a walk of one block length carrying the claim.
"""
from __future__ import annotations

import itertools
from typing import Iterable, Sequence

from .loop_automaton import LoopAutomaton
from .structure import Block, block_length, edge_offset, universe_offset
from .term import RESERVED_TOP, ExtensionConfig
from .two_afa import FALSE, LEFT, RIGHT, TRUE, And, Atom, Const, Formula, Or, TwoAfa, conj, disj

BITS = ("0", "1")


def _letters(letters) -> tuple[str, ...]:
    if isinstance(letters, ExtensionConfig):
        return letters.working
    return tuple(letters)


class _Tables:
    """Transition tables of a loop-automaton indexed by state pairs."""

    def __init__(self, a: LoopAutomaton):
        self.a = a
        self.labels: dict[tuple, list[str]] = {}
        for letter in sorted(a.letter_edges):
            for pq in a.letter_edges[letter]:
                self.labels.setdefault(pq, []).append(letter)
        self.ids = set(a.id_edges)
        self.loops: dict[tuple, list[tuple]] = {}
        for inner in sorted(a.loop_edges):
            for pq in a.loop_edges[inner]:
                self.loops.setdefault(pq, []).append(inner)


def _check_k(k: int) -> None:
    if k < 2:
        raise ValueError("k must be at least 2")


# ---------------------------------------------------------------------------
# over the block alphabet


def build_lambda(k: int, a: LoopAutomaton) -> TwoAfa:
    _check_k(k)
    tb = _Tables(a)
    states = a.states
    verts = range(1, k + 1)

    def delta(s, letter) -> Formula:
        if s == "init":
            if letter == LEFT:
                return disj(Atom(("?", x, a.source, y, a.target), 1) for x in verts for y in verts)
            return FALSE
        if not isinstance(letter, Block):
            return FALSE
        mark, x, p, y, q = s
        uni = letter.universe
        if mark == "?":
            return Atom(("ok", x, p, y, q), 0) if x in uni and y in uni else FALSE
        items: list[Formula] = []
        if x == y and p == q and x in uni:
            items.append(TRUE)
        for z in sorted(uni):
            for r in states:
                items.append(And((Atom(("ok", x, p, z, r), 0), Atom(("ok", z, r, y, q), 0))))
        if any((x, y) in letter.rel(b) for b in tb.labels.get((p, q), ())):
            items.append(TRUE)
        if (p, q) in tb.ids and x == y and x in uni:
            items.append(TRUE)
        if x == y:
            for p1, q1 in tb.loops.get((p, q), ()):
                items.append(Atom(("ok", x, p1, x, q1), 0))
        items.append(Atom(("?", x, p, y, q), 1))
        items.append(Atom(("?", x, p, y, q), -1))
        return disj(items)

    def all_states():
        yield "init"
        for mark in ("?", "ok"):
            for x, p, y, q in itertools.product(verts, states, verts, states):
                yield (mark, x, p, y, q)

    return TwoAfa("init", delta, None, all_states, name="lambda")


def lambda_state_count(k: int, a: LoopAutomaton) -> int:
    return 1 + 2 * (k * len(a.states)) ** 2


# ---------------------------------------------------------------------------
# probes shared by the binary automata


def _p(bit: int, j: int) -> Atom:
    """Holds when the cell j steps to the right of here carries ``bit``."""
    return Atom(("probe", bit, j), 0)


def _probe_delta(s, letter) -> Formula:
    _, bit, j = s
    if letter not in BITS:
        return FALSE
    if j > 0:
        return Atom(("probe", bit, j - 1), 1)
    return TRUE if letter == BITS[bit] else FALSE


def _probe_states(max_j: int):
    for bit in (0, 1):
        for j in range(max_j + 1):
            yield ("probe", bit, j)


def _walk_delta(s, letter, length: int) -> Formula:
    """``("adv", target, i)``: i cells of a block walked, continue to target."""
    _, target, i = s
    if letter not in BITS:
        return FALSE
    if i < length - 1:
        return Atom(("adv", target, i + 1), 1)
    return Atom(target, 1)


class _Valid:
    """Formula pieces recognising well-formed block encodings."""

    def __init__(self, k: int, m: int):
        self.k = k
        self.m = m
        self.length = block_length(k, m)
        per_vertex = []
        for x in range(1, k + 1):
            offs = sorted(
                {edge_offset(k, i, x, y) for i in range(m) for y in range(1, k + 1)}
                | {edge_offset(k, i, y, x) for i in range(m) for y in range(1, k + 1)}
            )
            per_vertex.append(disj([_p(1, universe_offset(x)), conj(_p(0, o) for o in offs)]))
        self.block_ok = conj(
            [
                disj(_p(1, universe_offset(x)) for x in range(1, k + 1)),
                conj(per_vertex),
                Atom(("adv", ("vnext",), 1), 1),
            ]
        )

    def delta(self, s, letter) -> Formula | None:
        tag = s[0]
        if tag == "vblk":
            return self.block_ok if letter in BITS else FALSE
        if tag == "vnext":
            if letter == RIGHT:
                return TRUE
            return self.block_ok if letter in BITS else FALSE
        return None

    def states(self):
        yield ("vblk",)
        yield ("vnext",)
        for i in range(1, self.length):
            yield ("adv", ("vnext",), i)


def valid_encoding_afa(k: int, letters) -> TwoAfa:
    """Accepts exactly the codes of nonempty strings of blocks over 1..k."""
    _check_k(k)
    letters = _letters(letters)
    v = _Valid(k, len(letters))
    length = v.length

    def delta(s, letter):
        if s == ("init",):
            return Atom(("vblk",), 1) if letter == LEFT else FALSE
        if s[0] == "probe":
            return _probe_delta(s, letter)
        if s[0] == "adv":
            return _walk_delta(s, letter, length)
        return v.delta(s, letter)

    def states():
        yield ("init",)
        yield from v.states()
        yield from _probe_states(length - 1)

    return TwoAfa(("init",), delta, BITS, states, name="valid")


# ---------------------------------------------------------------------------
# binary version of the run automaton


def build_lambda_bin(k: int, letters, a: LoopAutomaton) -> TwoAfa:
    _check_k(k)
    letters = _letters(letters)
    m = len(letters)
    length = block_length(k, m)
    index = {x: i for i, x in enumerate(letters)}
    tb = _Tables(a)
    states = a.states
    verts = range(1, k + 1)
    valid = _Valid(k, m)

    def chk(x, p, y, q) -> Formula:
        items: list[Formula] = []
        if x == y and p == q:
            items.append(_p(1, universe_offset(x)))
        for z in verts:
            for r in states:
                items.append(And((_p(1, universe_offset(z)), Atom(("chk", x, p, z, r), 0), Atom(("chk", z, r, y, q), 0))))
        for b in tb.labels.get((p, q), ()):
            if b in index:
                items.append(_p(1, edge_offset(k, index[b], x, y)))
        if (p, q) in tb.ids and x == y:
            items.append(_p(1, universe_offset(x)))
        if x == y:
            for p1, q1 in tb.loops.get((p, q), ()):
                items.append(Atom(("chk", x, p1, x, q1), 0))
        items.append(Atom(("walk", 1, 1, x, p, y, q), 1))
        items.append(Atom(("walk", -1, 1, x, p, y, q), -1))
        return Or(tuple(items))

    def delta(s, letter) -> Formula:
        tag = s[0]
        if tag == "init":
            if letter != LEFT:
                return FALSE
            start = Or(tuple(Atom(("que", x, a.source, y, a.target), 1) for x in verts for y in verts))
            return And((start, Atom(("vblk",), 1)))
        if letter not in BITS:
            if tag == "vnext" and letter == RIGHT:
                return TRUE
            return FALSE
        if tag == "chk":
            return chk(*s[1:])
        if tag == "walk":
            _, d, i, x, p, y, q = s
            if i < length - 1:
                return Atom(("walk", d, i + 1, x, p, y, q), d)
            return Atom(("que", x, p, y, q), d)
        if tag == "que":
            _, x, p, y, q = s
            return And((_p(1, universe_offset(x)), _p(1, universe_offset(y)), Atom(("chk", x, p, y, q), 0)))
        if tag == "probe":
            return _probe_delta(s, letter)
        if tag == "adv":
            return _walk_delta(s, letter, length)
        out = valid.delta(s, letter)
        if out is None:
            raise KeyError(s)
        return out

    def all_states():
        yield ("init",)
        quads = list(itertools.product(verts, states, verts, states))
        for t in quads:
            yield ("chk", *t)
        for t in quads:
            yield ("que", *t)
        for d in (1, -1):
            for i in range(1, length):
                for t in quads:
                    yield ("walk", d, i, *t)
        yield from _probe_states(length - 1)
        yield from valid.states()

    return TwoAfa(("init",), delta, BITS, all_states, name="lambda-bin")


def lambda_bin_autolen_closed_form(k: int, letters, a: LoopAutomaton) -> int:
    """Size of :func:`build_lambda_bin` computed from counts alone."""
    letters = _letters(letters)
    m = len(letters)
    L = block_length(k, m)
    nq = len(a.states)
    tb = _Tables(a)
    kq = k * nq
    pairs = kq * kq
    total = 0
    total += (3 * k * k + 2) + 3                       # initial state row
    # checked claims: one disjunction per bit, false on both endmarkers
    chk = 0
    for p, q in itertools.product(a.states, repeat=2):
        n_letters = sum(1 for b in tb.labels.get((p, q), ()) if b in letters)
        n_loops = len(tb.loops.get((p, q), ()))
        has_id = (p, q) in tb.ids
        for same_x in (True, False):
            mult = k if same_x else k * (k - 1)
            atoms_ = n_letters + 2
            items = kq + n_letters + 2
            if same_x:
                atoms_ += n_loops + int(has_id) + int(p == q)
                items += n_loops + int(has_id) + int(p == q)
            size = 2 * atoms_ + 8 * kq + items - 1
            chk += mult * (2 * size + 2)
    total += chk
    total += pairs * 18                                # unchecked claims
    total += 2 * (L - 1) * pairs * 6                   # walks between blocks
    total += 2 * ((L - 1) * 6 + 4)                     # probes
    n_x = m * (2 * k - 1)
    v = 3 * k * n_x + 6 * k + 2
    total += (2 * v + 2) * 2                           # block check and next-block check
    total += (L - 1) * 6                               # validity walk
    return total


# ---------------------------------------------------------------------------
# filters


class _ScanFilter:
    """Shared skeleton: guess a block by scanning, then test a local property.

    ``here`` maps a scanning state to the formula checked at the current block
    start; ``extra`` handles additional block-level states.
    """

    def __init__(self, name: str, k: int, m: int, starts: list, here: dict, extra=None, max_probe: int | None = None):
        self.name = name
        self.k = k
        self.length = block_length(k, m)
        self.valid = _Valid(k, m)
        self.starts = starts
        self.here = here
        self.extra = extra
        self.max_probe = max_probe if max_probe is not None else 2 * self.length - 1

    def delta(self, s, letter) -> Formula:
        tag = s[0]
        if tag == "init":
            if letter != LEFT:
                return FALSE
            return conj([Atom(("vblk",), 1), disj(Atom(t, 1) for t in self.starts)])
        if tag == "probe":
            return _probe_delta(s, letter)
        if tag == "adv":
            return _walk_delta(s, letter, self.length)
        out = self.valid.delta(s, letter)
        if out is not None:
            return out
        if letter not in BITS:
            if self.extra is not None:
                f = self.extra(s, letter)
                if f is not None:
                    return f
            return FALSE
        if s in self.here:
            return disj([self.here[s], Atom(("adv", s, 1), 1)])
        if self.extra is not None:
            f = self.extra(s, letter)
            if f is not None:
                return f
        raise KeyError(s)

    def afa(self, extra_states: Iterable = ()) -> TwoAfa:
        extra_states = list(extra_states)
        block_states = list(self.here) + extra_states

        def states():
            yield ("init",)
            yield from self.valid.states()
            yield from _probe_states(self.max_probe)
            yield from block_states
            for s in block_states:
                for i in range(1, self.length):
                    yield ("adv", s, i)

        return TwoAfa(("init",), self.delta, BITS, states, name=self.name)


def _inac(k, m) -> TwoAfa:
    L = block_length(k, m)
    here = conj(
        [disj([_p(0, L), _p(1, L)])]
        + [disj([_p(0, universe_offset(x)), _p(0, L + universe_offset(x))]) for x in range(1, k + 1)]
    )
    s = ("scan", "Inac")
    return _ScanFilter("Inac", k, m, [s], {s: here}).afa()


def _incon(k, m) -> TwoAfa:
    L = block_length(k, m)
    items = []
    for i in range(m):
        for x in range(1, k + 1):
            for y in range(1, k + 1):
                e = edge_offset(k, i, x, y)
                ux, uy = universe_offset(x), universe_offset(y)
                items.append(
                    conj(
                        [
                            _p(1, ux),
                            _p(1, uy),
                            _p(1, L + ux),
                            _p(1, L + uy),
                            disj([conj([_p(1, e), _p(0, L + e)]), conj([_p(0, e), _p(1, L + e)])]),
                        ]
                    )
                )
    s = ("scan", "Incon")
    return _ScanFilter("Incon", k, m, [s], {s: disj(items)}).afa()


def _top(k, m, ti) -> TwoAfa:
    items = [
        conj([_p(1, universe_offset(x)), _p(1, universe_offset(y)), _p(0, edge_offset(k, ti, x, y))])
        for x in range(1, k + 1)
        for y in range(1, k + 1)
    ]
    s = ("scan", "Top")
    return _ScanFilter("Top", k, m, [s], {s: disj(items)}, max_probe=block_length(k, m) - 1).afa()


def _test(k, m, pairs) -> TwoAfa:
    items = []
    for bi, bbi in pairs:
        for x in range(1, k + 1):
            for y in range(1, k + 1):
                e, eb = edge_offset(k, bi, x, y), edge_offset(k, bbi, x, y)
                if x == y:
                    items.append(conj([_p(1, universe_offset(x)), _p(0, e), _p(0, eb)]))
                    items.append(conj([_p(1, e), _p(1, eb)]))
                else:
                    items.append(_p(1, e))
                    items.append(_p(1, eb))
    s = ("scan", "Test")
    return _ScanFilter("Test", k, m, [s], {s: disj(items)}, max_probe=block_length(k, m) - 1).afa()


def _conv(k, m, pairs) -> TwoAfa:
    items = []
    for ci, cci in pairs:
        for x in range(1, k + 1):
            for y in range(1, k + 1):
                e, ec = edge_offset(k, ci, x, y), edge_offset(k, cci, y, x)
                items.append(disj([conj([_p(1, e), _p(0, ec)]), conj([_p(0, e), _p(1, ec)])]))
    s = ("scan", "Conv")
    return _ScanFilter("Conv", k, m, [s], {s: disj(items)}, max_probe=block_length(k, m) - 1).afa()


def _nom(k, m, nominal_indices) -> TwoAfa:
    L = block_length(k, m)
    verts = range(1, k + 1)
    here = {}
    starts = []
    tracks = []
    for li in nominal_indices:
        def e(x, y, li=li):
            return edge_offset(k, li, x, y)

        off = ("scan", "Nom-off", li)
        here[off] = disj(_p(1, e(x, y)) for x in verts for y in verts if x != y)
        pair = ("scan", "Nom-pair", li)
        here[pair] = disj(
            [conj([_p(1, e(x, x)), _p(1, e(y, y))]) for x in verts for y in verts if x != y]
            + [conj([_p(1, e(x, x)), Atom(("adv", ("track", li, x, False), 1), 1)]) for x in verts]
        )
        starts += [("empty", li), off, pair]
        tracks += [("track", li, x, f) for x in verts for f in (False, True)]

    def extra(s, letter):
        tag = s[0]
        if tag == "empty":
            li = s[1]
            if letter == RIGHT:
                return TRUE if s[2:] == ("next",) else FALSE
            if letter not in BITS:
                return FALSE
            return conj([conj(_p(0, edge_offset(k, li, x, y)) for x in verts for y in verts), Atom(("adv", ("empty", li, "next"), 1), 1)])
        if tag == "track":
            if letter not in BITS:
                return FALSE
            _, li, x, f = s
            items = [_p(1, edge_offset(k, li, y, y)) for y in verts if y != x]
            if f:
                items.append(_p(1, edge_offset(k, li, x, x)))
            items.append(Atom(("adv", s, 1), 1))
            if not f:
                items.append(conj([_p(0, universe_offset(x)), Atom(("adv", ("track", li, x, True), 1), 1)]))
            return disj(items)
        return None

    empties = []
    for li in nominal_indices:
        empties += [("empty", li), ("empty", li, "next")]
    return _ScanFilter("Nom", k, m, starts, here, extra, max_probe=L - 1).afa(empties + tracks)


def build_filter_afas(k: int, cfg: ExtensionConfig, enabled: Iterable[str] | None = None) -> list[TwoAfa]:
    """One automaton per enabled filter, each accepting the codes violating it."""
    _check_k(k)
    letters = cfg.working
    m = len(letters)
    index = {x: i for i, x in enumerate(letters)}
    if enabled is None:
        enabled = ["Inac", "Incon"]
        if RESERVED_TOP in index:
            enabled.append("Top")
        if cfg.tests:
            enabled.append("Test")
        if cfg.converse:
            enabled.append("Conv")
        if cfg.nominals:
            enabled.append("Nom")
    out = []
    for name in enabled:
        if name == "Inac":
            out.append(_inac(k, m))
        elif name == "Incon":
            out.append(_incon(k, m))
        elif name == "Top":
            out.append(_top(k, m, index[RESERVED_TOP]))
        elif name == "Test":
            out.append(_test(k, m, [(index[b], index[bb]) for b, bb in cfg.test_pairs]))
        elif name == "Conv":
            out.append(_conv(k, m, [(index[c], index[cc]) for c, cc in cfg.converse_pairs]))
        elif name == "Nom":
            out.append(_nom(k, m, [index[l] for l in cfg.nominals]))
        else:
            raise ValueError(f"unknown filter {name!r}")
    return out


# ---------------------------------------------------------------------------
# union


def _rename(f: Formula, tag) -> Formula:
    if isinstance(f, Const):
        return f
    if isinstance(f, Atom):
        return Atom((tag, f.state), f.move)
    cls = And if isinstance(f, And) else Or
    return cls(tuple(_rename(x, tag) for x in f.items))


def union_afa(afas: Sequence[TwoAfa]) -> TwoAfa:
    afas = list(afas)
    if not afas:
        raise ValueError("union of no automata")
    alphabets = {a.alphabet for a in afas if a.alphabet is not None}
    if len(alphabets) > 1:
        raise ValueError("automata over different alphabets")
    alphabet = alphabets.pop() if alphabets else None
    init = ("union",)
    first = disj(_rename(a.delta(a.initial, LEFT), i) for i, a in enumerate(afas))

    def delta(s, letter):
        if s == init:
            return first if letter == LEFT else FALSE
        i, inner = s
        return _rename(afas[i].delta(inner, letter), i)

    def states():
        yield init
        for i, a in enumerate(afas):
            for s in a.states():
                yield (i, s)

    listed = all(a.states is not None for a in afas)
    return TwoAfa(init, delta, alphabet, states if listed else None, name="union(" + ",".join(a.name for a in afas) + ")")
