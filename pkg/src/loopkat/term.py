"""Terms of Kleene algebra with graph loop, plus extension sugar.

The parser accepts an ASCII grammar::

    term   := sum
    sum    := seq ('|' seq)*
    seq    := post (';' post)*
    post   := atom ('*' | '+' | '^' | '~')*
    atom   := letter | '0' | 'id' | 'top' | '(' term ')'
            | 'not' '(' term ')' | 'dom' '(' term ')' | 'ran' '(' term ')'

Postfix operators bind tighter than ``;``, which binds tighter than ``|``.
``^`` is the graph loop (restriction to the identity part) and ``~`` is
converse.  Sugar nodes (Plus, Conv, NotTest, Dom, Ran) are removed by
:func:`desugar`.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence


class TermError(ValueError):
    """Raised for malformed terms or configuration misuse."""

    def __init__(self, message: str, position: int | None = None):
        self.position = position
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)


# ---------------------------------------------------------------------------
# syntax tree


class Term:
    __slots__ = ()

    def children(self) -> tuple["Term", ...]:
        return ()

    def __str__(self) -> str:
        return format_term(self)


@dataclass(frozen=True)
class Var(Term):
    name: str


@dataclass(frozen=True)
class Zero(Term):
    pass


@dataclass(frozen=True)
class Id(Term):
    pass


@dataclass(frozen=True)
class Top(Term):
    pass


@dataclass(frozen=True)
class Union(Term):
    left: Term
    right: Term

    def children(self):
        return (self.left, self.right)


@dataclass(frozen=True)
class Comp(Term):
    left: Term
    right: Term

    def children(self):
        return (self.left, self.right)


@dataclass(frozen=True)
class Star(Term):
    body: Term

    def children(self):
        return (self.body,)


@dataclass(frozen=True)
class Loop(Term):
    body: Term

    def children(self):
        return (self.body,)


@dataclass(frozen=True)
class Plus(Term):
    body: Term

    def children(self):
        return (self.body,)


@dataclass(frozen=True)
class Conv(Term):
    body: Term

    def children(self):
        return (self.body,)


@dataclass(frozen=True)
class NotTest(Term):
    body: Term

    def children(self):
        return (self.body,)


@dataclass(frozen=True)
class Dom(Term):
    body: Term

    def children(self):
        return (self.body,)


@dataclass(frozen=True)
class Ran(Term):
    body: Term

    def children(self):
        return (self.body,)


CORE_TYPES = (Var, Zero, Id, Top, Union, Comp, Star, Loop)
SUGAR_TYPES = (Plus, Conv, NotTest, Dom, Ran)

ZERO = Zero()
ID = Id()
TOP = Top()


def walk(t: Term) -> Iterator[Term]:
    """Pre-order traversal."""
    stack = [t]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(reversed(node.children()))


def letters_of(t: Term) -> set[str]:
    return {n.name for n in walk(t) if isinstance(n, Var)}


def is_core(t: Term) -> bool:
    return all(isinstance(n, CORE_TYPES) for n in walk(t))


def is_loop_free(t: Term) -> bool:
    """True when t is a plain regular expression (no loop, top or sugar)."""
    return all(isinstance(n, (Var, Zero, Id, Union, Comp, Star)) for n in walk(t))


def compose_all(terms: Sequence[Term]) -> Term:
    if not terms:
        return ID
    out = terms[0]
    for t in terms[1:]:
        out = Comp(out, t)
    return out


def union_all(terms: Sequence[Term]) -> Term:
    if not terms:
        return ZERO
    out = terms[0]
    for t in terms[1:]:
        out = Union(out, t)
    return out


# ---------------------------------------------------------------------------
# configuration

RESERVED_TOP = "$top"
RESERVED_LEFT = "$l"
RESERVED_RIGHT = "$r"
RESERVED = (RESERVED_TOP, RESERVED_LEFT, RESERVED_RIGHT)


def bar_name(b: str) -> str:
    """Name of the complement letter generated for test letter ``b``."""
    return f"!{b}"


def breve_name(c: str) -> str:
    """Name of the converse partner generated for letter ``c``."""
    return f"{c}~"


@dataclass(frozen=True)
class ExtensionConfig:
    """Alphabet plus declared extension letters.

    ``letters`` is the base alphabet in declaration order.  Test, converse and
    nominal letters are members of it (they are appended when missing).  The
    working alphabet adds one complement letter per test, one partner per
    converse letter and, when ``reserved`` is set, the three letters used by
    the decision wrapping (top encoding, left and right markers).
    """

    letters: tuple[str, ...] = ()
    tests: tuple[str, ...] = ()
    converse: tuple[str, ...] = ()
    nominals: tuple[str, ...] = ()
    reserved: bool = True
    working: tuple[str, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        base = list(dict.fromkeys(self.letters))
        for group in (self.tests, self.converse, self.nominals):
            for x in group:
                if x not in base:
                    base.append(x)
        for x in base:
            if x in RESERVED or x.startswith("!") or x.endswith("~"):
                raise TermError(f"letter name {x!r} is reserved")
        groups = [set(self.tests), set(self.converse), set(self.nominals)]
        for i in range(3):
            for j in range(i + 1, 3):
                common = groups[i] & groups[j]
                if common:
                    raise TermError(f"letters {sorted(common)} declared in two extension groups")
        object.__setattr__(self, "letters", tuple(base))
        object.__setattr__(self, "tests", tuple(dict.fromkeys(self.tests)))
        object.__setattr__(self, "converse", tuple(dict.fromkeys(self.converse)))
        object.__setattr__(self, "nominals", tuple(dict.fromkeys(self.nominals)))
        work = list(base)
        work += [bar_name(b) for b in self.tests]
        work += [breve_name(c) for c in self.converse]
        if self.reserved:
            work += list(RESERVED)
        object.__setattr__(self, "working", tuple(work))

    @property
    def m(self) -> int:
        return len(self.working)

    @property
    def has_extensions(self) -> bool:
        return bool(self.tests or self.converse or self.nominals)

    @property
    def test_pairs(self) -> tuple[tuple[str, str], ...]:
        return tuple((b, bar_name(b)) for b in self.tests)

    @property
    def converse_pairs(self) -> tuple[tuple[str, str], ...]:
        return tuple((c, breve_name(c)) for c in self.converse)

    @property
    def user_letters(self) -> tuple[str, ...]:
        """Working alphabet without the reserved letters."""
        return tuple(x for x in self.working if x not in RESERVED)

    def without_reserved(self) -> "ExtensionConfig":
        return ExtensionConfig(self.letters, self.tests, self.converse, self.nominals, reserved=False)

    def test_letters(self) -> set[str]:
        return set(self.tests) | {bar_name(b) for b in self.tests}

    @classmethod
    def infer(
        cls,
        texts: Iterable[str],
        tests: Iterable[str] = (),
        converse: Iterable[str] = (),
        nominals: Iterable[str] = (),
        reserved: bool = True,
    ) -> "ExtensionConfig":
        """Build a config whose base alphabet is every letter written in ``texts``."""
        seen: list[str] = []
        parts = [p for text in texts for p in re.split(r"<=|==", text)]
        for text in parts:
            for tok in _tokenize(text):
                if tok.kind == "ident" and tok.text not in KEYWORDS and tok.text not in seen:
                    seen.append(tok.text)
        return cls(tuple(seen), tuple(tests), tuple(converse), tuple(nominals), reserved)

    def to_json(self) -> dict:
        return {
            "letters": list(self.letters),
            "tests": list(self.tests),
            "converse": list(self.converse),
            "nominals": list(self.nominals),
        }

    @classmethod
    def from_json(cls, data: dict, reserved: bool = True) -> "ExtensionConfig":
        return cls(
            tuple(data.get("letters", ())),
            tuple(data.get("tests", ())),
            tuple(data.get("converse", ())),
            tuple(data.get("nominals", ())),
            reserved,
        )


# ---------------------------------------------------------------------------
# parser

KEYWORDS = {"id", "top", "not", "dom", "ran"}
_TOKEN = re.compile(r"\s*(?:(?P<ident>[A-Za-z_][A-Za-z0-9_]*)|(?P<zero>0)|(?P<sym>[|;*+^~()]))")


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    pos: int


def _tokenize(text: str) -> list[_Tok]:
    out = []
    i = 0
    n = len(text)
    while i < n:
        if text[i].isspace():
            i += 1
            continue
        m = _TOKEN.match(text, i)
        if not m or m.end() == i:
            raise TermError(f"unexpected character {text[i]!r}", i)
        kind = m.lastgroup
        start = m.start(kind)
        out.append(_Tok(kind, m.group(kind), start))
        i = m.end()
    out.append(_Tok("end", "", n))
    return out


class _Parser:
    def __init__(self, text: str, cfg: ExtensionConfig):
        self.toks = _tokenize(text)
        self.i = 0
        self.cfg = cfg
        self.allowed = set(cfg.letters)

    def peek(self) -> _Tok:
        return self.toks[self.i]

    def take(self) -> _Tok:
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, text: str) -> _Tok:
        tok = self.take()
        if tok.text != text or tok.kind == "end":
            raise TermError(f"expected {text!r}, found {tok.text or 'end of input'!r}", tok.pos)
        return tok

    def parse(self) -> Term:
        t = self.sum()
        tok = self.peek()
        if tok.kind != "end":
            raise TermError(f"unexpected token {tok.text!r}", tok.pos)
        return t

    def sum(self) -> Term:
        t = self.seq()
        while self.peek().text == "|":
            self.take()
            t = Union(t, self.seq())
        return t

    def seq(self) -> Term:
        t = self.post()
        while self.peek().text == ";":
            self.take()
            t = Comp(t, self.post())
        return t

    def post(self) -> Term:
        t = self.atom()
        while True:
            tok = self.peek()
            if tok.kind != "sym" or tok.text not in "*+^~":
                return t
            self.take()
            if tok.text == "*":
                t = Star(t)
            elif tok.text == "+":
                t = Plus(t)
            elif tok.text == "^":
                t = Loop(t)
            else:
                if not self.cfg.converse:
                    raise TermError("converse used but no converse letters declared", tok.pos)
                t = Conv(t)

    def atom(self) -> Term:
        tok = self.take()
        if tok.kind == "zero":
            return ZERO
        if tok.kind == "ident":
            if tok.text == "id":
                return ID
            if tok.text == "top":
                return TOP
            if tok.text in ("not", "dom", "ran"):
                self.expect("(")
                inner = self.sum()
                self.expect(")")
                if tok.text == "not":
                    bad = _non_test_reason(inner, self.cfg)
                    if bad:
                        raise TermError(f"not(...) applied outside a test: {bad}", tok.pos)
                    return NotTest(inner)
                return Dom(inner) if tok.text == "dom" else Ran(inner)
            if tok.text not in self.allowed:
                raise TermError(f"undeclared letter {tok.text!r}", tok.pos)
            return Var(tok.text)
        if tok.text == "(":
            t = self.sum()
            self.expect(")")
            return t
        raise TermError(f"unexpected token {tok.text or 'end of input'!r}", tok.pos)


def _non_test_reason(t: Term, cfg: ExtensionConfig) -> str | None:
    tests = cfg.test_letters()
    for n in walk(t):
        if isinstance(n, Var) and n.name not in tests:
            return f"letter {n.name!r} is not a test"
        if isinstance(n, (Star, Loop, Top, Plus, Conv, Dom, Ran)):
            return f"{type(n).__name__} is not allowed in a test"
    return None


def parse_term(text: str, cfg: ExtensionConfig) -> Term:
    return _Parser(text, cfg).parse()


def parse_comparison(text: str, cfg: ExtensionConfig) -> tuple[Term, str, Term]:
    """Split ``lhs <= rhs`` or ``lhs == rhs`` and parse both sides."""
    for op in ("<=", "=="):
        if op in text:
            lhs, rhs = text.split(op, 1)
            if "<=" in rhs or "==" in rhs:
                raise TermError("more than one comparison operator")
            return parse_term(lhs, cfg), op, parse_term(rhs, cfg)
    raise TermError("expected '<=' or '==' between two terms")


# ---------------------------------------------------------------------------
# printing

_PREC = {Union: 0, Comp: 1}


def format_term(t: Term) -> str:
    def go(t: Term, prec: int) -> str:
        if isinstance(t, Var):
            return t.name
        if isinstance(t, Zero):
            return "0"
        if isinstance(t, Id):
            return "id"
        if isinstance(t, Top):
            return "top"
        if isinstance(t, (Union, Comp)):
            p = _PREC[type(t)]
            sym = " | " if isinstance(t, Union) else ";"
            # both operators are associative semantically; right operands get
            # parenthesised only at lower precedence so reparse keeps the tree
            s = go(t.left, p) + sym + go(t.right, p + 1)
            return f"({s})" if p < prec else s
        if isinstance(t, NotTest):
            return f"not({go(t.body, 0)})"
        if isinstance(t, Dom):
            return f"dom({go(t.body, 0)})"
        if isinstance(t, Ran):
            return f"ran({go(t.body, 0)})"
        mark = {Star: "*", Plus: "+", Loop: "^", Conv: "~"}[type(t)]
        return go(t.body, 2) + mark

    return go(t, 0)


# ---------------------------------------------------------------------------
# measures


def term_size(t: Term) -> int:
    """Number of symbols: every node of the tree, operators included."""
    return sum(1 for _ in walk(t))


def intersection_width(t: Term) -> int:
    if isinstance(t, (Var, Zero, Id, Top)):
        return 1
    if isinstance(t, (Union, Comp)):
        return max(intersection_width(t.left), intersection_width(t.right))
    if isinstance(t, Loop):
        return intersection_width(t.body) + 1
    if isinstance(t, (Star, Plus, Conv, NotTest)):
        return intersection_width(t.body)
    if isinstance(t, (Dom, Ran)):
        # encoded as (t ; top)^ and (top ; t)^
        return intersection_width(t.body) + 1
    raise TypeError(t)


# ---------------------------------------------------------------------------
# desugaring


def complement_test(p: Term, cfg: ExtensionConfig) -> Term:
    """Complement of a test term inside the test class."""
    if isinstance(p, Var):
        for b, bb in cfg.test_pairs:
            if p.name == b:
                return Var(bb)
            if p.name == bb:
                return Var(b)
        raise TermError(f"letter {p.name!r} is not a test")
    if isinstance(p, Id):
        return ZERO
    if isinstance(p, Zero):
        return ID
    if isinstance(p, Comp):
        return Union(complement_test(p.left, cfg), complement_test(p.right, cfg))
    if isinstance(p, Union):
        return Comp(complement_test(p.left, cfg), complement_test(p.right, cfg))
    raise TermError(f"{type(p).__name__} cannot be complemented as a test")


def converse_of(t: Term, cfg: ExtensionConfig) -> Term:
    """Push converse down to the letters of a core term."""
    if isinstance(t, Var):
        for c, cc in cfg.converse_pairs:
            if t.name == c:
                return Var(cc)
            if t.name == cc:
                return Var(c)
        raise TermError(f"letter {t.name!r} has no declared converse")
    if isinstance(t, (Zero, Id, Top)):
        return t
    if isinstance(t, Comp):
        return Comp(converse_of(t.right, cfg), converse_of(t.left, cfg))
    if isinstance(t, Union):
        return Union(converse_of(t.left, cfg), converse_of(t.right, cfg))
    if isinstance(t, Star):
        return Star(converse_of(t.body, cfg))
    if isinstance(t, Loop):
        return Loop(converse_of(t.body, cfg))
    raise TermError(f"cannot take converse of {type(t).__name__}")


def desugar(t: Term, cfg: ExtensionConfig) -> Term:
    if isinstance(t, (Var, Zero, Id, Top)):
        return t
    if isinstance(t, Union):
        return Union(desugar(t.left, cfg), desugar(t.right, cfg))
    if isinstance(t, Comp):
        return Comp(desugar(t.left, cfg), desugar(t.right, cfg))
    if isinstance(t, Star):
        return Star(desugar(t.body, cfg))
    if isinstance(t, Loop):
        return Loop(desugar(t.body, cfg))
    if isinstance(t, Plus):
        body = desugar(t.body, cfg)
        return Comp(body, Star(body))
    if isinstance(t, Dom):
        return Loop(Comp(desugar(t.body, cfg), TOP))
    if isinstance(t, Ran):
        return Loop(Comp(TOP, desugar(t.body, cfg)))
    if isinstance(t, Conv):
        return converse_of(desugar(t.body, cfg), cfg)
    if isinstance(t, NotTest):
        bad = _non_test_reason(t.body, cfg)
        if bad:
            raise TermError(f"not(...) applied outside a test: {bad}")
        return complement_test(desugar(t.body, cfg), cfg)
    raise TypeError(t)


def replace_top(t: Term, replacement: Term) -> Term:
    if isinstance(t, Top):
        return replacement
    if isinstance(t, (Var, Zero, Id)):
        return t
    if isinstance(t, (Union, Comp)):
        return type(t)(replace_top(t.left, replacement), replace_top(t.right, replacement))
    if isinstance(t, (Star, Loop)):
        return type(t)(replace_top(t.body, replacement))
    raise TermError(f"sugar node {type(t).__name__} left in term; desugar first")


def top_encoding() -> Term:
    return Star(Var(RESERVED_TOP))


def wrap_for_decision(t: Term, cfg: ExtensionConfig | None = None) -> Term:
    """Return ``ct* ; l ; t' ; r ; ct*`` with top replaced by ``ct*``."""
    used = letters_of(t) & set(RESERVED)
    if used:
        raise TermError(f"reserved letters {sorted(used)} occur in the term")
    inner = replace_top(t, top_encoding())
    return compose_all([top_encoding(), Var(RESERVED_LEFT), inner, Var(RESERVED_RIGHT), top_encoding()])
