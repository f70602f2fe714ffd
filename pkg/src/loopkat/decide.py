"""End-to-end decision of inequations and equations.

Pipeline: desugar, try the regular-expression route, otherwise pick a width,
wrap both sides with the top encoding and the two markers, compile, and run
the bounded search (and the behavior-table engine when the automata are
tiny).  Every refutation is re-checked by :func:`verify_witness` before it is
reported.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

from . import inclusion
from .afa_build import build_filter_afas, build_lambda_bin, union_afa
from .loop_automaton import compile_term
from .structure import (
    Block,
    DecodeError,
    DecompString,
    GluedStructure,
    block_filters,
    class_violations,
    decode_string,
    eval_term,
    glue,
)
from .term import (
    RESERVED,
    ExtensionConfig,
    Term,
    desugar,
    intersection_width,
    is_loop_free,
    letters_of,
    parse_comparison,
    parse_term,
    wrap_for_decision,
)

MODES = ("auto", "bounded", "full")
DEFAULT_MAX_BLOCKS = 3
MICRO_STATE_LIMIT = 12


def _ref(v) -> tuple[int, int]:
    if isinstance(v, int):
        return (1, v)
    i, x = v
    return (int(i), int(x))


@dataclass
class Witness:
    """A decomposition string with two vertex references ``(block, vertex)``."""

    w: DecompString
    x: tuple
    y: tuple
    conditions: dict = field(default_factory=dict)

    def __post_init__(self):
        self.x = _ref(self.x)
        self.y = _ref(self.y)

    @property
    def glued(self) -> GluedStructure:
        return glue(self.w)

    def to_json(self) -> dict:
        out = {"blocks": self.w.to_json(), "x": list(self.x), "y": list(self.y)}
        if self.conditions:
            out["conditions"] = dict(self.conditions)
        return out

    @classmethod
    def from_json(cls, data: dict) -> "Witness":
        k = data.get("k")
        blocks = tuple(Block.from_json(b, k) for b in data["blocks"])
        return cls(DecompString(blocks), data["x"], data["y"])


@dataclass
class Verdict:
    kind: str                    # "valid", "refuted" or "unknown"
    engine: str
    witness: Witness | None = None
    bound: int | None = None
    mode: str | None = None
    k: int | None = None
    note: str = ""

    @property
    def exit_code(self) -> int:
        return {"valid": 0, "refuted": 1, "unknown": 2}[self.kind]

    def to_json(self) -> dict:
        return {
            "verdict": self.kind,
            "engine": self.engine,
            "witness": self.witness.to_json() if self.witness else None,
            "bound": self.bound,
            "mode": self.mode,
            "k": self.k,
            "note": self.note,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json())

    @classmethod
    def from_json(cls, data: dict) -> "Verdict":
        wit = Witness.from_json(data["witness"]) if data.get("witness") else None
        return cls(data["verdict"], data["engine"], wit, data.get("bound"), data.get("mode"), data.get("k"), data.get("note", ""))


@dataclass
class WitnessCheck:
    ok: bool
    reason: str = "ok"
    conditions: dict = field(default_factory=dict)

    def __bool__(self):
        return self.ok


def choose_width(t1: Term, cfg: ExtensionConfig) -> int:
    return max(2, intersection_width(t1) + len(cfg.nominals) + 1)


def _prepare(t, cfg: ExtensionConfig) -> Term:
    if isinstance(t, str):
        t = parse_term(t, cfg)
    return desugar(t, cfg)


def verify_witness(wit: Witness, t1, t2, cfg: ExtensionConfig) -> WitnessCheck:
    """Independent check of a refutation, top evaluated as the full relation."""
    try:
        d1, d2 = _prepare(t1, cfg), _prepare(t2, cfg)
        g = glue(wit.w)
    except Exception as exc:  # malformed input is a failed check, not a crash
        return WitnessCheck(False, f"malformed: {exc}")
    enabled = set()
    if cfg.tests:
        enabled.add("Test")
    if cfg.converse:
        enabled.add("Conv")
    if cfg.nominals:
        enabled.add("Nom")
    conditions = {}
    local = block_filters(wit.w, cfg) & enabled
    whole = class_violations(g.structure, cfg) & enabled
    for name in sorted(enabled):
        conditions[name] = name not in local and name not in whole
    bad = [n for n, ok in conditions.items() if not ok]
    if bad:
        return WitnessCheck(False, "class-condition:" + ",".join(bad), conditions)
    try:
        x, y = g.class_of[wit.x], g.class_of[wit.y]
    except KeyError as exc:
        return WitnessCheck(False, f"no such vertex {exc}", conditions)
    if (x, y) not in eval_term(g.structure, d1):
        return WitnessCheck(False, "pair-not-in-lhs", conditions)
    if (x, y) in eval_term(g.structure, d2):
        return WitnessCheck(False, "pair-in-rhs", conditions)
    return WitnessCheck(True, "ok", conditions)


def path_witness(word) -> Witness:
    """Encode a word as a path structure: 2-vertex blocks joined by singletons."""
    if not word:
        return Witness(DecompString((Block(2, frozenset({1})),)), (1, 1), (1, 1))
    blocks = []
    cur = 1
    for n, letter in enumerate(word):
        nxt = 3 - cur
        if n:
            blocks.append(Block(2, frozenset({cur})))
        blocks.append(Block(2, frozenset({1, 2}), {letter: {(cur, nxt)}}))
        cur = nxt
    return Witness(DecompString(tuple(blocks)), (1, 1), (len(blocks), cur))


def _locate_pair(w: DecompString, d1: Term, d2: Term):
    """Some pair of classes in d1 but not d2, block-1 pairs first."""
    g = glue(w)
    diff = eval_term(g.structure, d1) - eval_term(g.structure, d2)
    first = g.block_classes[0]
    ranked = sorted(diff, key=lambda p: (not (p[0] in first and p[1] in first), p))
    return ranked[0] if ranked else None


def _check_options(mode, max_blocks):
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    if max_blocks is not None and max_blocks < 1:
        raise ValueError("max_blocks must be at least 1")


def decide_inequation(
    t1,
    t2,
    cfg: ExtensionConfig,
    mode: str = "auto",
    max_blocks: int | None = None,
    k: int | None = None,
    witness: Witness | None = None,
    micro_budget: int = 20000,
) -> Verdict:
    _check_options(mode, max_blocks)
    d1, d2 = _prepare(t1, cfg), _prepare(t2, cfg)
    for d in (d1, d2):
        used = letters_of(d) & set(RESERVED)
        if used:
            raise ValueError(f"reserved letters {sorted(used)} used in a term")
    width = k if k is not None else choose_width(d1, cfg)

    if witness is not None:
        check = verify_witness(witness, d1, d2, cfg)
        if check:
            witness.conditions = check.conditions
            return Verdict("refuted", "verify", witness, mode=mode, k=width, note="supplied witness verified")
        return Verdict("unknown", "verify", None, mode=mode, k=width, note=f"supplied witness rejected: {check.reason}")

    if mode == "auto" and is_loop_free(d1) and is_loop_free(d2) and not cfg.has_extensions:
        res = inclusion.decide_loop_free(d1, d2)
        if isinstance(res, inclusion.Valid):
            return Verdict("valid", "loop-free", mode=mode, note="regular-language inclusion")
        wit = path_witness(res.witness)
        return _refuted(wit, d1, d2, cfg, "loop-free", mode, None)

    w1 = compile_term(wrap_for_decision(d1, cfg))
    w2 = compile_term(wrap_for_decision(d2, cfg))
    bound = max_blocks if max_blocks is not None else DEFAULT_MAX_BLOCKS

    if mode in ("auto", "bounded"):
        res = inclusion.decide_bounded(w1, w2, cfg, width, bound)
        if isinstance(res, inclusion.Refuted):
            return _refuted(Witness(res.witness, res.x, res.y), d1, d2, cfg, "bounded", mode, width)
        if mode == "bounded":
            return Verdict("unknown", "bounded", bound=bound, mode=mode, k=width, note=f"{res.examined} strings examined")

    a1 = build_lambda_bin(width, cfg, w1)
    rhs = union_afa([build_lambda_bin(width, cfg, w2)] + build_filter_afas(width, cfg))
    n1 = sum(1 for _ in a1.states())
    n2 = sum(1 for _ in rhs.states())
    if n1 + n2 > MICRO_STATE_LIMIT:
        return Verdict(
            "unknown",
            "full-micro",
            bound=bound if mode == "auto" else None,
            mode=mode,
            k=width,
            note=f"automata have {n1}+{n2} states, above the micro limit {MICRO_STATE_LIMIT}",
        )
    res = inclusion.decide_full_micro(a1, rhs, micro_budget)
    if isinstance(res, inclusion.Valid):
        return Verdict("valid", "full-micro", mode=mode, k=width)
    if isinstance(res, inclusion.ExhaustedBound):
        return Verdict("unknown", "full-micro", bound=res.bound, mode=mode, k=width, note="behavior budget exceeded")
    try:
        w = decode_string("".join(res.witness), width, cfg)
    except DecodeError as exc:
        raise RuntimeError(f"full engine produced an invalid code: {exc}") from exc
    pair = _locate_pair(w, d1, d2)
    if pair is None:
        raise RuntimeError("full engine word does not refute the inequation")
    return _refuted(Witness(w, pair[0], pair[1]), d1, d2, cfg, "full-micro", mode, width)


def _refuted(wit: Witness, d1, d2, cfg, engine, mode, width) -> Verdict:
    check = verify_witness(wit, d1, d2, cfg)
    if not check:
        raise RuntimeError(f"{engine} engine produced a witness that fails verification: {check.reason}")
    wit.conditions = check.conditions
    return Verdict("refuted", engine, wit, mode=mode, k=width)


def decide_equation(t1, t2, cfg: ExtensionConfig, **options) -> Verdict:
    left = decide_inequation(t1, t2, cfg, **options)
    if left.kind == "refuted":
        return left
    right = decide_inequation(t2, t1, cfg, **options)
    if right.kind == "refuted":
        right.note = (right.note + "; " if right.note else "") + "reverse direction"
        return right
    if left.kind == right.kind == "valid":
        return Verdict("valid", left.engine if left.engine == right.engine else f"{left.engine}+{right.engine}", mode=left.mode)
    unknown = left if left.kind == "unknown" else right
    return Verdict("unknown", unknown.engine, bound=unknown.bound, mode=unknown.mode, k=unknown.k, note=unknown.note)


def decide_text(text: str, cfg: ExtensionConfig, **options) -> Verdict:
    """Parse ``lhs <= rhs`` or ``lhs == rhs`` and decide it."""
    lhs, op, rhs = parse_comparison(text, cfg)
    if op == "<=":
        return decide_inequation(lhs, rhs, cfg, **options)
    return decide_equation(lhs, rhs, cfg, **options)


def describe(v: Verdict) -> str:
    lines = [f"verdict: {v.kind} (engine {v.engine})"]
    if v.k is not None:
        lines.append(f"width k = {v.k}")
    if v.bound is not None:
        lines.append(f"bound: {v.bound} blocks")
    if v.witness is not None:
        w = v.witness
        lines.append(f"witness: {len(w.w)} block(s), x = {w.x}, y = {w.y}")
        for i, b in enumerate(w.w.blocks, start=1):
            rels = ", ".join(f"{a}:{sorted(r)}" for a, r in sorted(b.edges.items()))
            lines.append(f"  block {i}: universe {sorted(b.universe)} {rels}")
    if v.note:
        lines.append(f"note: {v.note}")
    return "\n".join(lines)


__all__ = [
    "Witness",
    "Verdict",
    "WitnessCheck",
    "choose_width",
    "decide_inequation",
    "decide_equation",
    "decide_text",
    "verify_witness",
    "path_witness",
    "describe",
]
