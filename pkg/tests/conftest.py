from __future__ import annotations

import pathlib

import pytest
from hypothesis import settings, strategies as st

from loopkat.structure import Block, DecompString
from loopkat.term import ID, ZERO, Comp, ExtensionConfig, Loop, Star, Union, Var

ROOT = pathlib.Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "fixtures"

# filled by the acceptance suite, echoed after the run
REPORT_LINES: list[str] = []

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


def core_terms(letters=("a", "b"), loops=True, max_leaves=8):
    leaves = st.sampled_from([Var(x) for x in letters] + [ZERO, ID])
    unary = [Star, Loop] if loops else [Star]

    def extend(children):
        return st.one_of(
            st.tuples(st.sampled_from(unary), children).map(lambda p: p[0](p[1])),
            st.tuples(st.sampled_from([Union, Comp]), children, children).map(lambda p: p[0](p[1], p[2])),
        )

    return st.recursive(leaves, extend, max_leaves=max_leaves)


@st.composite
def blocks(draw, k=2, letters=("a", "b")):
    uni = draw(st.sets(st.integers(1, k), min_size=1))
    square = [(p, q) for p in sorted(uni) for q in sorted(uni)]
    edges = {a: draw(st.sets(st.sampled_from(square))) for a in letters}
    return Block(k, frozenset(uni), edges)


@st.composite
def decomp_strings(draw, k=2, letters=("a", "b"), max_len=3):
    return DecompString(tuple(draw(st.lists(blocks(k, letters), min_size=1, max_size=max_len))))


@pytest.fixture
def ab():
    return ExtensionConfig(("a", "b"), reserved=False)


@pytest.fixture
def fixture_dir():
    return FIXTURES


def pytest_terminal_summary(terminalreporter):
    if REPORT_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(REPORT_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
