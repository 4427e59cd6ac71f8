import random

import numpy as np
import pytest

from mmlab import fixtures as F
from mmlab.decomposition import (validate_decomposition, derive_cost_parameters, dumps, loads,
                                 save_decomposition, load_decomposition, structurally_equal,
                                 combine_decompositions, ParseError, DecompositionError,
                                 needed_memory, level_lambdas)
from mmlab.engines import expansion_profile

MATRIX_SECTIONS = ("U", "V", "W", "PSI11", "PSI12", "PHI11", "PHI12", "VARPHI1", "VARPHI0")


@pytest.mark.parametrize("name", sorted(F.DECOMPOSITIONS))
def test_fixture_validates(name):
    rep = validate_decomposition(F.DECOMPOSITIONS[name]())
    assert rep.ok, rep.message


@pytest.mark.parametrize("name", ["F1", "F2", "F3", "dense"])
def test_text_roundtrip(name, tmp_path):
    d = F.DECOMPOSITIONS[name]()
    path = tmp_path / (name + ".algdec")
    save_decomposition(d, str(path))
    back = load_decomposition(str(path))
    assert structurally_equal(d, back)
    assert dumps(back).splitlines()[2:] == dumps(d).splitlines()[2:]


def test_shipped_files_load():
    files = F.available_files()
    assert len(files) >= 3
    for p in files:
        assert validate_decomposition(load_decomposition(p)).ok


def _mutate(text, rng):
    """Bump one numeric entry of a random matrix section; returns (section, new text)."""
    lines = text.splitlines()
    spans = {}
    cur = None
    for i, ln in enumerate(lines):
        tok = ln.split()
        if tok and tok[0] in MATRIX_SECTIONS + ("ETA1", "ETA2", "ETA3", "P1", "Q1", "ELL1", "TRAIL"):
            cur = tok[0] if tok[0] in MATRIX_SECTIONS else None
            continue
        if cur and tok:
            spans.setdefault(cur, []).append(i)
    sec = rng.choice(sorted(spans))
    i = rng.choice(spans[sec])
    toks = lines[i].split()
    j = rng.randrange(len(toks))
    toks[j] = str(int(toks[j]) + 1) if "/" not in toks[j] else toks[j] + "0"
    lines[i] = " ".join(toks)
    return sec, "\n".join(lines) + "\n"


EXPECTED = {"U": "brent", "V": "brent", "W": "brent", "PSI11": "psi", "PSI12": "psi",
            "PHI11": "phi", "PHI12": "phi", "VARPHI1": "varphi", "VARPHI0": "varphi"}


@pytest.mark.parametrize("name", ["F1", "F3"])
def test_single_entry_mutations_are_located(name):
    text = dumps(F.DECOMPOSITIONS[name]())
    rng = random.Random(11)
    for _ in range(10):
        sec, bad = _mutate(text, rng)
        d = loads(bad, validate=False)
        rep = validate_decomposition(d)
        assert not rep.ok, sec
        assert rep.identity == EXPECTED[sec], (sec, rep)
        if rep.identity != "brent":
            assert rep.row is not None
        with pytest.raises(DecompositionError, match=rep.identity):
            loads(bad)


@pytest.mark.parametrize("edit, msg", [
    (lambda t: t.replace("ALGDEC v1", "ALGDEC v2"), "header"),
    (lambda t: t.replace("DIMS 2 2 2 12", "DIMS 2 2 x 12"), "four integers"),
    (lambda t: t.replace("\nU\n1 0 0 0\n", "\nU\n1 0 0\n", 1), "ragged|shape"),
    (lambda t: t.replace("\nU\n1 0 0 0\n", "\nU\n1/0 0 0 0\n", 1), "zero denominator"),
    (lambda t: t.replace("\nU\n1 0 0 0\n", "\nU\n1 0 zz 0\n", 1), "malformed"),
    (lambda t: t.split("VARPHI0")[0], "missing section VARPHI0"),
    (lambda t: t.replace("P1 ", "P1 9 ", 1), "ELL1 lists"),
])
def test_parse_errors(edit, msg):
    text = dumps(F.fixture_f1())
    with pytest.raises(ParseError, match=msg) as ei:
        loads(edit(text))
    assert ei.value.line >= 1


def test_column_major_file_is_transposed(caplog):
    d = F.fixture_f1()
    from mmlab.decomposition import _transposed
    # on square 2x2 grids the relabelling is its own inverse, so it also produces column-major data
    cm = _transposed(d)
    back = loads(dumps(cm))
    assert structurally_equal(back, d)
    assert "column-major" in caplog.text


def test_cost_parameters_f1():
    cp = derive_cost_parameters(F.fixture_f1())
    assert cp.l3 == (F.fixture_f1().p11, F.fixture_f1().p11b, F.fixture_f1().q1)
    assert cp.l4 == (4, 4, 4)
    for i in range(3):
        assert cp.beta_i[i] >= cp.alpha[i] / (cp.l4[i] - cp.l3[i])
    assert cp.beta == 3 + sum(cp.beta_i)


def test_expansion_profile_matches_parameters():
    d = F.fixture_f2()
    prof = expansion_profile(d)
    cp = derive_cost_parameters(d, prof)
    assert tuple(prof["ops"]) == cp.l2


def test_combined_strassen_is_valid():
    d = F.combined_strassen()
    assert d.dims == (8, 8, 8) and d.t == 343
    assert validate_decomposition(d).ok
    assert len(level_lambdas(d)) == 3


def test_combine_tiny():
    t = F.tiny()
    c = combine_decompositions([t, t, t])
    assert validate_decomposition(c).ok


def test_needed_memory_is_monotone_in_sizes():
    d = F.combined_strassen()
    lam = level_lambdas(d)
    u = (4, 4, 4)
    small = needed_memory(u, lam, (1, 1, 1))
    big = needed_memory(u, lam, (2, 2, 2))
    assert 0 < small < big


@pytest.mark.parametrize("z", [(1, 1, 1), (1, 2, 3), (5, 1, 1)])
def test_needed_memory_trivial_levels(z):
    # with every lambda equal to one only the head term survives
    u = (2, 3, 4)
    U = 24
    head = sum(U * z[i] + U // u[i] * z[i] + z[i] for i in range(3)) + u[2] * z[0] + u[0] * z[1] + u[1] * z[2]
    assert needed_memory(u, [(1, 1, 1)] * 3, z) == head


@pytest.mark.xfail(strict=True, reason="the delta_1 recurrence gives 255 words for the combined "
                   "Strassen expansion, but the staged depth-first engine peaks at 360 "
                   "including the 192 input/output words; see the decisions ledger")
def test_needed_memory_covers_measured_peak():
    from mmlab import engines as E
    from mmlab.counters import Machine
    from helpers import rand_int
    d = F.combined_strassen()
    rng = np.random.default_rng(0)
    m = Machine()
    E.run_engine(d, rand_int(rng, 8, 8), rand_int(rng, 8, 8), "bc", machine=m)
    assert needed_memory((4, 4, 4), level_lambdas(d), (1, 1, 1)) >= m.peak
