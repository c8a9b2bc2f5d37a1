import itertools
import warnings

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import tetraspin.reduction as red
from tetraspin.harness import golden_table
from tetraspin.oscillator import OscElement, parse_word
from tetraspin.reduction import (FORMS, BracketForm, UnsupportedForm, build_reduced_r,
                                 check_selection_rules, check_yang_baxter, index_to_bits,
                                 w_element)
from tetraspin.scalars import ResourceGuard, TailWarning, make_params

CLOSED = ((1, 1), (2, 1), (2, 2))


@pytest.mark.parametrize("st", FORMS)
def test_unit_is_normalized(st, P):
    form = BracketForm(*st, 0.3, P)
    one = OscElement.scalar(form.ring)
    assert abs(form(one, "contract") - 1) < 1e-14
    if st != (1, 2):
        assert abs(form(one, "closed") - 1) < 1e-15


def test_no_closed_form_for_exploratory_pair(P):
    form = BracketForm(1, 2, 0.3, P)
    with pytest.raises(UnsupportedForm):
        form(parse_word(form.ring, "k"), "closed")
    with pytest.raises(UnsupportedForm):
        form.closed_denominators()


@pytest.mark.parametrize("st", CLOSED)
@pytest.mark.parametrize("word", ["a+ a+", "a+ k", "k k"])
def test_worked_example_values(st, word, P):
    ref = golden_table(0.3, P)[st][word]
    form = BracketForm(*st, 0.3, P)
    e = parse_word(form.ring, word)
    assert abs(form(e, "closed") - ref) < 1e-12
    assert abs(form(e, "contract") - ref) < 1e-10


@pytest.mark.parametrize("st", CLOSED)
def test_k_past_a_plus(st, P):
    form = BracketForm(*st, 0.3, P)
    ka, ak = (form(parse_word(form.ring, w)) for w in ("k a+", "a+ k"))
    assert abs(ka - P.p * ak) < 1e-14


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(CLOSED), st.sampled_from([1, -1]), st.integers(0, 5), st.integers(0, 5),
       st.sampled_from([0.1, 0.3, -0.5, 0.2 + 0.3j]))
def test_closed_matches_contraction(stp, sign, j, m, x):
    P = make_params(0.4, x)
    form = BracketForm(*stp, x, P)
    e = OscElement.monomial(form.ring, sign if j else 0, j, m)
    a, b = form(e, "closed"), form(e, "contract")
    assert abs(a - b) < 1e-10 * max(1.0, abs(a))


@pytest.mark.parametrize("word", ["a+", "a-", "a+ k", "a- a- a-", "k a+ k"])
def test_odd_words_vanish_for_22(word, P):
    form = BracketForm(2, 2, 0.3, P)
    e = parse_word(form.ring, word)
    assert form(e, "closed") == 0
    assert form(e, "contract") == 0


def test_minus_ik_is_normalized_for_22(P):
    form = BracketForm(2, 2, 0.3, P)
    e = parse_word(form.ring, "-ik")
    assert abs(form(e, "closed") - 1) < 1e-15
    assert abs(form(e, "contract") - 1) < 1e-14


@pytest.mark.parametrize("x", [0.1, 0.3, 0.5, 0.7])
@pytest.mark.parametrize("st", CLOSED)
def test_norm_products(st, x):
    P = make_params(0.4, x)
    form = BracketForm(*st, x, P)
    closed = form.closed_denominators()
    assert set(closed) == set(form.denominators)
    for k, v in closed.items():
        assert abs(form.denominators[k] - v) < 1e-10


def test_norm_product_via_mpmath(P):
    x, p = 0.3, P.p
    ref = complex(mpmath.qp(-p * x, p) / mpmath.qp(x, p))
    assert abs(BracketForm(1, 1, x, P).denominators[1] - ref) < 1e-13
    p4 = p ** 4
    ref22 = complex(mpmath.qp(p * p * x, p4) / mpmath.qp(x, p4))
    assert abs(BracketForm(2, 2, x, P).denominators[1] - ref22) < 1e-13


def test_printed_22_norm_variant_disagrees(P):
    # the alternative (p x^2; p^4)/(x; p^4) is not the contraction value
    x, p = 0.3, P.p
    alt = complex(mpmath.qp(p * x * x, p ** 4) / mpmath.qp(x, p ** 4))
    assert abs(BracketForm(2, 2, x, P).denominators[1] - alt) > 1e-3


def test_adaptive_cutoff_and_tail_warning(P, monkeypatch):
    form = BracketForm(2, 1, 0.3, P)
    assert form.effective_cutoff(12) > 12
    assert form.effective_cutoff(200) == 200
    monkeypatch.setattr(red, "MAX_CONTRACTION_CUTOFF", 30)
    with pytest.warns(TailWarning):
        BracketForm(2, 2, 0.7, P.with_(x=0.7, y=None, tail_tol=1e-30))


def test_truncation_stability(P):
    for st in FORMS:
        a = BracketForm(*st, 0.3, P.with_(cutoff=12))
        b = BracketForm(*st, 0.3, P.with_(cutoff=16))
        for w in ["a+ a+", "a- k", "k k a-"]:
            assert abs(a.contract(parse_word(a.ring, w)) - b.contract(parse_word(b.ring, w))) < 1e-10


def test_w_element_diagonal_is_one(P):
    for bits in itertools.product((0, 1), repeat=3):
        for st in FORMS:
            assert abs(w_element(*st, 0.3, bits, bits, bits, bits, P) - 1) < 1e-14


def test_w_element_conservation(P):
    assert w_element(2, 1, 0.3, (1, 1), (1, 0), (0, 0), (1, 0), P) == 0


@pytest.mark.parametrize("st", FORMS)
def test_w_element_example(st, P):
    form = BracketForm(*st, 0.3, P)
    w = w_element(*st, 0.3, (1, 1, 0), (0, 0, 0), (0, 0, 0), (1, 1, 0), P)
    assert abs(w - form(parse_word(form.ring, "a+ a+"), red.default_method(*st))) < 1e-14


def test_w_element_length_check(P):
    with pytest.raises(ValueError):
        w_element(1, 1, 0.3, (0,), (0, 0), (0,), (0,), P)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_reduced_r_shape_and_count(n, P):
    R = build_reduced_r(2, 1, n, 0.3, P)
    assert R.matrix.shape == (4 ** n, 4 ** n)
    assert R.computed.sum() == 6 ** n


def test_reduced_r_budget(P):
    with pytest.raises(ResourceGuard):
        build_reduced_r(1, 1, 5, 0.3, P)


def test_22_normalization_entries(P):
    n = 3
    R = build_reduced_r(2, 2, n, 0.3, P)
    d = 2 ** n
    for a, b in itertools.product((0, 1), repeat=2):
        idx = a * d + b
        assert abs(R.matrix[idx, idx] - 1) < 1e-14


@pytest.mark.parametrize("st", CLOSED)
def test_closed_and_contraction_matrices_agree(st, P):
    for n in (1, 2):
        A = build_reduced_r(*st, n, 0.3, P, method="closed").matrix
        B = build_reduced_r(*st, n, 0.3, P, method="contract").matrix
        assert np.abs(A - B).max() < 1e-10


@pytest.mark.parametrize("st", FORMS)
@pytest.mark.parametrize("n", [1, 2])
@pytest.mark.parametrize("xy", [(0.3, 0.2), (0.5, 0.5), (-0.4 + 0.2j, 0.35)])
def test_yang_baxter(st, n, xy, P):
    x, y = xy
    Pxy = P.with_(x=x, y=y)
    res = check_yang_baxter(*st, n, x, y, Pxy)
    assert res["ybe"] < 1e-9 and res["braid"] < 1e-9


def test_yang_baxter_detects_wrong_argument(P):
    # swapping in R(y) for R(xy) must break the equation
    d = 2
    Rx = build_reduced_r(2, 1, 1, 0.3, P).matrix
    Ry = build_reduced_r(2, 1, 1, 0.2, P).matrix
    lhs = red._on_pair(Rx, d, "ab") @ red._on_pair(Ry, d, "ac") @ red._on_pair(Ry, d, "bc")
    rhs = red._on_pair(Ry, d, "bc") @ red._on_pair(Ry, d, "ac") @ red._on_pair(Rx, d, "ab")
    assert np.linalg.norm(lhs - rhs, 2) > 1e-3


@pytest.mark.parametrize("st", FORMS)
def test_selection_rules(st, P):
    R = build_reduced_r(*st, 2, 0.3, P)
    rep = check_selection_rules(R)
    assert rep["site_violations"] == 0 and rep["parity_violations"] == 0
    assert rep["weight_commutator"] == 0
    assert rep["computed"] + rep["structural_zero"] == 256


def test_22_parity_blocks_exact(P):
    R = build_reduced_r(2, 2, 2, 0.3, P)
    d = 4
    for row, col in itertools.product(range(16), repeat=2):
        ap, a = index_to_bits(row // d, 2), index_to_bits(col // d, 2)
        if (sum(ap) - sum(a)) % 2:
            assert R.matrix[row, col] == 0
