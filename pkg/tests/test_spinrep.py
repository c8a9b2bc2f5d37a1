import itertools
import warnings

import numpy as np
import pytest
import sympy

from tetraspin.oscillator import ExactRing, FloatRing, OscElement
from tetraspin.reduction import BracketForm
from tetraspin.reduction import build_reduced_r
from tetraspin.scalars import make_params
from tetraspin.spinrep import (PAIRING, AlgebraId, ClusterAmbiguity, DegenerateRankWarning,
                               DegenerateSolution, RankError, build_generators,
                               check_affine_intertwiner, check_classical_intertwiner,
                               check_spectrum, check_z_identities, classify_z,
                               cluster_eigenvalues, coproduct_action, normalization_entries,
                               random_words, rho_d2, solve_r_oracle, tagged_l, z_element,
                               z_label_tuples)

Q = 0.4


@pytest.mark.parametrize("fam,n", [("B1", 1), ("D1", 1), ("D2", 0)])
def test_rank_errors(fam, n):
    with pytest.raises(RankError):
        AlgebraId(fam, n)


def test_d1_rank_two_warns():
    with pytest.warns(DegenerateRankWarning):
        AlgebraId("D1", 2)


def test_unknown_family():
    with pytest.raises(ValueError):
        AlgebraId("C1", 3)


@pytest.mark.parametrize("fam,n", [("B1", 2), ("B1", 3), ("D2", 1), ("D2", 3), ("D1", 3), ("D1", 4)])
def test_generator_invariants(fam, n):
    g = build_generators((fam, n), Q)
    for i in range(n + 1):
        assert np.array_equal(g.xm[i], g.xp[i].T)
        assert np.all(np.abs(2 * g.h[i] - np.round(2 * g.h[i])) == 0)
        assert np.all(np.diag(g.q_h(i)) > 0)
    c = g.weight_scalars()
    assert not np.isnan(c).any()


def test_b1_h_n_on_vacuum():
    g = build_generators(("B1", 2), Q)
    assert g.h[2][0] == 0.5


def test_d2_zero_generator():
    g = build_generators(("D2", 3), Q)
    XM = np.array([[0.0, 0.0], [1.0, 0.0]])
    expect = -(Q + 1 / Q) ** -0.5 * np.kron(XM, np.eye(4))
    assert np.allclose(g.xp[0], expect)


def test_d1_n_generator():
    g = build_generators(("D1", 3), Q)
    XP = np.array([[0.0, 1.0], [0.0, 0.0]])
    assert np.allclose(g.xp[3], -np.kron(np.eye(2), np.kron(XP, XP)))


def test_coproduct_h_on_vacuum():
    g = build_generators(("B1", 2), Q)
    D = coproduct_action(g, "H", 2)
    v = np.zeros(16)
    v[0] = 1
    assert np.allclose(D @ v, 1.0 * v)


def test_coproduct_matches_direct_assembly():
    g = build_generators(("B1", 3), Q)
    d = g.dim
    for i in range(1, 4):
        D = coproduct_action(g, "X+", i)
        ref = np.zeros((d * d, d * d))
        for a, b, c in itertools.product(range(d), repeat=3):
            # (q^H (x) X)(v_a (x) v_c) and (X (x) q^-H)(v_c (x) v_a)
            ref[a * d + b, a * d + c] += Q ** g.h[i][a] * g.xp[i][b, c]
            ref[b * d + a, c * d + a] += g.xp[i][b, c] * Q ** (-g.h[i][a])
        assert np.allclose(D, ref)


@pytest.mark.parametrize("fam,n", [("B1", 2), ("D2", 2), ("D1", 3), ("D2", 1)])
@pytest.mark.parametrize("x", [0.3, -0.55 + 0.2j])
def test_intertwiners(fam, n, x):
    P = make_params(Q, x)
    g = build_generators((fam, n), Q)
    Rc = build_reduced_r(*PAIRING[fam], n, x, P).checked
    assert check_classical_intertwiner(Rc, g)["max"] < 1e-9
    assert check_affine_intertwiner(Rc, g, x)["max"] < 1e-9


def test_wrong_pairing_fails_affine(P):
    g = build_generators(("B1", 2), Q)
    Rc = build_reduced_r(1, 1, 2, 0.3, P).checked
    assert check_classical_intertwiner(Rc, g)["max"] < 1e-9  # same classical part
    assert check_affine_intertwiner(Rc, g, 0.3)["max"] > 1e-3


@pytest.mark.parametrize("fam,n", [("B1", 2), ("D2", 2), ("D1", 3), ("D2", 1)])
def test_oracle_matches_matrix_product(fam, n, P):
    g = build_generators((fam, n), Q)
    O = solve_r_oracle(g, 0.3)
    Rc = build_reduced_r(*PAIRING[fam], n, 0.3, P).checked
    assert np.abs(O - Rc).max() < 1e-8
    for r, c in normalization_entries(g).values():
        assert abs(O[r, c] - 1) < 1e-12 and abs(Rc[r, c] - 1) < 1e-12


@pytest.mark.slow
@pytest.mark.parametrize("fam", ["B1", "D2"])
def test_oracle_rank_three(fam, P):
    g = build_generators((fam, 3), Q)
    Rc = build_reduced_r(*PAIRING[fam], 3, 0.3, P).checked
    assert check_classical_intertwiner(Rc, g)["max"] < 1e-8
    assert np.abs(solve_r_oracle(g, 0.3) - Rc).max() < 1e-8


def test_degenerate_rank_reported():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateRankWarning)
        g = build_generators(("D1", 2), Q)
    with pytest.raises(DegenerateSolution):
        solve_r_oracle(g, 0.3)


def test_rho_values():
    assert rho_d2(0, 0.3, Q) == 1
    assert abs(rho_d2(1, 0.3, Q) - (Q ** 2 - 0.3) / (Q ** 2 * 0.3 - 1)) < 1e-15


def test_spectrum_rank_one(P):
    Rc = build_reduced_r(1, 1, 1, 0.3, P).checked
    vals = np.sort_complex(np.linalg.eigvals(Rc))
    expect = np.sort_complex(np.array([1, 1, 1, rho_d2(1, 0.3, Q)], dtype=complex))
    assert np.allclose(vals, expect, atol=1e-12)


@pytest.mark.parametrize("n,mult", [(1, [1, 3]), (2, [1, 5, 10]), (3, [1, 7, 21, 35])])
@pytest.mark.parametrize("x", [0.3, -0.45 + 0.1j])
def test_spectrum(n, mult, x):
    P = make_params(Q, x)
    Rc = build_reduced_r(1, 1, n, x, P).checked
    data = check_spectrum(Rc, AlgebraId("D2", n), x, Q)
    assert sorted(data.multiplicities) == mult
    assert data.dimension == 4 ** n
    assert data.max_deviation < 1e-8


def test_cluster_ambiguity():
    with pytest.raises(ClusterAmbiguity):
        cluster_eigenvalues(np.array([1.0, 1.0 + 5e-7]), tol=1e-7)
    centers, mult = cluster_eigenvalues(np.array([1.0, 1.0 + 1e-12, 2.0]), tol=1e-7)
    assert mult == [2, 1]


def test_tagged_label_rules():
    ring = ExactRing()
    q = ring.q
    # q^H on input label 0 multiplies by q^(1/2); X+ on input label 1 substitutes 0
    e = tagged_l(ring, (None, None), ("qH", "X+"), (0, 0, 0, 1))
    assert e == OscElement.scalar(ring, sympy.sqrt(q))
    assert tagged_l(ring, (None, None), ("qH", "X+"), (0, 0, 0, 0)).is_zero()
    assert tagged_l(ring, ("X-", None), (None, None), (1, 0, 1, 0)).is_zero()


def test_zi_all_exactly_zero():
    led = classify_z("zi")
    assert led["total"] == 256 and led["zero"] == 256


@pytest.mark.parametrize("kind,total", [("zn", 16), ("znp", 256), ("z0", 256), ("z0p", 16)])
def test_z_ledger_has_no_third_category(kind, total):
    led = classify_z(kind)
    assert led["total"] == total
    assert not led["unmatched"]
    assert led["zero"] + sum(led["families"].values()) == total
    assert led["zero"] < total


@pytest.mark.parametrize("kind", ["zn", "znp", "z0", "z0p"])
def test_z_batteries(kind, P):
    rep = check_z_identities(kind, P, seed=7, words=20)
    assert rep["words"] >= 20
    assert rep["residual"] < 1e-10


def test_z_battery_detects_wrong_x(P):
    # Z0 built at one x but bracketed at another does not vanish
    ring = FloatRing(Q)
    zs = [z_element("z0", lab, ring, 0.5) for lab in z_label_tuples("z0")]
    form = BracketForm(2, 1, 0.3, P)
    vals = [abs(form(z)) for z in zs if not z.is_zero()]
    assert vals and max(vals) > 1e-3


def test_random_words_are_seeded():
    ring = FloatRing(Q)
    a = [w for w, _ in random_words(ring, 25, 3)]
    b = [w for w, _ in random_words(ring, 25, 3)]
    assert a == b and len(a) == 25
    assert all(len(w.split()) <= 3 for w in a)
