"""Linear classification: span tables, both normal-form families, round trips."""

import itertools
import random
from fractions import Fraction

import pytest

from nambu.polyalg import InputError, Poly, PreconditionError, RatMatrix
from nambu.exterior import (
    DiffForm,
    FormalMap,
    Multivector,
    basis_multivector,
    coordinate_form,
    pullback_form,
    pushforward_tensor,
    wedge,
)
from nambu.linclass import (
    ClassificationReport,
    classify_linear,
    classify_linear_tensor,
    nondegeneracy,
    normal_form_generator,
    span_table,
)
from nambu.verify import is_conambu, is_nambu


def x(n, i):
    return Poly.variable(n, i)


def rand_inv(rng, n, spread=2):
    lower = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    upper = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    for i in range(n):
        for j in range(i):
            lower[i][j] = Fraction(rng.randint(-spread, spread))
            upper[j][i] = Fraction(rng.randint(-spread, spread))
    return RatMatrix(lower).matmul(RatMatrix(upper))


def span_rows(E):
    return {tuple(row) for row in E.data} if E is not None else set()


# -- span table -----------------------------------------------------------------

def test_span_table_type1_example():
    n = 5
    w = wedge(coordinate_form(n, 0),
              DiffForm(n, 1, {(1,): x(n, 1), (2,): x(n, 2)}))
    st = span_table(w)
    assert [st.dim(j) for j in range(n)] == [0, 2, 2, 0, 0]
    e1 = Fraction(1)
    assert span_rows(st.entries[1]) == {(e1, 0, 0, 0, 0), (0, e1, 0, 0, 0)}
    assert span_rows(st.entries[2]) == {(e1, 0, 0, 0, 0), (0, 0, e1, 0, 0)}


def test_span_table_zero_form():
    st = span_table(DiffForm(5, 2, {}))
    assert all(st.entries[j] is None for j in range(5))


def test_span_table_circulant_example():
    n = 5
    w = DiffForm(n, 2, {(1, 2): x(n, 0), (0, 2): x(n, 1).scale(-1),
                        (0, 1): x(n, 2)})
    st = span_table(w)
    e1 = Fraction(1)
    assert span_rows(st.entries[0]) == {(0, e1, 0, 0, 0), (0, 0, e1, 0, 0)}
    assert span_rows(st.entries[1]) == {(e1, 0, 0, 0, 0), (0, 0, e1, 0, 0)}
    assert span_rows(st.entries[2]) == {(e1, 0, 0, 0, 0), (0, e1, 0, 0, 0)}


def test_span_table_sanity_on_verified_inputs():
    rng = random.Random(3)
    for _ in range(10):
        n, q = rng.choice([(5, 3), (6, 4)])
        p = n - q
        signs = [rng.choice([1, -1]) for _ in range(q + 1)]
        _, w = normal_form_generator("type1", n, q, r=q, s=0, signs=signs)
        moved = pullback_form(w, FormalMap.from_matrix(rand_inv(rng, n)))
        st = span_table(moved)
        for j in st.nonzero_indices():
            assert st.dim(j) == p
        st.validate()


def test_span_table_rejects_nonlinear():
    n = 4
    w = DiffForm(n, 1, {(0,): x(n, 0).mul(x(n, 0))})
    with pytest.raises(PreconditionError):
        span_table(w)


# -- classify: spec examples ------------------------------------------------------

def test_classify_type1_signature_two():
    n = 5
    alpha = DiffForm(n, 1, {(1,): x(n, 1), (2,): x(n, 2).scale(-1),
                            (3,): x(n, 3), (4,): x(n, 4)})
    w = wedge(coordinate_form(n, 0), alpha)
    rep = classify_linear(w)
    nf = rep.normal_form
    assert nf.tag == "type1"
    assert (nf.r, nf.s) == (3, 0)
    assert sorted(nf.signs) == [-1, 1, 1, 1]
    assert rep.nondegenerate and not rep.elliptic
    assert rep.signature == 2
    assert rep.index_pair == (1, 3)
    assert rep.zero_set_dim == n - 3 - 1
    assert pullback_form(rep.achieved_form, rep.change) == w


def test_classify_type2_circulant():
    n = 5
    w = DiffForm(n, 2, {(1, 2): x(n, 0), (0, 2): x(n, 1).scale(-1),
                        (0, 1): x(n, 2)})
    rep = classify_linear(w)
    assert rep.normal_form.tag == "type2"
    assert rep.nondegenerate
    assert rep.zero_set_dim == 3 - 1
    # the invariant matrix is the dual field's: eigenvalues all equal up to
    # one common scalar (the paper's (t-1)^3 family)
    ev = rep.eigen.rational_eigenvalues
    assert len(ev) == 3 and ev[0] != 0
    assert len(set(ev)) == 1
    assert pullback_form(rep.achieved_form, rep.change) == w


def test_classify_zero_form():
    rep = classify_linear(DiffForm(5, 2, {}))
    assert rep.normal_form.tag == "type1"
    assert rep.normal_form.r == -1 and rep.normal_form.s == 0
    assert not rep.nondegenerate
    assert rep.change.is_identity()


def test_classify_rejects_non_conambu():
    n = 5
    w = wedge(coordinate_form(n, 0), coordinate_form(n, 1)).poly_scale(x(n, 0)) + \
        wedge(coordinate_form(n, 2), coordinate_form(n, 3)).poly_scale(x(n, 1))
    if is_conambu(w).passed:  # defensive: the fixture must really fail
        pytest.skip("fixture unexpectedly co-Nambu")
    with pytest.raises(PreconditionError):
        classify_linear(w)


def test_classify_rejects_low_coorder():
    w = wedge(coordinate_form(4, 0), coordinate_form(4, 1)).poly_scale(x(4, 0))
    with pytest.raises(PreconditionError):
        classify_linear(w)  # q = 2


# -- classify tensors -----------------------------------------------------------------

def test_classify_tensor_elliptic():
    P, w = normal_form_generator("type1", 4, 3, r=3, s=0, signs=[1, 1, 1, 1])
    rep = classify_linear_tensor(P)
    assert rep.normal_form.tag == "type1"
    assert (rep.normal_form.r, rep.normal_form.s) == (3, 0)
    assert rep.elliptic and rep.nondegenerate
    assert rep.signature == 4
    assert pushforward_tensor(P, rep.change) == rep.achieved_tensor


def test_classify_tensor_swap_field_is_degenerate_type1():
    # d1^d2^(x4 d3 + x3 d4): the dual form x4dx4 - x3dx3 is closed, so the
    # constructive proof (Subcase 1a) classifies the overlap case as Type 1
    n = 4
    field = Multivector(n, 1, {(2,): x(n, 3), (3,): x(n, 2)})
    P = wedge(basis_multivector(n, (0, 1)), field)
    rep = classify_linear_tensor(P)
    assert rep.normal_form.tag == "type1"
    assert rep.normal_form.r == 1
    assert sorted(rep.normal_form.signs) == [-1, 1]
    assert not rep.nondegenerate
    assert pushforward_tensor(P, rep.change) == rep.achieved_tensor


def test_classify_zero_tensor():
    rep = classify_linear_tensor(Multivector(5, 3, {}))
    assert rep.normal_form.tag == "type1"
    assert rep.normal_form.r == -1


# -- nondegeneracy invariants ------------------------------------------------------------

def test_nondegeneracy_elliptic_signature():
    P, w = normal_form_generator("type1", 5, 4, r=4, s=0, signs=[1] * 5)
    rep = classify_linear(w)
    assert rep.elliptic and rep.signature == 5  # q + 1
    assert rep.index_pair == (0, 5)


def test_nondegeneracy_rank_deficit():
    P, w = normal_form_generator("type1", 5, 4, r=3, s=0, signs=[1] * 4)
    rep = classify_linear(w)
    assert rep.normal_form.tag == "type1"
    assert not rep.nondegenerate and rep.zero_set_dim is None


def test_nondegeneracy_type2_diag():
    B = RatMatrix([[1, 0, 0], [0, 2, 0], [0, 0, 3]])
    P, w = normal_form_generator("type2", 6, 4, matrix=B)
    rep = classify_linear(w)
    assert rep.normal_form.tag == "type2"
    assert rep.nondegenerate and rep.zero_set_dim == 3
    # idempotent refill
    assert nondegeneracy(rep).nondegenerate


# -- generator -----------------------------------------------------------------------------

def test_generator_examples_pass_is_nambu():
    P, w = normal_form_generator("type1", 4, 3, r=3, s=0, signs=[1, 1, 1, 1])
    assert is_nambu(P).passed and is_conambu(w).passed
    B = RatMatrix([[1, 0], [0, 2]])
    P2, w2 = normal_form_generator("type2", 5, 4, matrix=B)
    assert is_nambu(P2).passed and is_conambu(w2).passed
    # shape: frame block wedge linear diagonal field
    assert P2.component((0, 1, 2, 3)) == x(5, 3)
    assert P2.component((0, 1, 2, 4)) == x(5, 4).scale(2)


def test_generator_range_validation():
    with pytest.raises(InputError):
        normal_form_generator("type1", 5, 3, r=9, s=0, signs=[1] * 10)
    with pytest.raises(InputError):
        normal_form_generator("type1", 5, 3, r=1, s=5, signs=[1, 1])
    with pytest.raises(InputError):
        normal_form_generator("type2", 5, 3, matrix=RatMatrix([[1]]))
    with pytest.raises(InputError):
        normal_form_generator("weird", 5, 3)


def test_generator_boundary_r_minus_one():
    P, w = normal_form_generator("type1", 5, 3, r=-1, s=0, signs=[])
    assert w.is_zero() and P.is_zero()
    P2, w2 = normal_form_generator("type1", 5, 3, r=-1, s=1, signs=[])
    assert not w2.is_zero()
    assert is_conambu(w2).passed


def test_generator_pairing_block():
    # n=6, q=3, r=1, s=2: quadratic slots x1,x2; pairings x5 dx3, x6 dx4
    P, w = normal_form_generator("type1", 6, 3, r=1, s=2, signs=[1, -1])
    assert is_conambu(w).passed
    rep = classify_linear(w)
    assert rep.normal_form.tag == "type1"
    assert (rep.normal_form.r, rep.normal_form.s) == (1, 2)


# -- the primary randomized round trip ---------------------------------------------------

def test_round_trip_recovery():
    rng = random.Random(11)
    cases = []
    for n, q in [(4, 3), (5, 3), (5, 4), (6, 4)]:
        p = n - q
        for r in {-1, q - 1, q}:
            smax = min(p - 1, q - r)
            for s in {0, smax}:
                signs = [rng.choice([1, -1]) for _ in range(r + 1)]
                cases.append(("type1", n, q, dict(r=r, s=s, signs=signs)))
        for _ in range(2):
            B = RatMatrix([[Fraction(rng.randint(-3, 3)) for _ in range(p + 1)]
                           for _ in range(p + 1)])
            cases.append(("type2", n, q, dict(matrix=B)))
    checked = 0
    for tag, n, q, params in cases:
        P, w = normal_form_generator(tag, n, q, **params)
        if w.is_zero():
            continue
        assert is_nambu(P).passed
        base = classify_linear(w)
        for _ in range(4):
            M = rand_inv(rng, n)
            moved = pullback_form(w, FormalMap.from_matrix(M))
            rep = classify_linear(moved)
            assert rep.normal_form.tag == base.normal_form.tag
            # report validity: the exact pullback identity
            assert pullback_form(rep.achieved_form, rep.change) == moved
            if base.normal_form.tag == "type1" and base.nondegenerate:
                assert rep.signature == base.signature
                assert rep.index_pair == base.index_pair
            if base.normal_form.tag == "type2":
                assert _proportional(rep.eigen.char_coeffs, base.eigen.char_coeffs)
            checked += 1
    assert checked >= 80


def _proportional(coeffs_a, coeffs_b):
    """Eigenvalue multisets agree up to one common nonzero scalar.

    char(t) of c.A is c^n char(t/c): compare coefficient ratios
    a_k / b_k ~ c^{n-k} for a consistent c; exact rational test via
    cross-ratios on the first nonzero coefficient pair.
    """
    import itertools as it
    na, nb = len(coeffs_a) - 1, len(coeffs_b) - 1
    if na != nb:
        return False
    # find candidate scalars from matching nonzero coefficient slots
    for k in range(na):
        if coeffs_a[k] != 0 and coeffs_b[k] != 0:
            # a_k = c^{n-k} b_k; try all rational roots of that relation by
            # direct verification over candidate c = ratio^(1/(n-k)) skipped --
            # instead compare the full vectors after normalizing with this slot
            break
    else:
        return coeffs_a == coeffs_b
    power = na - k
    ratio = coeffs_a[k] / coeffs_b[k]
    # c^power = ratio; verify slotwise consistency without extracting roots:
    # for every pair of slots, a_i^(n-j) b_j^(n-i) == a_j^(n-i) b_i^(n-j) style
    for i in range(na + 1):
        for j in range(i + 1, na + 1):
            ai, bi = coeffs_a[i], coeffs_b[i]
            aj, bj = coeffs_a[j], coeffs_b[j]
            if (ai == 0) != (bi == 0) or (aj == 0) != (bj == 0):
                return False
            if ai == 0 or aj == 0:
                continue
            if (ai / bi) ** (na - j) != (aj / bj) ** (na - i):
                return False
    return True


def test_report_json_shape():
    n = 5
    alpha = DiffForm(n, 1, {(1,): x(n, 1), (2,): x(n, 2), (3,): x(n, 3),
                            (4,): x(n, 4)})
    w = wedge(coordinate_form(n, 0), alpha)
    rep = classify_linear(w)
    data = rep.to_json_obj()
    assert data["type"] == "1"
    assert data["signs"] == [1, 1, 1, 1]
    assert data["nondegenerate"] is True
    assert data["index"] == [0, 4]
    assert "change" in data and "achieved" in data


def test_rational_jordan_block():
    # a nilpotent block survives classification (eigenvalue scaled by one scalar)
    B = RatMatrix([[1, 1], [0, 1]])
    P, w = normal_form_generator("type2", 5, 4, matrix=B)
    rep = classify_linear(w)
    J = rep.rational_jordan
    assert J is not None
    lam = J.data[0][0]
    assert lam != 0 and J.data[1][1] == lam and J.data[0][1] == 1
