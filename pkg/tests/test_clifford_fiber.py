"""Clifford/exterior fiber algebra: relations, spinor module, curvature facts."""

import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from transdirac import clifford_fiber as cf
from transdirac.exact import I, ONE, SQRT2, ZERO, Scalar, rational
from transdirac.matrices import Mat


def np_mat(M):
    out = np.zeros((M.n, M.m), dtype=complex)
    for (i, j), v in M.d.items():
        out[i, j] = complex(v)
    return out


def random_multivector(rng, q):
    terms = {m: rational(rng.randint(-3, 3)) + I * rational(rng.randint(-3, 3))
             for m in rng.sample(range(1 << q), k=min(4, 1 << q))}
    return cf.Multivector(q, terms)


# -- exterior algebra and the Lambda-module action ---------------------------

def test_lambda_action_on_unit_and_generator():
    one = cf.Multivector.unit(2)
    assert cf.lambda_action(1, one) == cf.Multivector.generator(2, 1)
    f1 = cf.Multivector.generator(2, 1)
    assert cf.lambda_action(1, f1) == one.scale(rational(-1))


def test_lambda_action_index_range():
    with pytest.raises(ValueError):
        cf.lambda_action(3, cf.Multivector.unit(2))


@given(st.integers(0, 2**6 - 1), st.integers(1, 6), st.integers(1, 6))
@settings(max_examples=80, deadline=None)
def test_lambda_action_clifford_relations(mask, i, j):
    q = 6
    omega = cf.Multivector(q, {mask: ONE})
    lhs = (cf.lambda_action(i, cf.lambda_action(j, omega))
           + cf.lambda_action(j, cf.lambda_action(i, omega)))
    expect = omega.scale(rational(-2)) if i == j else cf.Multivector(q)
    assert lhs == expect


def test_wedge_signs():
    q = 3
    f1 = cf.Multivector.generator(q, 1)
    f2 = cf.Multivector.generator(q, 2)
    f12 = f1.wedge(f2)
    assert f12 == cf.Multivector.monomial(q, (1, 2))
    assert f2.wedge(f1) == f12.scale(rational(-1))
    assert f1.wedge(f1).is_zero()


# -- Clifford product through the symbol representation -----------------------

def test_clifford_mul_examples():
    q = 2
    f1 = cf.CliffordElement.generator(q, 1)
    f2 = cf.CliffordElement.generator(q, 2)
    assert (cf.clifford_mul(f1, f2).rep + cf.clifford_mul(f2, f1).rep).is_zero()
    assert cf.clifford_mul(f1, f1).rep == cf.Multivector.unit(q).scale(rational(-1))


def test_clifford_mul_unit_law():
    rng = random.Random(3)
    for q in (2, 4):
        one = cf.CliffordElement.unit(q)
        a = cf.CliffordElement(random_multivector(rng, q))
        assert cf.clifford_mul(one, a) == a
        assert cf.clifford_mul(a, one) == a


def test_clifford_mul_rank_mismatch():
    with pytest.raises(ValueError):
        cf.clifford_mul(cf.CliffordElement.unit(2), cf.CliffordElement.unit(4))


def test_clifford_mul_associative():
    rng = random.Random(5)
    q = 4
    for _ in range(10):
        a, b, c = (cf.CliffordElement(random_multivector(rng, q)) for _ in range(3))
        assert cf.clifford_mul(cf.clifford_mul(a, b), c) == \
            cf.clifford_mul(a, cf.clifford_mul(b, c))


def test_symbol_quantize_inverse():
    rng = random.Random(7)
    for q in (2, 4):
        omega = random_multivector(rng, q)
        assert cf.symbol(cf.quantize(omega)) == omega


def test_quantize_of_wedge_is_product():
    q = 2
    f1 = cf.CliffordElement.generator(q, 1)
    f2 = cf.CliffordElement.generator(q, 2)
    w = cf.Multivector.monomial(q, (1, 2))
    assert cf.quantize(w) == cf.clifford_mul(f1, f2)


def test_symbol_of_vector_times_element():
    # sigma(c(f1) c(f1^f2)) = c(f1)(f1^f2) = -f2
    q = 2
    v = cf.CliffordElement.generator(q, 1)
    w = cf.quantize(cf.Multivector.monomial(q, (1, 2)))
    got = cf.symbol(cf.clifford_mul(v, w))
    assert got == cf.Multivector.generator(q, 2).scale(rational(-1))
    assert got == cf.lambda_action(1, cf.Multivector.monomial(q, (1, 2)))


def test_filtration_top_degree():
    rng = random.Random(11)
    q = 4
    for _ in range(20):
        deg_a = rng.randint(0, q)
        deg_b = rng.randint(0, q - deg_a)
        a = random_multivector(rng, q).degree_part(deg_a)
        b = random_multivector(rng, q).degree_part(deg_b)
        prod = cf.symbol(cf.clifford_mul(cf.quantize(a), cf.quantize(b)))
        assert prod.degree_part(deg_a + deg_b) == a.wedge(b)


# -- complex structures and the spinor action ---------------------------------

def test_standard_structure_and_validation():
    J = cf.ComplexStructure.standard(4)
    assert J.l == 2
    with pytest.raises(ValueError):
        cf.ComplexStructure(Mat.identity(2), J.frame[:2])  # J^2 != -1
    with pytest.raises(ValueError):
        cf.ComplexStructure.standard(3)


def test_from_matrix_builds_adapted_frame():
    rng = random.Random(2)
    O = cf.random_orthogonal(rng, 4)
    J1 = cf.ComplexStructure.from_orthogonal(O)
    J2 = cf.ComplexStructure.from_matrix(J1.jmat)
    assert J2.jmat == J1.jmat  # frames may differ; structure agrees


def test_spinor_action_squares_and_adjoints():
    rng = random.Random(13)
    for q in (2, 4):
        J = cf.ComplexStructure.standard(q)
        for _ in range(5):
            f = tuple(cf.random_rational(rng) for _ in range(q))
            M = cf.spinor_action(f, J)
            norm2 = sum((x * x for x in f), ZERO)
            assert (M @ M + Mat.identity(M.n).scale(norm2)).is_zero()
            assert (M + M.dagger()).is_zero()


def test_spinor_action_anticommutators_orthonormal():
    for q in (2, 4, 6):
        J = cf.ComplexStructure.standard(q)
        cs = cf.spinor_cliffords(J)
        for a in range(q):
            for b in range(q):
                anti = cs[a] @ cs[b] + cs[b] @ cs[a]
                expect = Mat.identity(cs[0].n).scale(rational(-2 if a == b else 0))
                assert anti == expect


def test_spinor_action_is_odd():
    J = cf.ComplexStructure.standard(4)
    P = cf.grading_matrix(J.l)
    for M in cf.spinor_cliffords(J):
        assert (P @ M @ P + M).is_zero()


def test_spinor_action_conjugated_frame():
    rng = random.Random(17)
    O = cf.random_orthogonal(rng, 4)
    J = cf.ComplexStructure.from_orthogonal(O)
    cs = cf.spinor_cliffords(J)
    for a in range(4):
        for b in range(4):
            anti = cs[a] @ cs[b] + cs[b] @ cs[a]
            assert anti == Mat.identity(4).scale(rational(-2 if a == b else 0))


# -- two-form actions and invariants ------------------------------------------

def test_two_form_action_q2():
    mu = rational(3)
    J = cf.ComplexStructure.standard(2)
    B = cf.block_two_form([mu])
    act = cf.two_form_action(B, J)
    cs = cf.spinor_cliffords(J)
    assert act == (cs[0] @ cs[1]).scale(-I * mu)
    # bottom component eigenvalue -mu, top (odd) +mu
    assert act.entry(0, 0) == -mu and act.entry(1, 1) == mu
    assert act.is_hermitian()


def test_two_form_action_even_and_hermitian_random():
    rng = random.Random(23)
    for q in (2, 4):
        B, J, _ = cf.random_compatible_pair(rng, q)
        act = cf.two_form_action(B, J)
        assert act.is_hermitian()
        P = cf.grading_matrix(J.l)
        assert (P @ act @ P - act).is_zero()


def test_two_form_action_rejects_bad_input():
    J = cf.ComplexStructure.standard(2)
    with pytest.raises(ValueError):
        cf.two_form_action(Mat.from_rows([[0, 1], [1, 0]]), J)  # not antisym
    with pytest.raises(ValueError):
        cf.two_form_action(Mat.from_rows([[0, 1], [-1, 0]]), J)  # not imaginary


def test_skew_invariants_q2_q4():
    mus, lam, m = cf.skew_invariants(cf.block_two_form([rational(3)]))
    assert mus == (rational(3),) and lam == rational(3) and m == rational(3)
    mu1, mu2 = rational(5), rational(2)
    mus, lam, m = cf.skew_invariants(cf.block_two_form([mu1, mu2]))
    assert mus == (mu1, mu2)
    assert lam == rational(7) and m == mu2


def test_skew_invariants_degenerate():
    with pytest.raises(cf.DegenerateCurvature):
        cf.skew_invariants(Mat.zero(2))


def test_skew_invariants_orthogonal_invariance():
    rng = random.Random(29)
    for q in (4, 6):
        for _ in range(10):
            mus = tuple(cf.random_mu(rng) for _ in range(q // 2))
            B = cf.block_two_form(mus)
            O = cf.random_orthogonal(rng, q)
            got = cf.skew_invariants(O @ B @ O.transpose())
            assert got == cf.skew_invariants(B)
            assert sorted(got[0], key=float) == sorted(mus, key=float)


def test_skew_invariants_sqrt2_values():
    mus = (rational(2) + SQRT2, rational(1), rational(1, 2))
    got, lam, m = cf.skew_invariants(cf.block_two_form(mus))
    assert set(got) == set(mus)
    assert lam == sum(mus, ZERO) and m == rational(1, 2)


def test_check_rl1_exact_and_incompatible():
    rng = random.Random(31)
    for q in (2, 4, 6):
        B, J, mus = cf.random_compatible_pair(rng, q)
        rep = cf.check_rl1(B, J)
        assert rep.exact_zero and rep.max_abs == 0.0
        assert rep.lam == sum(mus, ZERO)
    # orientation flip: J -> -J breaks positivity
    B, J, _ = cf.random_compatible_pair(rng, 2)
    Jneg = cf.ComplexStructure(J.jmat.scale(rational(-1)),
                               tuple(tuple(-x for x in v) if i % 2 else v
                                     for i, v in enumerate(J.frame)))
    with pytest.raises(cf.IncompatiblePair):
        cf.check_rl1(B, Jneg)


def test_check_rl1_q4_distinct_mus():
    J = cf.ComplexStructure.standard(4)
    B = cf.block_two_form([rational(4), rational(1)])
    rep = cf.check_rl1(B, J)
    assert rep.exact_zero and rep.lam == rational(5)


def test_odd_lower_bound_q2_tight():
    J = cf.ComplexStructure.standard(2)
    mu = rational(3)
    rep = cf.odd_lower_bound(cf.block_two_form([mu]), J)
    assert rep.bound == mu  # -(lambda - 2m) = mu here
    assert rep.psd_ok and rep.attained
    assert rep.min_eigenvalue == mu and rep.margin == ZERO


def test_odd_lower_bound_q4_equal_mus_oracle():
    """Independent oracle: numpy diagonalization of the odd block."""
    J = cf.ComplexStructure.standard(4)
    mu = rational(2)
    B = cf.block_two_form([mu, mu])
    act = cf.two_form_action(B, J)
    _, odd = cf.parity_indices(J.l)
    sub = np_mat(act.submatrix(odd, odd))
    evs = np.linalg.eigvalsh(sub)
    assert abs(evs.min()) < 1e-12       # min eigenvalue on the odd part is 0
    rep = cf.odd_lower_bound(B, J)
    assert rep.bound == ZERO            # 2m - lambda = 0 at equal mus
    assert rep.psd_ok and rep.attained and rep.margin == ZERO


def test_odd_lower_bound_matches_numpy_min():
    rng = random.Random(37)
    for q in (2, 4, 6):
        for _ in range(5):
            B, J, mus = cf.random_compatible_pair(rng, q)
            rep = cf.odd_lower_bound(B, J, mus=mus)
            assert rep.psd_ok and rep.attained
            act = cf.two_form_action(B, J)
            _, odd = cf.parity_indices(J.l)
            evs = np.linalg.eigvalsh(np_mat(act.submatrix(odd, odd)))
            assert abs(evs.min() - float(rep.bound)) < 1e-9


def test_twist_dim_replicates_spectrum():
    J = cf.ComplexStructure.standard(2)
    B = cf.block_two_form([rational(2)])
    rep = cf.odd_lower_bound(B, J, twist_dim=3)
    assert rep.psd_ok and rep.attained


def test_fiber_battery_small():
    rng = random.Random(41)
    res = cf.fiber_battery(rng, 4, 25)
    assert res.ok and not res.failures
