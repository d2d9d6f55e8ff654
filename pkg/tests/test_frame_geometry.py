"""Frame models: admissibility, Koszul data, curvature, divergences."""

import json

import pytest

from transdirac import clifford_fiber as cf
from transdirac import frame_geometry as fg
from transdirac.exact import ONE, ZERO, rational
from transdirac.matrices import Mat


@pytest.fixture(scope="module")
def torus():
    return fg.load_bundled("flat_t3")


@pytest.fixture(scope="module")
def heis():
    return fg.load_bundled("heisenberg")


@pytest.fixture(scope="module")
def sol():
    return fg.load_bundled("sol")


# -- validation ----------------------------------------------------------------

def test_fixtures_validate(torus, heis, sol):
    for m in (torus, heis, sol, fg.load_bundled("t3_landau")):
        rep = fg.validate(m)
        assert rep.ok and not rep.warnings


def test_bad_bundlelike_fails():
    rep = fg.validate(fg.load_bundled("bad_bundlelike"))
    assert not rep.ok
    assert "bundle-like" in rep.first_failure()


def test_odd_codimension_fails():
    m = fg.make_model("oddq", 1, 3, [])
    rep = fg.validate(m)
    assert not rep.ok and "even" in rep.first_failure()


def test_jacobi_failure_detected():
    # [u1,u2]=u3 and [u1,u3]=u1 leave [[u1,u2],u3]+cyc = -u3 != 0
    m = fg.make_model("notalie", 1, 2, [(1, 2, 3, "1"), (1, 3, 1, "1")])
    rep = fg.validate(m)
    assert any("Jacobi" in f for f in rep.failures)


def test_involutivity_failure():
    m = fg.make_model("notafoliation", 2, 2, [(1, 2, 3, "1")])
    rep = fg.validate(m)
    assert any("involutivity" in f for f in rep.failures)


def test_unimodularity_warning():
    m = fg.make_model("affine", 1, 2, [(2, 1, 1, "1")])
    rep = fg.validate(m)
    assert rep.ok
    assert any("non-unimodular" in w for w in rep.warnings)
    assert fg.divergence(m, 1) == rational(-1)  # div f1 = -tr(ad f1)


# -- Levi-Civita through Koszul --------------------------------------------------


def test_levi_civita_flat(torus):
    g = fg.levi_civita(torus)
    assert all(g[i][j][k].is_zero()
               for i in range(3) for j in range(3) for k in range(3))


def test_levi_civita_heisenberg(heis):
    g = fg.levi_civita(heis)
    assert g[1][2][0] == rational(1, 2)   # <nabla_{f1} f2, e1>


def test_levi_civita_sol(sol):
    g = fg.levi_civita(sol)
    assert g[0][0][1] == ONE              # <nabla_{e1} e1, f1>


@pytest.mark.parametrize("name", ["flat_t3", "heisenberg", "sol"])
def test_levi_civita_torsion_and_metric(name):
    m = fg.load_bundled(name)
    g = fg.levi_civita(m)
    n = m.n
    for i in range(n):
        for j in range(n):
            for k in range(n):
                assert g[i][j][k] - g[j][i][k] == m.c[i][j][k]
                assert (g[i][j][k] + g[i][k][j]).is_zero()


# -- transverse connection --------------------------------------------------------

def test_transverse_connection_values(torus, heis, sol):
    assert all(A.is_zero() for A in fg.transverse_connection(torus))
    A_h = fg.transverse_connection(heis)
    assert all(A.is_zero() for A in A_h)  # nabla_{f1} f2 = P_H(e1/2) = 0
    A_s = fg.transverse_connection(sol)
    assert A_s[1].is_zero()                       # nabla_{f1} = 0
    assert A_s[2] == Mat.from_rows([[0, -1], [1, 0]])  # f1 -> f2, f2 -> -f1


@pytest.mark.parametrize("name", ["heisenberg", "sol"])
def test_transverse_connection_metric(name):
    m = fg.load_bundled(name)
    for A in fg.transverse_connection(m):
        assert (A + A.transpose()).is_zero()


def test_torsion_identity_vs_integrability(heis, sol, torus):
    """nabla_{f_a} f_b - nabla_{f_b} f_a - [f_a, f_b] decomposes as zero
    horizontally and as the integrability tensor leafwise."""
    for m in (heis, sol, torus):
        A = fg.transverse_connection(m)
        R = fg.integrability_tensor(m)
        p, q = m.p, m.q
        for a in range(q):
            for b in range(a + 1, q):
                for g in range(q):
                    horiz = (A[p + a].entry(g, b) - A[p + b].entry(g, a)
                             - m.c[p + a][p + b][p + g])
                    assert horiz.is_zero()
                for i in range(p):
                    assert (-m.c[p + a][p + b][i]) == R[(a, b)][i]


def test_mean_curvature(torus, heis, sol):
    assert all(t.is_zero() for t in fg.mean_curvature(torus))
    assert all(t.is_zero() for t in fg.mean_curvature(heis))
    assert fg.mean_curvature(sol) == (ONE, ZERO)


def test_integrability_values(heis, sol):
    assert fg.integrability_tensor(heis)[(0, 1)] == (rational(-1),)
    assert fg.integrability_tensor(sol)[(0, 1)] == (ZERO,)


# -- curvature -------------------------------------------------------------------

def test_curvature_flat_and_heisenberg(torus, heis):
    for m in (torus, heis):
        curv = fg.curvature(m)
        assert all(R.is_zero() for R in curv.values())
        assert fg.scalar_curvature(m).is_zero()


def test_curvature_sol(sol):
    curv = fg.curvature(sol)
    R12 = curv[(1, 2)]   # R(f1, f2)
    assert R12.entry(1, 0) == ONE    # g(R(f1,f2) f1, f2) = 1
    assert R12.entry(0, 1) == -ONE
    assert fg.scalar_curvature(sol) == rational(2)
    # leaf-direction curvature vanishes (leafwise flat transverse connection)
    assert curv[(0, 1)].is_zero() and curv[(0, 2)].is_zero()


def test_curvature_antisymmetry_as_endomorphism(sol):
    for R in fg.curvature(sol).values():
        assert (R + R.transpose()).is_zero()


# -- divergences -------------------------------------------------------------------

@pytest.mark.parametrize("name", ["flat_t3", "heisenberg", "sol"])
def test_divergence_dual_route(name):
    m = fg.load_bundled(name)
    for a in range(m.q):
        trace_route = fg.divergence(m, m.p + a)
        closed_route = fg.divergence_closed_horizontal(m, a)
        assert trace_route == closed_route


def test_divergence_values(torus, heis, sol):
    for m in (torus, heis, sol):
        for u in range(m.n):
            assert fg.divergence(m, u).is_zero()


# -- spin connection ------------------------------------------------------------------

def test_spin_connection_values(torus, heis, sol):
    J = cf.ComplexStructure.standard(2)
    assert all(G.is_zero() for G in fg.spin_connection(torus, J))
    assert all(G.is_zero() for G in fg.spin_connection(heis, J))
    spins = fg.spin_connection(sol, J)
    cs = cf.spinor_cliffords(J)
    # oracle: the commutator identity pins the sign, giving
    # Gamma_{f2} = (1/4)(c(f1)c(f2) - c(f2)c(f1))
    expect = (cs[0] @ cs[1] - cs[1] @ cs[0]).scale(rational(1, 4))
    assert spins[2] == expect
    assert spins[0].is_zero() and spins[1].is_zero()


@pytest.mark.parametrize("name", ["heisenberg", "sol"])
def test_spin_connection_commutator_identity(name):
    m = fg.load_bundled(name)
    J = cf.ComplexStructure.standard(2)
    A = fg.transverse_connection(m)
    spins = fg.spin_connection(m, J)
    cs = cf.spinor_cliffords(J)
    for u in range(m.n):
        for b in range(m.q):
            lhs = spins[u] @ cs[b] - cs[b] @ spins[u]
            vec = tuple(A[u].entry(g, b) for g in range(m.q))
            assert lhs == cf.spinor_action(vec, J)


def test_spin_connection_skew_hermitian(sol):
    J = cf.ComplexStructure.standard(2)
    for G in fg.spin_connection(sol, J):
        assert G.is_skew_hermitian()


def test_spin_connection_requires_parallel_j():
    # leafwise rotation in the (f1, f3) plane does not commute with the
    # standard J pairing (f1,f2)(f3,f4)
    m = fg.make_model("jrot", 1, 4, [(1, 2, 4, "1"), (1, 4, 2, "-1")])
    assert fg.validate(m).ok
    J = cf.ComplexStructure.standard(4)
    with pytest.raises(fg.ModelError, match="u1"):
        fg.spin_connection(m, J)


# -- model files -----------------------------------------------------------------------

def test_bundled_names():
    names = fg.bundled_model_names()
    for expected in ("flat_t3", "heisenberg", "sol", "t3_landau", "bad_bundlelike"):
        assert expected in names


def test_load_model_roundtrip(tmp_path):
    data = {
        "name": "custom",
        "p": 1, "q": 2,
        "brackets": [[2, 3, 1, "1/2+1/4√2"]],
        "line_bundle": {"B": [["0", "-2i"], ["2i", "0"]]},
        "J": [["0", "-1"], ["1", "0"]],
        "twist_dim": 2,
    }
    path = tmp_path / "custom.json"
    path.write_text(json.dumps(data), encoding="utf-8")
    m = fg.load_model(path)
    assert m.twist_dim == 2
    assert m.c[1][2][0] == fg.parse_real("1/2+1/4√2")
    assert m.line_b.entry(0, 1) == fg.parse_imaginary("-2i")
    assert fg.resolve_model(str(path)).name == "custom"


def test_load_model_errors(tmp_path):
    with pytest.raises(fg.ModelError):
        fg.load_model(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(fg.ModelError):
        fg.load_model(bad)
    malformed = tmp_path / "m.json"
    malformed.write_text(json.dumps({"p": 1}))
    with pytest.raises(fg.ModelError):
        fg.load_model(malformed)
    with pytest.raises(fg.ModelError):
        fg.load_bundled("nonexistent_model")


def test_derive_connection_requires_validity():
    with pytest.raises(fg.ModelError):
        fg.derive_connection(fg.load_bundled("bad_bundlelike"))
