"""Magnetic lattice spectra of the transverse Dirac square on flat tori.

The torus fixtures have one leaf direction and a two-dimensional transverse
torus carrying a line bundle whose curvature two-form is stored in units of
2*pi, so the integer entries of i*B are Chern numbers.  The Dirac square is
never discretized through the first-order operator (central differences of
first order double the spectrum); instead its verified second-order normal
form -- magnetic Bochner Laplacian plus a constant curvature endomorphism --
is assembled with U(1) link phases:

* plaquette flux 2*pi*k*c / N^2 per cell in Landau gauge, with the boundary
  column of x-links twisted by -2*pi*k*c*y/N so every plaquette, wrap-around
  included, carries the same flux (this is where integrality of k*c enters);
* the Dirac square contains no leaf derivatives, so the leafwise-constant
  sector carries the whole transverse spectrum; full-3D assembly is kept as
  an option and is block-diagonal over leaf sites.

Floating point lives only here; the symbolic layer stays exact.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .clifford_fiber import ComplexStructure, skew_invariants, two_form_action
from .exact import I as IUNIT
from .frame_geometry import FrameModel, ModelError, require_valid
from .matrices import Mat
from .operator_calculus import DiffOp

TWO_PI = 2.0 * math.pi

DENSE_CUTOFF = 4096


class SolverError(RuntimeError):
    """Eigensolver failed to converge; carries partial residual information."""


def require_flat_torus(model: FrameModel) -> None:
    require_valid(model)
    for i in range(model.n):
        for j in range(model.n):
            for k in range(model.n):
                if not model.c[i][j][k].is_zero():
                    raise ModelError(
                        f"model {model.name!r} is not a flat torus: "
                        f"c^{k + 1}_({i + 1},{j + 1}) != 0")
    if model.q != 2:
        raise ModelError(
            "lattice assembly implemented for transverse dimension q=2; "
            f"model has q={model.q}")


def chern_number(model: FrameModel) -> int:
    """Integer Chern number of the transverse plane: the (1,2) entry of i*B.

    Raises on a non-integer value (the bundle is not realizable on the
    lattice torus)."""
    if model.line_b is None:
        return 0
    k01 = IUNIT * model.line_b.entry(0, 1)
    if not k01.is_rational() or k01.ra.denominator != 1:
        raise ModelError(
            f"non-integer Chern number {k01}: flux is not 2*pi times an integer")
    return int(k01.ra)


def invariants_2pi(model: FrameModel) -> tuple[float, float]:
    """(lambda, m) of the physical curvature 2*pi*B."""
    if model.line_b is None:
        return 0.0, 0.0
    _, lam, m = skew_invariants(model.line_b)
    return TWO_PI * float(lam), TWO_PI * float(m)


# ---------------------------------------------------------------------------
# link phases and the magnetic Bochner Laplacian

def _site_index(N: int):
    def idx(x: int, y: int) -> int:
        return (x % N) * N + (y % N)
    return idx


def hop_matrices(N: int, flux_quanta: int,
                 gauge_phase: np.ndarray | None = None) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    """Forward hop operators (U_x psi)(x,y) = e^{i theta} psi(x+1,y) etc. in
    Landau gauge with a twisted boundary column; total flux 2*pi*flux_quanta.

    `gauge_phase`, when given, applies the lattice gauge transformation
    psi -> e^{i g} psi to the links (spectrum-preserving)."""
    idx = _site_index(N)
    dim = N * N
    a = TWO_PI * flux_quanta
    rows_x, cols_x, vals_x = [], [], []
    rows_y, cols_y, vals_y = [], [], []
    for x in range(N):
        for y in range(N):
            i = idx(x, y)
            jx = idx(x + 1, y)
            phase_x = -a * y / N if x == N - 1 else 0.0
            jy = idx(x, y + 1)
            phase_y = a * x / (N * N)
            if gauge_phase is not None:
                phase_x += gauge_phase[i] - gauge_phase[jx]
                phase_y += gauge_phase[i] - gauge_phase[jy]
            rows_x.append(i), cols_x.append(jx), vals_x.append(np.exp(1j * phase_x))
            rows_y.append(i), cols_y.append(jy), vals_y.append(np.exp(1j * phase_y))
    Ux = sp.csr_matrix((vals_x, (rows_x, cols_x)), shape=(dim, dim))
    Uy = sp.csr_matrix((vals_y, (rows_y, cols_y)), shape=(dim, dim))
    return Ux, Uy


def magnetic_bochner(N: int, flux_quanta: int,
                     gauge_phase: np.ndarray | None = None) -> sp.csr_matrix:
    """sum over the two transverse directions of (2 - U - U^dagger)/h^2 with
    h = 1/N: the positive magnetic Bochner Laplacian."""
    Ux, Uy = hop_matrices(N, flux_quanta, gauge_phase)
    dim = N * N
    h2 = 1.0 / (N * N)
    eye = sp.identity(dim, format="csr", dtype=complex)
    H = (4.0 * eye - Ux - Ux.getH() - Uy - Uy.getH()) / h2
    return H.tocsr()


# ---------------------------------------------------------------------------
# lattice operators

@dataclass
class LatticeOperator:
    model_name: str
    k: int
    N: int
    fiber_dim: int
    reduced: bool
    matrix: sp.csr_matrix
    label: str = ""

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def hermiticity_defect(self) -> float:
        d = self.matrix - self.matrix.getH()
        return 0.0 if d.nnz == 0 else np.max(np.abs(d.data))

    def is_exactly_hermitian(self) -> bool:
        return (self.matrix != self.matrix.getH()).nnz == 0


def _constant_endomorphism(model: FrameModel, k: int) -> np.ndarray:
    """Float matrix of the constant fiber term k c(R^L) in physical units.

    On a flat torus every other constant of the verified second-order form
    vanishes (tau = 0, K = 0, integrability = 0)."""
    J = ComplexStructure.from_matrix(model.jmat) if model.jmat is not None \
        else ComplexStructure.standard(model.q)
    dim = 1 << J.l
    if model.line_b is None or k == 0:
        return np.zeros((dim, dim), dtype=complex)
    act = two_form_action(model.line_b, J)
    out = np.zeros((dim, dim), dtype=complex)
    for (i, j), v in act.d.items():
        out[i, j] = complex(v)
    return TWO_PI * k * out


def discretize(model: FrameModel, k: int, N: int, fiber: str = "spinor",
               reduced: bool = True, n_leaf: int | None = None,
               gauge_phase: np.ndarray | None = None) -> LatticeOperator:
    """Assemble the Dirac square (fiber="spinor") or the plain line-bundle
    Bochner Laplacian (fiber="line") at tensor power k on an N x N transverse
    lattice.  Exactly Hermitian by construction.

    reduced=False tensors with `n_leaf` leaf sites; the operator carries no
    leaf derivatives, so this multiplies every multiplicity by n_leaf."""
    require_flat_torus(model)
    if N < 4 or N % 2:
        raise ModelError("N must be even and >= 4")
    c = chern_number(model)
    if k and model.line_b is None:
        raise ModelError("k != 0 requires a line bundle")
    H = magnetic_bochner(N, k * c, gauge_phase)
    if fiber == "line":
        fdim = 1
        full = H
    elif fiber == "spinor":
        E = _constant_endomorphism(model, k)
        fdim = E.shape[0]
        full = sp.kron(H, sp.identity(fdim, dtype=complex, format="csr"),
                       format="csr")
        full = full + sp.kron(sp.identity(N * N, dtype=complex, format="csr"),
                              sp.csr_matrix(E), format="csr")
    else:
        raise ModelError(f"unknown fiber {fiber!r}")
    if not reduced:
        nl = n_leaf if n_leaf is not None else N
        full = sp.kron(sp.identity(nl, dtype=complex, format="csr"), full,
                       format="csr")
    op = LatticeOperator(model_name=model.name, k=k, N=N, fiber_dim=fdim,
                         reduced=reduced, matrix=full.tocsr(),
                         label=f"{fiber} k={k} N={N}")
    return op


def parity_blocks(model: FrameModel, k: int, N: int) \
        -> tuple[sp.csr_matrix, sp.csr_matrix]:
    """(even, odd) blocks of the Dirac square; the constant endomorphism is
    grading-even, so the two sectors decouple exactly."""
    require_flat_torus(model)
    c = chern_number(model)
    H = magnetic_bochner(N, k * c)
    E = _constant_endomorphism(model, k)
    fdim = E.shape[0]
    even_ix = [m for m in range(fdim) if bin(m).count("1") % 2 == 0]
    odd_ix = [m for m in range(fdim) if bin(m).count("1") % 2 == 1]
    off = E[np.ix_(even_ix, odd_ix)]
    if np.max(np.abs(off)) > 0:
        raise ModelError("curvature endomorphism is not grading-even")
    eye = sp.identity(N * N, dtype=complex, format="csr")
    blocks = []
    for ix in (even_ix, odd_ix):
        sub = sp.csr_matrix(E[np.ix_(ix, ix)])
        blocks.append((sp.kron(H, sp.identity(len(ix), dtype=complex, format="csr"))
                       + sp.kron(eye, sub)).tocsr())
    return blocks[0], blocks[1]


# ---------------------------------------------------------------------------
# eigensolvers

def eigen(op: LatticeOperator | sp.csr_matrix, count: int,
          method: str = "auto", cross_check: bool = False) -> np.ndarray:
    """Lowest `count` eigenvalues, ascending.  Dense below DENSE_CUTOFF,
    Lanczos (ARPACK) above; `cross_check` runs both and asserts agreement."""
    M = op.matrix if isinstance(op, LatticeOperator) else op
    dim = M.shape[0]
    count = min(count, dim)
    if method == "auto":
        method = "dense" if dim <= DENSE_CUTOFF else "sparse"
    if method == "dense":
        vals = np.linalg.eigvalsh(M.toarray())[:count]
    elif method == "sparse":
        vals = _eigsh_lowest(M, count)
    else:
        raise ValueError(f"unknown method {method!r}")
    if cross_check:
        other = _eigsh_lowest(M, count) if method == "dense" \
            else np.linalg.eigvalsh(M.toarray())[:count]
        if np.max(np.abs(vals - other)) > 1e-8 * max(1.0, np.max(np.abs(vals))):
            raise SolverError("dense and Lanczos eigenvalues disagree")
    return vals


def _eigsh_lowest(M: sp.csr_matrix, count: int) -> np.ndarray:
    dim = M.shape[0]
    k = min(count, dim - 2)
    try:
        vals = spla.eigsh(M, k=k, which="SA", maxiter=5000,
                          return_eigenvectors=False)
    except spla.ArpackNoConvergence as exc:
        got = np.sort(exc.eigenvalues) if exc.eigenvalues is not None else []
        raise SolverError(
            f"Lanczos did not converge: {len(got)}/{k} eigenvalues") from exc
    return np.sort(vals)[:count]


def discretization_allowance(k: int, c: int, N: int) -> float:
    """Bound on how far the kernel cluster of the discrete Dirac square can
    dip below zero: the lattice lowest level sits O((pi k c / N)^2) under the
    continuum one."""
    return 2.0 * (math.pi * k * abs(c) / N) ** 2 + 1e-9


# ---------------------------------------------------------------------------
# spectrum reports

@dataclass
class SpectrumReport:
    k: int
    N: int
    eigenvalues: np.ndarray
    gap: float
    kernel_dim_even: int
    kernel_dim_odd: int
    fitted_C: float
    lam: float
    m: float
    ambiguous: bool
    runtime_ms: float

    def row(self) -> dict:
        return {
            "k": self.k, "N": self.N, "gap": self.gap, "2km": 2 * self.k * self.m,
            "fitted_C": self.fitted_C, "kernel_odd": self.kernel_dim_odd,
            "kernel_even": self.kernel_dim_even, "runtime_ms": self.runtime_ms,
        }


def spectrum_report(model: FrameModel, k: int, N: int,
                    count: int = 40) -> SpectrumReport:
    """Eigenvalue report for one k: kernel clusters per parity sector, the
    gap above them, and the fitted defect C = max(0, 2km - gap)."""
    t0 = time.perf_counter()
    lam, m = invariants_2pi(model)
    even, odd = parity_blocks(model, k, N)
    ev_even = eigen(even, count)
    ev_odd = eigen(odd, count)
    allvals = np.sort(np.concatenate([ev_even, ev_odd]))
    thr = (2 * k * m) / 10.0 if k >= 1 and m > 0 else 1e-6
    kernel_even = int(np.sum(ev_even < thr))
    kernel_odd = int(np.sum(ev_odd < thr))
    above = allvals[allvals >= thr]
    gap = float(above[0]) if len(above) else math.inf
    ambiguous = bool(gap < 4 * thr) if k >= 1 and m > 0 else False
    fitted = max(0.0, 2 * k * m - gap)
    ms = (time.perf_counter() - t0) * 1000.0
    return SpectrumReport(k=k, N=N, eigenvalues=allvals, gap=gap,
                          kernel_dim_even=kernel_even, kernel_dim_odd=kernel_odd,
                          fitted_C=fitted, lam=lam, m=m, ambiguous=ambiguous,
                          runtime_ms=ms)


def gap_scan(model: FrameModel, k_values, N: int, count: int = 40) -> list[SpectrumReport]:
    return [spectrum_report(model, k, N, count) for k in k_values]


def kernel_odd(model: FrameModel, k: int, N: int) -> int:
    rep = spectrum_report(model, k, N)
    if rep.ambiguous:
        raise SolverError(
            f"ambiguous kernel cluster at k={k}, N={N}: gap {rep.gap:.3g} too "
            f"close to the threshold")
    return rep.kernel_dim_odd


@dataclass
class LowerBoundReport:
    k: int
    N: int
    min_eigenvalue: float
    k_lambda: float
    defect: float  # max(0, k*lambda - min eig); Lemma-style constant

    def row(self) -> dict:
        return {"k": self.k, "N": self.N, "min_eig": self.min_eigenvalue,
                "k_lambda": self.k_lambda, "C_k": self.defect}


def lemma1_estimate(model: FrameModel, k_values, N: int) -> list[LowerBoundReport]:
    """Lower-bound scan for the plain line-bundle Bochner Laplacian: reports
    C_k = max(0, k*lambda - min eig), which the estimate asserts is bounded
    uniformly in k (on the torus the integrability term is absent)."""
    lam, _ = invariants_2pi(model)
    out = []
    for k in k_values:
        op = discretize(model, k, N, fiber="line")
        ev = eigen(op, 1)
        defect = max(0.0, k * lam - float(ev[0]))
        out.append(LowerBoundReport(k=k, N=N, min_eigenvalue=float(ev[0]),
                                    k_lambda=k * lam, defect=defect))
    return out


# ---------------------------------------------------------------------------
# cross-validation of symbolic operators on the lattice

def _split_coefficient(M1: Mat | None, M0: Mat | None, dim: int) -> np.ndarray:
    """Physical float coefficient from the exact pair (with-B, zero-B): the
    line-bundle curvature enters the symbolic layer in units of 2*pi, and
    operator coefficients are affine in it, so phys = M0 + 2*pi (M1 - M0)."""
    out0 = np.zeros((dim, dim), dtype=complex)
    out1 = np.zeros((dim, dim), dtype=complex)
    if M0 is not None:
        for (i, j), v in M0.d.items():
            out0[i, j] = complex(v)
    if M1 is not None:
        for (i, j), v in M1.d.items():
            out1[i, j] = complex(v)
    return out0 + TWO_PI * (out1 - out0)


def discretize_diffop(op_pair: tuple[DiffOp, DiffOp], N: int) -> LatticeOperator:
    """Term-by-term stencil discretization of a normal-ordered operator on
    the leafwise-reduced lattice sections.

    `op_pair` is (operator, operator rebuilt with the line bundle zeroed);
    the pair disentangles which part of each coefficient scales with the
    2*pi of the physical curvature.  Leaf derivatives act as zero on the
    reduced sector.  Monomials map to central/second differences with link
    phases; equal exact operators yield identical matrices."""
    op1, op0 = op_pair
    setup = op1.setup
    model = setup.model
    require_flat_torus(model)
    c = chern_number(model)
    k = setup.k
    Ux, Uy = hop_matrices(N, k * c)
    dim_site = N * N
    h = 1.0 / N
    eye = sp.identity(dim_site, dtype=complex, format="csr")
    hops = (Ux, Uy)

    def site_op(word) -> sp.csr_matrix | None:
        p = model.p
        horiz = []
        for u in word:
            if u < p:
                return None  # leaf derivative: zero on the reduced sector
            horiz.append(u - p)
        if not horiz:
            return eye
        if len(horiz) == 1:
            U = hops[horiz[0]]
            return (U - U.getH()) / (2 * h)
        if len(horiz) == 2:
            a, b = horiz
            if a == b:
                U = hops[a]
                return (U + U.getH() - 2 * eye) / (h * h)
            Da = (hops[a] - hops[a].getH()) / (2 * h)
            Db = (hops[b] - hops[b].getH()) / (2 * h)
            return (Da @ Db).tocsr()
        raise ModelError("stencils implemented for degree <= 2")

    fdim = setup.fiber.dim
    acc = sp.csr_matrix((dim_site * fdim, dim_site * fdim), dtype=complex)
    words = set(op1.terms) | set(op0.terms)
    for w in sorted(words):
        S = site_op(w)
        if S is None:
            continue
        coeff = _split_coefficient(op1.terms.get(w), op0.terms.get(w), fdim)
        if np.max(np.abs(coeff)) == 0.0:
            continue
        acc = acc + sp.kron(S, sp.csr_matrix(coeff), format="csr")
    return LatticeOperator(model_name=model.name, k=k, N=N, fiber_dim=fdim,
                           reduced=True, matrix=acc.tocsr(), label="diffop")


def cross_validate(lhs_pair: tuple[DiffOp, DiffOp],
                   rhs_pair: tuple[DiffOp, DiffOp],
                   N: int, trials: int, rng: np.random.Generator) -> float:
    """Apply both discretized operators to random sections; max relative
    deviation.  Exactly equal symbolic operators give identical matrices, so
    the residual isolates assembly and normal-form faults."""
    ML = discretize_diffop(lhs_pair, N).matrix
    MR = discretize_diffop(rhs_pair, N).matrix
    worst = 0.0
    dim = ML.shape[0]
    for _ in range(max(1, trials)):
        s = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
        ls = ML @ s
        rs = MR @ s
        denom = max(np.linalg.norm(ls), np.linalg.norm(rs), 1e-30)
        worst = max(worst, float(np.linalg.norm(ls - rs) / denom))
    return worst


def random_gauge_phase(N: int, rng: np.random.Generator) -> np.ndarray:
    return rng.uniform(0.0, TWO_PI, size=N * N)
