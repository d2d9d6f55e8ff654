"""Exact Clifford and exterior algebra of the normal fiber.

Basis bookkeeping is by bitmask: the exterior monomial f_{i1} ^ ... ^ f_{ik}
(indices ascending, 1-based in the API, bits 0-based internally) is the
integer with those bits set.  The two fibers in play are

* the full exterior algebra on q generators (dimension 2^q), on which the
  Clifford algebra acts by c(f) = ext(f*) - int(f), and
* the spinor fiber attached to an orthogonal complex structure J: the
  exterior algebra on the l = q/2 anti-holomorphic covectors, on which
  c(f) = sqrt(2) (ext of the (1,0)-part dual - int of the (0,1)-part).

Everything is exact; the module also certifies the two fiberwise facts the
vanishing argument rests on: the curvature action is the constant -lambda
on the bottom component, and its restriction to the odd part is bounded
below by -(lambda - 2 min mu), both as zero-residual statements.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .exact import F0, I, ONE, SQRT2, ZERO, Scalar, rational
from .matrices import Mat


class DegenerateCurvature(ValueError):
    """The two-form is degenerate (not symplectic on the fiber)."""


class IncompatiblePair(ValueError):
    """(B, J) fails the compatibility hypothesis B(J., J.) = B, iB(v, Jv) > 0."""


# ---------------------------------------------------------------------------
# bitmask exterior/interior actions

def _sign_below(mask: int, j: int) -> int:
    """(-1)^(number of set bits below j)."""
    return -1 if (mask & ((1 << j) - 1)).bit_count() & 1 else 1


def ext_bit(mask: int, j: int) -> tuple[int, int]:
    """Wedge by generator j (0-based): returns (new_mask, sign), sign 0 kills."""
    bit = 1 << j
    if mask & bit:
        return 0, 0
    return mask | bit, _sign_below(mask, j)


def int_bit(mask: int, j: int) -> tuple[int, int]:
    """Contract by generator j (0-based): returns (new_mask, sign), sign 0 kills."""
    bit = 1 << j
    if not mask & bit:
        return 0, 0
    return mask & ~bit, _sign_below(mask, j)


def ext_matrix(n_gen: int, j: int) -> Mat:
    dim = 1 << n_gen
    entries = {}
    for mask in range(dim):
        new, sg = ext_bit(mask, j)
        if sg:
            entries[(new, mask)] = rational(sg)
    return Mat(dim, dim, entries)


def int_matrix(n_gen: int, j: int) -> Mat:
    dim = 1 << n_gen
    entries = {}
    for mask in range(dim):
        new, sg = int_bit(mask, j)
        if sg:
            entries[(new, mask)] = rational(sg)
    return Mat(dim, dim, entries)


# ---------------------------------------------------------------------------
# multivectors and Clifford elements

class Multivector:
    """Element of the exterior algebra on q generators, exact coefficients."""

    __slots__ = ("q", "terms")

    def __init__(self, q: int, terms: dict[int, Scalar] | None = None):
        object.__setattr__(self, "q", q)
        clean = {}
        if terms:
            for mask, v in terms.items():
                v = Scalar.of(v)
                if not v.is_zero():
                    if mask >> q:
                        raise ValueError(f"mask {mask} out of range for q={q}")
                    clean[mask] = v
        object.__setattr__(self, "terms", clean)

    def __setattr__(self, *a):  # pragma: no cover
        raise AttributeError("Multivector is immutable")

    @staticmethod
    def unit(q: int) -> "Multivector":
        return Multivector(q, {0: ONE})

    @staticmethod
    def generator(q: int, index: int) -> "Multivector":
        """Basis vector f_index, 1-based."""
        if not 1 <= index <= q:
            raise ValueError(f"index {index} out of range 1..{q}")
        return Multivector(q, {1 << (index - 1): ONE})

    @staticmethod
    def monomial(q: int, indices, coeff=ONE) -> "Multivector":
        mask = 0
        for ix in indices:
            if not 1 <= ix <= q:
                raise ValueError(f"index {ix} out of range 1..{q}")
            bit = 1 << (ix - 1)
            if mask & bit:
                return Multivector(q)
            mask |= bit
        return Multivector(q, {mask: Scalar.of(coeff)})

    def coeff(self, indices) -> Scalar:
        mask = 0
        for ix in indices:
            mask |= 1 << (ix - 1)
        return self.terms.get(mask, ZERO)

    def __add__(self, other: "Multivector") -> "Multivector":
        self._check(other)
        t = dict(self.terms)
        for mask, v in other.terms.items():
            s = t.get(mask)
            w = v if s is None else s + v
            if w.is_zero():
                t.pop(mask, None)
            else:
                t[mask] = w
        return Multivector(self.q, t)

    def __sub__(self, other: "Multivector") -> "Multivector":
        return self + other.scale(rational(-1))

    def __neg__(self):
        return self.scale(rational(-1))

    def scale(self, s) -> "Multivector":
        s = Scalar.of(s)
        return Multivector(self.q, {m: s * v for m, v in self.terms.items()})

    def __eq__(self, other):
        if not isinstance(other, Multivector):
            return NotImplemented
        return self.q == other.q and self.terms == other.terms

    def __hash__(self):
        return hash((self.q, frozenset(self.terms.items())))

    def is_zero(self) -> bool:
        return not self.terms

    def degree_part(self, k: int) -> "Multivector":
        return Multivector(self.q, {m: v for m, v in self.terms.items()
                                    if m.bit_count() == k})

    def top_degree(self) -> int:
        return max((m.bit_count() for m in self.terms), default=0)

    def wedge(self, other: "Multivector") -> "Multivector":
        self._check(other)
        out: dict[int, Scalar] = {}
        for ma, va in self.terms.items():
            for mb, vb in other.terms.items():
                if ma & mb:
                    continue
                # each generator of mb moves left past the generators of ma above it
                sg_count = 0
                rem = mb
                while rem:
                    low = rem & -rem
                    j = low.bit_length() - 1
                    sg_count += (ma >> (j + 1)).bit_count()
                    rem ^= low
                sg = -1 if sg_count & 1 else 1
                key = ma | mb
                add = va * vb * rational(sg)
                s = out.get(key)
                w = add if s is None else s + add
                if w.is_zero():
                    out.pop(key, None)
                else:
                    out[key] = w
        return Multivector(self.q, out)

    def _check(self, other: "Multivector"):
        if self.q != other.q:
            raise ValueError(f"rank mismatch: {self.q} vs {other.q}")

    def max_abs_float(self) -> float:
        return max((v.abs_float() for v in self.terms.values()), default=0.0)

    def __repr__(self):
        if not self.terms:
            return "Multivector(0)"
        bits = []
        for mask in sorted(self.terms, key=lambda m: (m.bit_count(), m)):
            name = "1" if mask == 0 else "^".join(
                f"f{j + 1}" for j in range(self.q) if mask >> j & 1)
            bits.append(f"({self.terms[mask]})*{name}")
        return " + ".join(bits)


def lambda_action(index: int, omega: Multivector) -> Multivector:
    """Clifford action of the basis vector f_index on the exterior algebra,
    c(f) = ext(f*) - int(f)."""
    q = omega.q
    if not 1 <= index <= q:
        raise ValueError(f"index {index} out of range 1..{q}")
    j = index - 1
    out: dict[int, Scalar] = {}
    for mask, v in omega.terms.items():
        new, sg = ext_bit(mask, j)
        if sg:
            _acc(out, new, v if sg > 0 else -v)
        new, sg = int_bit(mask, j)
        if sg:
            _acc(out, new, -v if sg > 0 else v)
    return Multivector(q, out)


def _acc(store: dict[int, Scalar], key: int, val: Scalar):
    s = store.get(key)
    w = val if s is None else s + val
    if w.is_zero():
        store.pop(key, None)
    else:
        store[key] = w


class CliffordElement:
    """Element of Cl(q), stored through its symbol (a multivector)."""

    __slots__ = ("q", "rep")

    def __init__(self, rep: Multivector):
        object.__setattr__(self, "q", rep.q)
        object.__setattr__(self, "rep", rep)

    def __setattr__(self, *a):  # pragma: no cover
        raise AttributeError("CliffordElement is immutable")

    @staticmethod
    def unit(q: int) -> "CliffordElement":
        return CliffordElement(Multivector.unit(q))

    @staticmethod
    def generator(q: int, index: int) -> "CliffordElement":
        return CliffordElement(Multivector.generator(q, index))

    def apply(self, omega: Multivector) -> Multivector:
        """Left module action on the exterior algebra: c(self) omega."""
        if omega.q != self.q:
            raise ValueError(f"rank mismatch: {self.q} vs {omega.q}")
        out = Multivector(self.q)
        for mask, v in self.rep.terms.items():
            w = omega
            for j in reversed(range(self.q)):
                if mask >> j & 1:
                    w = lambda_action(j + 1, w)
            out = out + w.scale(v)
        return out

    def __add__(self, other: "CliffordElement") -> "CliffordElement":
        return CliffordElement(self.rep + other.rep)

    def __sub__(self, other: "CliffordElement") -> "CliffordElement":
        return CliffordElement(self.rep - other.rep)

    def scale(self, s) -> "CliffordElement":
        return CliffordElement(self.rep.scale(s))

    def __eq__(self, other):
        if not isinstance(other, CliffordElement):
            return NotImplemented
        return self.rep == other.rep

    def __hash__(self):
        return hash(("cl", self.rep))

    def __repr__(self):
        return f"Cl[{self.rep!r}]"


def clifford_mul(a: CliffordElement, b: CliffordElement) -> CliffordElement:
    """Product in Cl(q): apply the module action of a to the symbol of b."""
    if a.q != b.q:
        raise ValueError(f"rank mismatch: {a.q} vs {b.q}")
    return CliffordElement(a.apply(b.rep))


def symbol(a: CliffordElement) -> Multivector:
    return a.rep


def quantize(omega: Multivector) -> CliffordElement:
    return CliffordElement(omega)


# ---------------------------------------------------------------------------
# complex structures and the spinor fiber

def standard_j_matrix(q: int) -> Mat:
    entries = {}
    for j in range(q // 2):
        entries[(2 * j + 1, 2 * j)] = ONE       # J f_{2j+1} = f_{2j+2}
        entries[(2 * j, 2 * j + 1)] = -ONE      # J f_{2j+2} = -f_{2j+1}
    return Mat(q, q, entries)


def _dot(u: tuple[Scalar, ...], v: tuple[Scalar, ...]) -> Scalar:
    s = ZERO
    for a, b in zip(u, v):
        s = s + a * b
    return s


def _mat_apply(M: Mat, v: tuple[Scalar, ...]) -> tuple[Scalar, ...]:
    out = [ZERO] * M.n
    for (i, j), u in M.d.items():
        out[i] = out[i] + u * v[j]
    return tuple(out)


class ComplexStructure:
    """Orthogonal complex structure J on R^q together with an exact adapted
    orthonormal frame (v_1, J v_1, ..., v_l, J v_l).

    The adapted frame fixes a basis of the spinor fiber; different frames give
    unitarily equivalent actions.  It must consist of field vectors, which the
    `from_matrix` constructor can only produce when the Gram-Schmidt norms are
    perfect squares in Q(sqrt2)."""

    __slots__ = ("q", "jmat", "frame")

    def __init__(self, jmat: Mat, frame: tuple[tuple[Scalar, ...], ...]):
        q = jmat.n
        if q % 2:
            raise ValueError("codimension must be even")
        if jmat.m != q:
            raise ValueError("J must be square")
        eye = Mat.identity(q)
        if jmat @ jmat != eye.scale(rational(-1)):
            raise ValueError("J^2 != -Identity")
        if jmat.transpose() @ jmat != eye:
            raise ValueError("J not orthogonal")
        if len(frame) != q:
            raise ValueError("adapted frame must have q vectors")
        fmat = Mat(q, q, {(i, a): frame[a][i] for a in range(q)
                          for i in range(q) if not frame[a][i].is_zero()})
        if fmat.transpose() @ fmat != eye:
            raise ValueError("adapted frame not orthonormal")
        jf = jmat @ fmat
        for j in range(q // 2):
            for i in range(q):
                if jf.entry(i, 2 * j) != frame[2 * j + 1][i]:
                    raise ValueError("frame not J-adapted")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "jmat", jmat)
        object.__setattr__(self, "frame", frame)

    def __setattr__(self, *a):  # pragma: no cover
        raise AttributeError("ComplexStructure is immutable")

    @property
    def l(self) -> int:
        return self.q // 2

    @staticmethod
    def standard(q: int) -> "ComplexStructure":
        jm = standard_j_matrix(q)
        frame = tuple(tuple(ONE if t == a else ZERO for t in range(q)) for a in range(q))
        return ComplexStructure(jm, frame)

    @staticmethod
    def from_orthogonal(O: Mat) -> "ComplexStructure":
        """Conjugate the standard structure: J = O J0 O^T, frame = columns of O."""
        q = O.n
        j0 = standard_j_matrix(q)
        jm = O @ j0 @ O.transpose()
        frame = tuple(tuple(O.entry(i, a) for i in range(q)) for a in range(q))
        return ComplexStructure(jm, frame)

    @staticmethod
    def from_matrix(jmat: Mat) -> "ComplexStructure":
        """Build an adapted frame by exact Gram-Schmidt over J-invariant planes."""
        q = jmat.n
        frame: list[tuple[Scalar, ...]] = []

        def proj_out(v):
            for u in frame:
                c = _dot(u, v)
                if not c.is_zero():
                    v = tuple(a - c * b for a, b in zip(v, u))
            return v

        for seed in range(q):
            if len(frame) == q:
                break
            v = tuple(ONE if t == seed else ZERO for t in range(q))
            v = proj_out(v)
            norm2 = _dot(v, v)
            if norm2.is_zero():
                continue
            try:
                inv_norm = norm2.sqrt().inverse()
            except ValueError as exc:
                raise ValueError(
                    "no exact adapted frame: Gram-Schmidt norm is not a square "
                    "in Q(sqrt2)") from exc
            v = tuple(inv_norm * a for a in v)
            frame.append(v)
            frame.append(_mat_apply(jmat, v))
        return ComplexStructure(jmat, tuple(frame))

    def __eq__(self, other):
        if not isinstance(other, ComplexStructure):
            return NotImplemented
        return self.jmat == other.jmat and self.frame == other.frame

    def __hash__(self):
        return hash((self.jmat, self.frame))


def spinor_action(f: tuple[Scalar, ...] | list, J: ComplexStructure,
                  twist_dim: int = 1) -> Mat:
    """Matrix of c(f) = sqrt2 (ext of the (1,0)-dual - int of the (0,1)-part)
    on the spinor fiber, tensored with the identity on a twist factor.

    In the adapted frame the sqrt2 cancels:
    c(f) = sum_j (g(f,v_j) + i g(f,Jv_j)) ext_j - (g(f,v_j) - i g(f,Jv_j)) int_j.
    """
    fvec = tuple(Scalar.of(x) for x in f)
    if len(fvec) != J.q:
        raise ValueError(f"vector length {len(fvec)} != q={J.q}")
    l = J.l
    dim = 1 << l
    entries: dict[tuple[int, int], Scalar] = {}
    for j in range(l):
        gv = _dot(fvec, J.frame[2 * j])
        gjv = _dot(fvec, J.frame[2 * j + 1])
        chi = gv + I * gjv
        chibar = gv - I * gjv
        if chi.is_zero() and chibar.is_zero():
            continue
        for mask in range(dim):
            new, sg = ext_bit(mask, j)
            if sg and not chi.is_zero():
                v = chi if sg > 0 else -chi
                key = (new, mask)
                entries[key] = entries.get(key, ZERO) + v
            new, sg = int_bit(mask, j)
            if sg and not chibar.is_zero():
                v = -chibar if sg > 0 else chibar
                key = (new, mask)
                entries[key] = entries.get(key, ZERO) + v
    M = Mat(dim, dim, entries)
    if twist_dim > 1:
        M = M.kron(Mat.identity(twist_dim))
    return M


def spinor_cliffords(J: ComplexStructure, twist_dim: int = 1) -> tuple[Mat, ...]:
    """c(f_alpha) for the standard basis vectors, alpha = 1..q.

    For basis vectors the frame pairings are plain component lookups, so the
    matrices are assembled without inner products."""
    q, l = J.q, J.l
    dim = 1 << l
    out = []
    for a in range(q):
        entries: dict[tuple[int, int], Scalar] = {}
        for j in range(l):
            gv = J.frame[2 * j][a]
            gjv = J.frame[2 * j + 1][a]
            chi = gv + I * gjv
            chibar = gv - I * gjv
            if chi.is_zero() and chibar.is_zero():
                continue
            for mask in range(dim):
                new, sg = ext_bit(mask, j)
                if sg and not chi.is_zero():
                    v = chi if sg > 0 else -chi
                    key = (new, mask)
                    entries[key] = entries.get(key, ZERO) + v
                new, sg = int_bit(mask, j)
                if sg and not chibar.is_zero():
                    v = -chibar if sg > 0 else chibar
                    key = (new, mask)
                    entries[key] = entries.get(key, ZERO) + v
        M = Mat(dim, dim, entries)
        if twist_dim > 1:
            M = M.kron(Mat.identity(twist_dim))
        out.append(M)
    return tuple(out)


def parity_indices(l: int, twist_dim: int = 1) -> tuple[list[int], list[int]]:
    """(even, odd) fiber indices of the spinor basis ordered mask-major."""
    even, odd = [], []
    for mask in range(1 << l):
        target = odd if mask.bit_count() & 1 else even
        for t in range(twist_dim):
            target.append(mask * twist_dim + t)
    return even, odd


def grading_matrix(l: int, twist_dim: int = 1) -> Mat:
    even, odd = parity_indices(l, twist_dim)
    entries = {(i, i): ONE for i in even}
    entries.update({(i, i): -ONE for i in odd})
    return Mat((1 << l) * twist_dim, (1 << l) * twist_dim, entries)


# ---------------------------------------------------------------------------
# two-forms and their invariants

def validate_two_form(B: Mat):
    if B.n != B.m:
        raise ValueError("two-form matrix must be square")
    if not B.is_antisymmetric():
        raise ValueError("two-form matrix must be antisymmetric")
    for v in B.d.values():
        if not v.is_imaginary():
            raise ValueError("two-form entries must be purely imaginary")


def k_matrix(B: Mat) -> Mat:
    """The real skew matrix K with g(v, Kw) = i B(v, w)."""
    validate_two_form(B)
    K = B.scale(I)
    for v in K.d.values():
        if not v.is_real():  # pragma: no cover - guarded by validate_two_form
            raise ValueError("K must be real")
    return K


def two_form_action(B: Mat, J: ComplexStructure, twist_dim: int = 1,
                    cliffords: tuple[Mat, ...] | None = None) -> Mat:
    """Clifford action (1/2) sum_{ab} c(f_a) c(f_b) B_ab on the spinor fiber.

    By antisymmetry this is sum_{a<b} B_ab c(f_a) c(f_b); the result is
    Hermitian and grading-even."""
    validate_two_form(B)
    q = J.q
    if B.n != q:
        raise ValueError(f"two-form rank {B.n} != q={q}")
    cs = cliffords if cliffords is not None else spinor_cliffords(J)
    dim = cs[0].n
    out = Mat.zero(dim, dim)
    for a in range(q):
        for b in range(a + 1, q):
            coeff = B.entry(a, b)
            if coeff.is_zero():
                continue
            out = out + (cs[a] @ cs[b]).scale(coeff)
    if twist_dim > 1:
        out = out.kron(Mat.identity(twist_dim))
    return out


# -- exact root extraction for the skew eigenproblem -------------------------

def _poly_eval(coeffs: list[Scalar], x: Scalar) -> Scalar:
    acc = ZERO
    for c in coeffs:
        acc = acc * x + c
    return acc


def _deflate(coeffs: list[Scalar], root: Scalar) -> list[Scalar]:
    out = [coeffs[0]]
    for c in coeffs[1:-1]:
        out.append(out[-1] * root + c)
    rem = out[-1] * root + coeffs[-1]
    if not rem.is_zero():
        raise ValueError("deflation by a non-root")
    return out


def _real_roots_in_field(coeffs: list[Scalar]) -> list[Scalar]:
    """All roots of a monic real polynomial (descending coefficients) known to
    split over Q(sqrt2) with real roots; degree <= 3.

    Degrees 1 and 2 are closed-form.  Degree 3 locates one root numerically,
    reconstructs it as a + b*sqrt2 with bounded-height rationals, verifies the
    root exactly, deflates, and recurses; failure to verify raises."""
    deg = len(coeffs) - 1
    if deg == 0:
        return []
    if deg == 1:
        return [-coeffs[1]]
    if deg == 2:
        b, c = coeffs[1], coeffs[2]
        disc = b * b - rational(4) * c
        s = disc.sqrt()
        half = rational(1, 2)
        return [(-b + s) * half, (-b - s) * half]
    if deg != 3:
        raise ValueError(f"unsupported degree {deg}")
    root = _find_field_root(coeffs)
    rest = _deflate(coeffs, root)
    return [root] + _real_roots_in_field(rest)


_DENOM_LADDER = (1, 12, 1000, 10**6, 10**9, 10**12)


def _find_field_root(coeffs: list[Scalar]) -> Scalar:
    float_coeffs = [float(c) for c in coeffs]
    conj_coeffs = [float(Scalar._mk(c.ra, -c.rb, F0, F0)) for c in coeffs]
    candidates_r = [r.real for r in np.roots(float_coeffs) if abs(r.imag) < 1e-8]
    candidates_s = [r.real for r in np.roots(conj_coeffs) if abs(r.imag) < 1e-8]
    sqrt2 = float(SQRT2)
    seen = set()
    for r in candidates_r:
        # rational candidates
        for d in _DENOM_LADDER:
            fr = Fraction(r).limit_denominator(d)
            cand = Scalar._mk(fr, F0, F0, F0)
            if cand not in seen:
                seen.add(cand)
                if _poly_eval(coeffs, cand).is_zero():
                    return cand
        # a + b sqrt2 candidates, pairing with roots of the conjugate polynomial
        for z in candidates_s:
            af, bf = (r + z) / 2, (r - z) / (2 * sqrt2)
            for d in _DENOM_LADDER:
                cand = Scalar._mk(Fraction(af).limit_denominator(d),
                                  Fraction(bf).limit_denominator(d), F0, F0)
                if cand not in seen:
                    seen.add(cand)
                    if _poly_eval(coeffs, cand).is_zero():
                        return cand
    raise ValueError("eigenvalue data does not lie in Q(sqrt2)")


def skew_invariants(B: Mat) -> tuple[tuple[Scalar, ...], Scalar, Scalar]:
    """Exact (mu-list descending, lambda, m) for a non-degenerate two-form.

    The mu_j are the positive numbers with spec(K) = {+-i mu_j}; lambda is
    their sum and m their minimum."""
    K = k_matrix(B)
    q = K.n
    if q % 2:
        raise ValueError("two-form rank must be even")
    cp = K.charpoly()
    for k in range(1, q + 1, 2):
        if not cp[k].is_zero():
            raise ValueError("characteristic polynomial of a skew matrix must be even")
    l = q // 2
    # char(K) = prod (x^2 + mu^2)  =>  phi(y) = prod (y - mu^2), y = -x^2
    phi = [cp[2 * j] if j % 2 == 0 else -cp[2 * j] for j in range(l + 1)]
    if phi[-1].is_zero():
        raise DegenerateCurvature("degenerate curvature: zero eigenvalue")
    roots = _real_roots_in_field(phi)
    mus = []
    for y in roots:
        if not y.is_real() or y.sign() <= 0:
            raise DegenerateCurvature("degenerate curvature: nonpositive mu^2")
        mus.append(y.sqrt())
    mus.sort(key=lambda s: float(s), reverse=True)
    lam = ZERO
    for mu in mus:
        lam = lam + mu
    return tuple(mus), lam, mus[-1]


def check_compatible(B: Mat, J: ComplexStructure) -> Mat:
    """Validate the standing hypothesis and return the positive matrix K J."""
    K = k_matrix(B)
    jm = J.jmat
    if jm.transpose() @ B @ jm != B:
        raise IncompatiblePair("B(J., J.) != B")
    P = K @ jm
    if not P.is_symmetric():
        raise IncompatiblePair("K J not symmetric")
    if not P.is_pd():
        raise IncompatiblePair("i B(v, Jv) not positive definite")
    return P


def trace_plus(B: Mat, J: ComplexStructure) -> Scalar:
    """lambda = sum of the mu_j, computed as tr(K J)/2 without eigenvalues."""
    P = check_compatible(B, J)
    return P.trace() * rational(1, 2)


@dataclass(frozen=True)
class BottomEigenReport:
    """Residual of (curvature action + lambda) on the bottom component."""
    lam: Scalar
    exact_zero: bool
    max_abs: float


def check_rl1(B: Mat, J: ComplexStructure, twist_dim: int = 1,
              cliffords: tuple[Mat, ...] | None = None) -> BottomEigenReport:
    """Verify that the curvature action is multiplication by -lambda on the
    bottom (0-degree) component of the spinor fiber, exactly.

    The twist factor acts diagonally, so the residual column is independent
    of twist_dim; the argument is accepted for interface symmetry."""
    del twist_dim
    lam = trace_plus(B, J)
    cs = cliffords if cliffords is not None else spinor_cliffords(J)
    q = J.q
    col = {0: ONE}
    out: dict[int, Scalar] = {}
    for a in range(q):
        for b in range(a + 1, q):
            coeff = B.entry(a, b)
            if coeff.is_zero():
                continue
            va = _apply(cs[b], col)
            va = _apply(cs[a], va)
            for ix, v in va.items():
                _acc(out, ix, coeff * v)
    _acc(out, 0, lam)  # residual = action + lambda on the bottom vector
    residual_max = max((v.abs_float() for v in out.values()), default=0.0)
    return BottomEigenReport(lam=lam, exact_zero=not out, max_abs=residual_max)


def _apply(M: Mat, vec: dict[int, Scalar]) -> dict[int, Scalar]:
    out: dict[int, Scalar] = {}
    for (i, j), u in M.d.items():
        v = vec.get(j)
        if v is not None:
            _acc(out, i, u * v)
    return out


@dataclass(frozen=True)
class OddBoundReport:
    """Exact lower-bound certificate for the curvature action on the odd part."""
    bound: Scalar                 # -(lambda - 2m)
    lam: Scalar
    m: Scalar
    psd_ok: bool                  # action restricted to odd part >= bound
    attained: bool                # bound is an eigenvalue
    min_eigenvalue: Scalar | None  # = bound when attained
    margin: Scalar | None          # exact 0 when attained

    @property
    def margin_nonnegative(self) -> bool:
        return self.psd_ok


def odd_lower_bound(B: Mat, J: ComplexStructure, twist_dim: int = 1,
                    mus: tuple[Scalar, ...] | None = None,
                    cliffords: tuple[Mat, ...] | None = None,
                    assume_compatible: bool = False) -> OddBoundReport:
    """Certify (curvature action u, u) >= -(lambda - 2m) |u|^2 on the odd part.

    The shifted action on the odd subspace is certified positive
    semidefinite through its characteristic polynomial, and the bound is
    reported attained when the shifted matrix is singular."""
    if not assume_compatible:
        check_compatible(B, J)
    if mus is None:
        mus, lam, m = skew_invariants(B)
    else:
        lam = ZERO
        for mu in mus:
            lam = lam + mu
        m = min(mus, key=float)
    bound = rational(2) * m - lam
    cs = cliffords if cliffords is not None else spinor_cliffords(J)
    # c(f) swaps the parity blocks, so the odd-odd block of c(f_a) c(f_b) is
    # the (odd, even) block of c(f_a) times the (even, odd) block of c(f_b)
    even, odd = parity_indices(J.l, 1)
    left = {a: cs[a].submatrix(odd, even) for a in range(J.q)}
    right = {a: cs[a].submatrix(even, odd) for a in range(J.q)}
    sub = Mat.zero(len(odd), len(odd))
    for a in range(J.q):
        for b in range(a + 1, J.q):
            coeff = B.entry(a, b)
            if not coeff.is_zero():
                sub = sub + (left[a] @ right[b]).scale(coeff)
    if twist_dim > 1:
        sub = sub.kron(Mat.identity(twist_dim))
    shifted = sub - Mat.identity(sub.n).scale(bound)
    psd = shifted.is_psd()
    attained = shifted.det().is_zero()
    return OddBoundReport(
        bound=bound, lam=lam, m=m, psd_ok=psd, attained=attained,
        min_eigenvalue=bound if attained else None,
        margin=ZERO if attained else None,
    )


# ---------------------------------------------------------------------------
# random exact data for batteries

def random_rational(rng: random.Random, max_num: int = 9, max_den: int = 6) -> Scalar:
    return rational(rng.randint(-max_num, max_num), rng.randint(1, max_den))


def random_orthogonal(rng: random.Random, q: int, rounds: int = 2) -> Mat:
    """Exact orthogonal matrix: rational Givens rotations, an occasional
    sqrt2/2 rotation, and a signed permutation.

    Few rounds with small tangents keep downstream fraction heights low;
    the signed permutation still mixes every coordinate."""
    O = Mat.identity(q)
    half_sqrt2 = SQRT2 * rational(1, 2)
    for _ in range(rounds):
        i, j = rng.sample(range(q), 2)
        if rng.random() < 0.25:
            c, s = half_sqrt2, half_sqrt2
        else:
            t = Fraction(rng.randint(-3, 3), rng.randint(1, 3))
            c = rational(1 - t * t) / rational(1 + t * t)
            s = rational(2 * t) / rational(1 + t * t)
        G = {(a, a): ONE for a in range(q) if a not in (i, j)}
        G[(i, i)] = c
        G[(j, j)] = c
        G[(i, j)] = -s
        G[(j, i)] = s
        O = O @ Mat(q, q, G)
    perm = list(range(q))
    rng.shuffle(perm)
    signs = [rng.choice((1, -1)) for _ in range(q)]
    P = Mat(q, q, {(perm[a], a): rational(signs[a]) for a in range(q)})
    return P @ O


def random_mu(rng: random.Random) -> Scalar:
    """Positive field element; occasionally with a sqrt2 part."""
    base = rational(rng.randint(1, 9), rng.randint(1, 4))
    if rng.random() < 0.2:
        return base + SQRT2 * rational(rng.randint(0, 2))
    return base


def block_two_form(mus) -> Mat:
    """Standard-frame two-form with B(f_{2j-1}, f_{2j}) = -i mu_j."""
    entries = {}
    for j, mu in enumerate(mus):
        v = -I * Scalar.of(mu)
        entries[(2 * j, 2 * j + 1)] = v
        entries[(2 * j + 1, 2 * j)] = -v
    q = 2 * len(mus)
    return Mat(q, q, entries)


def random_compatible_pair(rng: random.Random, q: int) \
        -> tuple[Mat, ComplexStructure, tuple[Scalar, ...]]:
    """Sample (B, J, mu-list) satisfying the compatibility hypothesis exactly:
    conjugate the standard structure and a block two-form by one exact
    orthogonal matrix."""
    if q % 2:
        raise ValueError("codimension must be even")
    mus = tuple(random_mu(rng) for _ in range(q // 2))
    O = random_orthogonal(rng, q)
    J = ComplexStructure.from_orthogonal(O)
    B0 = block_two_form(mus)
    B = O @ B0 @ O.transpose()
    return B, J, mus


@dataclass(frozen=True)
class BatteryResult:
    trials: int
    all_exact: bool
    all_margin_nonneg: bool
    failures: tuple[dict, ...]

    @property
    def ok(self) -> bool:
        return self.all_exact and self.all_margin_nonneg


def fiber_battery(rng: random.Random, q: int, trials: int) -> BatteryResult:
    """Randomized exact battery: for `trials` compatible pairs check that the
    curvature action is -lambda on the bottom component (zero residual) and
    that the odd-part lower bound holds with nonnegative margin.

    Compatibility is validated once per pair; the mu-list sampled by the
    generator is cross-checked against tr(KJ)/2."""
    if q % 2:
        raise ValueError("codimension must be even")
    failures = []
    all_exact = True
    all_nonneg = True
    for trial in range(trials):
        B, J, mus = random_compatible_pair(rng, q)
        cs = spinor_cliffords(J)
        rep = check_rl1(B, J, cliffords=cs)
        lam = ZERO
        for mu in mus:
            lam = lam + mu
        if not rep.exact_zero or rep.lam != lam:
            all_exact = False
            failures.append(_pair_failure(trial, "bottom-eigenvalue", B, J))
            continue
        ob = odd_lower_bound(B, J, mus=mus, cliffords=cs, assume_compatible=True)
        if not (ob.psd_ok and ob.attained):
            all_nonneg = all_nonneg and ob.psd_ok
            failures.append(_pair_failure(trial, "odd-lower-bound", B, J))
    return BatteryResult(trials=trials, all_exact=all_exact,
                         all_margin_nonneg=all_nonneg, failures=tuple(failures))


def _pair_failure(trial: int, kind: str, B: Mat, J: ComplexStructure) -> dict:
    from .exact import format_scalar

    def fmt(M: Mat):
        return [[format_scalar(M.entry(i, j)) for j in range(M.m)] for i in range(M.n)]

    return {"trial": trial, "check": kind, "B": fmt(B), "J": fmt(J.jmat)}
