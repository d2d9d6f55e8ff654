"""Homogeneous foliated frame models and their transverse geometry.

A model is a global orthonormal frame u_1..u_n with constant structure
constants [u_i, u_j] = sum_k c^k_ij u_k; the first p directions span the
leaves, the remaining q = n - p are horizontal.  Admissibility is encoded
frame-level: antisymmetry and Jacobi (a Lie algebra), involutivity of the
leaf distribution, and the bundle-like condition

    c^b_{ia} + c^a_{ib} = 0   (i leafwise, a b horizontal),

which says leafwise flows preserve the horizontal metric.  All derived
data -- Levi-Civita coefficients through the Koszul formula, the transverse
connection, mean curvature, integrability tensor, curvature, divergences,
spin connection coefficients -- are exact field elements.

Model files are JSON: indices 1-based, leaves first; scalar strings like
"-1/2" or "1/2+1/4√2"; line-bundle entries are imaginary strings ("-1i")
and are stored in units of 2*pi, so the integer entries of i*B are Chern
numbers of the transverse planes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .exact import ONE, ZERO, Scalar, format_scalar, parse_imaginary, parse_real, rational
from .matrices import Mat, commutator


class ModelError(ValueError):
    """Invalid frame model (failed admissibility or malformed input)."""


@dataclass(frozen=True)
class FrameModel:
    name: str
    p: int
    q: int
    c: tuple  # c[i][j][k], 0-based, [u_i,u_j] = sum_k c[i][j][k] u_k
    line_b: Mat | None = None  # q x q imaginary two-form, units of 2*pi
    jmat: Mat | None = None    # q x q complex structure matrix
    twist_dim: int = 1

    @property
    def n(self) -> int:
        return self.p + self.q

    def bracket(self, i: int, j: int) -> tuple[Scalar, ...]:
        return self.c[i][j]

    def horizontal(self, h: int) -> int:
        """Frame index of the h-th horizontal direction (0-based)."""
        return self.p + h


def make_model(name: str, p: int, q: int,
               brackets: list[tuple[int, int, int, Scalar]],
               line_b: Mat | None = None, jmat: Mat | None = None,
               twist_dim: int = 1) -> FrameModel:
    """Build a model from sparse 1-based bracket data [u_i, u_j] += coeff u_k."""
    n = p + q
    tensor = [[[ZERO] * n for _ in range(n)] for _ in range(n)]
    for (i, j, k, coeff) in brackets:
        for ix in (i, j, k):
            if not 1 <= ix <= n:
                raise ModelError(f"bracket index {ix} out of range 1..{n}")
        v = parse_real(coeff) if isinstance(coeff, str) else Scalar.of(coeff)
        if not v.is_real():
            raise ModelError("structure constants must be real")
        tensor[i - 1][j - 1][k - 1] = tensor[i - 1][j - 1][k - 1] + v
        tensor[j - 1][i - 1][k - 1] = tensor[j - 1][i - 1][k - 1] - v
    frozen = tuple(tuple(tuple(row) for row in plane) for plane in tensor)
    return FrameModel(name=name, p=p, q=q, c=frozen, line_b=line_b,
                      jmat=jmat, twist_dim=twist_dim)


# ---------------------------------------------------------------------------
# validation

@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    failures: tuple[str, ...]
    warnings: tuple[str, ...]

    def first_failure(self) -> str | None:
        return self.failures[0] if self.failures else None


def validate(model: FrameModel) -> ValidationReport:
    failures: list[str] = []
    warnings: list[str] = []
    n, p = model.n, model.p
    c = model.c

    if model.q % 2:
        failures.append(f"codimension q={model.q} must be even")

    for i in range(n):
        for j in range(n):
            for k in range(n):
                if c[i][j][k] != -c[j][i][k]:
                    failures.append(
                        f"antisymmetry fails at c^{k + 1}_({i + 1},{j + 1})")

    for i in range(n):
        for j in range(i + 1, n):
            for k in range(j + 1, n):
                for l in range(n):
                    s = ZERO
                    for m in range(n):
                        s = (s + c[i][j][m] * c[m][k][l]
                             + c[j][k][m] * c[m][i][l]
                             + c[k][i][m] * c[m][j][l])
                    if not s.is_zero():
                        failures.append(
                            f"Jacobi identity fails on (u{i + 1},u{j + 1},u{k + 1}) "
                            f"component u{l + 1}")

    for i in range(p):
        for j in range(p):
            for a in range(p, n):
                if not c[i][j][a].is_zero():
                    failures.append(
                        f"involutivity fails: c^{a + 1}_({i + 1},{j + 1}) != 0")

    for i in range(p):
        for a in range(p, n):
            for b in range(p, n):
                s = c[i][a][b] + c[i][b][a]
                if not s.is_zero():
                    failures.append(
                        f"bundle-like condition fails: c^{b + 1}_({i + 1},{a + 1}) "
                        f"+ c^{a + 1}_({i + 1},{b + 1}) = {format_scalar(s)}")

    for i in range(n):
        tr = ZERO
        for k in range(n):
            tr = tr + c[k][i][k]
        if not tr.is_zero():
            warnings.append(
                f"non-unimodular frame: tr(ad u{i + 1}) = {format_scalar(tr)} != 0 "
                "(no compact quotient with invariant volume)")

    if model.line_b is not None:
        if model.line_b.n != model.q:
            failures.append("line bundle curvature must be q x q")
        else:
            try:
                from .clifford_fiber import validate_two_form
                validate_two_form(model.line_b)
            except ValueError as exc:
                failures.append(f"line bundle curvature: {exc}")

    return ValidationReport(ok=not failures, failures=tuple(failures),
                            warnings=tuple(warnings))


def require_valid(model: FrameModel) -> None:
    rep = validate(model)
    if not rep.ok:
        raise ModelError(f"invalid model {model.name!r}: {rep.first_failure()}")


# ---------------------------------------------------------------------------
# derived geometry

def levi_civita(model: FrameModel) -> tuple:
    """Gamma[i][j][k] = <nabla_{u_i} u_j, u_k> by the invariant Koszul formula
    2<nabla_X Y, Z> = <[X,Y],Z> - <[Y,Z],X> + <[Z,X],Y>."""
    n = model.n
    c = model.c
    half = rational(1, 2)
    out = []
    for i in range(n):
        plane = []
        for j in range(n):
            row = []
            for k in range(n):
                row.append((c[i][j][k] - c[j][k][i] + c[k][i][j]) * half)
            plane.append(tuple(row))
        out.append(tuple(plane))
    return tuple(out)


def transverse_connection(model: FrameModel, gamma=None) -> tuple[Mat, ...]:
    """Connection matrices A_u on the horizontal bundle, one per frame
    direction: (A_u)_{gb} = <nabla_u f_b, f_g>.  Leafwise directions
    differentiate by the horizontal part of the bracket, horizontal
    directions by the projected Levi-Civita derivative."""
    n, p, q = model.n, model.p, model.q
    gamma = gamma if gamma is not None else levi_civita(model)
    mats = []
    for u in range(n):
        entries = {}
        for b in range(q):
            for g in range(q):
                if u < p:
                    coeff = model.c[u][p + b][p + g]
                else:
                    coeff = gamma[u][p + b][p + g]
                if not coeff.is_zero():
                    entries[(g, b)] = coeff
        mats.append(Mat(q, q, entries))
    return tuple(mats)


def mean_curvature(model: FrameModel, gamma=None) -> tuple[Scalar, ...]:
    """tau = sum_i P_H(nabla_{e_i} e_i), components in the horizontal frame."""
    gamma = gamma if gamma is not None else levi_civita(model)
    p, q = model.p, model.q
    out = []
    for a in range(q):
        s = ZERO
        for i in range(p):
            s = s + gamma[i][i][p + a]
        out.append(s)
    return tuple(out)


def integrability_tensor(model: FrameModel) -> dict[tuple[int, int], tuple[Scalar, ...]]:
    """Leafwise components of R(f_a, f_b) = -P_F [f_a, f_b], horizontal a < b."""
    p, q = model.p, model.q
    out = {}
    for a in range(q):
        for b in range(a + 1, q):
            comps = tuple(-model.c[p + a][p + b][i] for i in range(p))
            out[(a, b)] = comps
    return out


def curvature(model: FrameModel, transverse=None) -> dict[tuple[int, int], Mat]:
    """R(u, v) = [A_u, A_v] - sum_m c^m_{uv} A_m as endomorphisms of the
    horizontal bundle, for all frame direction pairs u < v."""
    n = model.n
    A = transverse if transverse is not None else transverse_connection(model)
    out = {}
    for u in range(n):
        for v in range(u + 1, n):
            R = commutator(A[u], A[v])
            for m in range(n):
                coeff = model.c[u][v][m]
                if not coeff.is_zero():
                    R = R - A[m].scale(coeff)
            out[(u, v)] = R
    return out


def scalar_curvature(model: FrameModel, curv=None) -> Scalar:
    """K = sum_{a,b} g(R(f_a, f_b) f_a, f_b) -- note the index order: this is
    the negative of the usual scalar-curvature contraction, and comes out +2
    on the transverse hyperbolic plane.  The operator identities consume -K/4
    (verified exactly by the curvature-contraction identity)."""
    p, q = model.p, model.q
    curv = curv if curv is not None else curvature(model)
    K = ZERO
    for a in range(q):
        for b in range(q):
            if a == b:
                continue
            u, v = p + a, p + b
            if u < v:
                K = K + curv[(u, v)].entry(b, a)
            else:
                K = K - curv[(v, u)].entry(b, a)
    return K


def divergence(model: FrameModel, direction: int, gamma=None) -> Scalar:
    """Riemannian divergence div u_i = sum_k <nabla_{u_k} u_i, u_k>, which for
    constant structure constants reduces to sum_k c^k_{ki}."""
    if not 0 <= direction < model.n:
        raise ModelError(f"direction {direction} out of range")
    gamma = gamma if gamma is not None else levi_civita(model)
    s = ZERO
    for k in range(model.n):
        s = s + gamma[k][direction][k]
    return s


def divergence_closed_horizontal(model: FrameModel, a: int,
                                 transverse=None, tau=None) -> Scalar:
    """div f_a = -g(tau + sum_b nabla_{f_b} f_b, f_a), the closed horizontal
    formula; must agree with the trace divergence on every valid model."""
    q, p = model.q, model.p
    A = transverse if transverse is not None else transverse_connection(model)
    tau = tau if tau is not None else mean_curvature(model)
    s = tau[a]
    for b in range(q):
        s = s + A[p + b].entry(a, b)
    return -s


@dataclass(frozen=True)
class ConnectionData:
    """All derived geometric data of a validated model, exact."""
    levi_civita: tuple
    transverse: tuple[Mat, ...]
    tau: tuple[Scalar, ...]
    integrability: dict[tuple[int, int], tuple[Scalar, ...]]
    curvature: dict[tuple[int, int], Mat]
    K: Scalar
    div: tuple[Scalar, ...]


def derive_connection(model: FrameModel) -> ConnectionData:
    require_valid(model)
    gamma = levi_civita(model)
    A = transverse_connection(model, gamma)
    curv = curvature(model, A)
    return ConnectionData(
        levi_civita=gamma,
        transverse=A,
        tau=mean_curvature(model, gamma),
        integrability=integrability_tensor(model),
        curvature=curv,
        K=scalar_curvature(model, curv),
        div=tuple(divergence(model, u, gamma) for u in range(model.n)),
    )


def spin_connection(model: FrameModel, J, twist_dim: int = 1,
                    transverse=None) -> tuple[Mat, ...]:
    """Connection matrices on the spinor fiber, one per frame direction:
    Gamma_u = (1/4) sum_{b,g} (A_u)_{gb} c(f_b) c(f_g).

    Requires nabla J = 0 (each A_u commutes with J), otherwise the spinor
    fiber is not parallel; the error names the offending direction."""
    from .clifford_fiber import spinor_cliffords

    A = transverse if transverse is not None else transverse_connection(model)
    if J.q != model.q:
        raise ModelError(f"J has rank {J.q}, model has q={model.q}")
    for u, Au in enumerate(A):
        if not commutator(Au, J.jmat).is_zero():
            raise ModelError(
                f"nabla J != 0 along frame direction u{u + 1}; "
                "the spinor fiber is not parallel")
    cs = spinor_cliffords(J, twist_dim)
    quarter = rational(1, 4)
    out = []
    for Au in A:
        acc = Mat.zero(cs[0].n, cs[0].n)
        for (g, b), coeff in Au.d.items():
            acc = acc + (cs[b] @ cs[g]).scale(coeff * quarter)
        out.append(acc)
    return tuple(out)


# ---------------------------------------------------------------------------
# JSON model files

def model_from_dict(data: dict) -> FrameModel:
    try:
        name = data.get("name", "unnamed")
        p = int(data["p"])
        q = int(data["q"])
        brackets = [(int(i), int(j), int(k), parse_real(coeff))
                    for (i, j, k, coeff) in data.get("brackets", [])]
        line_b = None
        if "line_bundle" in data and data["line_bundle"] is not None:
            rows = data["line_bundle"]["B"]
            line_b = Mat.from_rows([[parse_imaginary(x) for x in row] for row in rows])
        jmat = None
        if "J" in data and data["J"] is not None:
            jmat = Mat.from_rows([[parse_real(x) for x in row] for row in data["J"]])
        twist = int(data.get("twist_dim", 1))
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelError(f"malformed model file: {exc}") from exc
    return make_model(name, p, q, brackets, line_b=line_b, jmat=jmat,
                      twist_dim=twist)


def load_model(path: str | Path) -> FrameModel:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ModelError(f"cannot read model file {path}: {exc}") from exc
    return model_from_dict(data)


def bundled_model_names() -> list[str]:
    files = resources.files("transdirac.models")
    return sorted(f.name[:-5] for f in files.iterdir() if f.name.endswith(".json"))


def load_bundled(name: str) -> FrameModel:
    ref = resources.files("transdirac.models").joinpath(f"{name}.json")
    try:
        data = json.loads(ref.read_text(encoding="utf-8"))
    except (FileNotFoundError, OSError) as exc:
        raise ModelError(f"no bundled model {name!r}; have {bundled_model_names()}") from exc
    return model_from_dict(data)


def resolve_model(spec: str) -> FrameModel:
    """Accept a filesystem path or a bundled fixture name."""
    path = Path(spec)
    if path.exists():
        return load_model(path)
    stem = path.stem if path.suffix == ".json" else spec
    return load_bundled(stem)
