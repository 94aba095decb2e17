"""Group models acting on C^{n+1}: orbit tangents, orbit jets and the conditions checked on them.

Vector fields are lists of ``2n+2`` polynomial jets (one per real ambient
coordinate, interleaved ``x_k, y_k``) in absolute ambient coordinates.
The complex structure acts by ``J d/dx = d/dy`` and ``J d/dy = -d/dx``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import (
    DomainExceededError,
    FreeActionError,
    InsufficientDegreeError,
    InvalidSubgroupError,
    PreconditionError,
    ShapeError,
    UnsupportedError,
)
from .hypersurface import Chart, DefiningFunction, GraphForm
from .jetcalc import (
    ZERO_TOL,
    ComplexJet,
    Jet,
    complex_matrix_to_real,
    complex_to_real,
    is_negligible,
    jet_compose,
    jet_inverse_map,
    jet_translate,
    real_to_complex,
)

RANK_TOL = 1e-9


# Heisenberg group


@dataclass(frozen=True)
class HeisenbergElement:
    t: float
    zeta: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "t", float(self.t))
        object.__setattr__(self, "zeta", np.atleast_1d(np.asarray(self.zeta, dtype=complex)))

    @property
    def n(self) -> int:
        return self.zeta.shape[0]

    @classmethod
    def identity(cls, n: int) -> "HeisenbergElement":
        return cls(0.0, np.zeros(n, complex))

    def __eq__(self, other):
        return isinstance(other, HeisenbergElement) and self.t == other.t and np.array_equal(self.zeta, other.zeta)

    def __hash__(self):
        return hash((self.t, self.zeta.tobytes()))


def _mul_arrays(t1, z1, t2, z2):
    return t1 + t2 + 2.0 * np.imag(np.sum(z1 * np.conj(z2), axis=-1)), z1 + z2


def heisenberg_mul(g: HeisenbergElement, h: HeisenbergElement) -> HeisenbergElement:
    if g.n != h.n:
        raise ShapeError("Heisenberg elements of different dimension")
    t, z = _mul_arrays(g.t, g.zeta, h.t, h.zeta)
    return HeisenbergElement(t, z)


def heisenberg_inverse(g: HeisenbergElement) -> HeisenbergElement:
    return HeisenbergElement(-g.t, -g.zeta)


def _sqnorm(z) -> np.ndarray:
    # re^2 + im^2 avoids the rounding of abs() followed by squaring
    return np.sum(z.real * z.real + z.imag * z.imag, axis=-1)


def heisenberg_act_arrays(t, zeta, z) -> np.ndarray:
    """Vectorised action; ``t`` (...), ``zeta`` (..., n), ``z`` (..., n+1)."""
    t = np.asarray(t, dtype=float)
    zeta = np.asarray(zeta, dtype=complex)
    z = np.asarray(z, dtype=complex)
    if zeta.shape[-1] + 1 != z.shape[-1]:
        raise ShapeError("point and group element dimensions differ")
    zz = z[..., 1:]
    z0 = z[..., 0] + t + 1j * _sqnorm(zeta) + 2j * np.sum(zz * np.conj(zeta), axis=-1)
    return np.concatenate([z0[..., None], zz + zeta], axis=-1)


def heisenberg_act(g: HeisenbergElement, z) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    if z.shape[-1] != g.n + 1:
        raise ShapeError("point and group element dimensions differ")
    return heisenberg_act_arrays(g.t, g.zeta, z)


def siegel_boundary_function(z) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    return z[..., 0].imag - _sqnorm(z[..., 1:])


# group models


@dataclass(frozen=True)
class GroupModel:
    """Local group action through its generators.

    ``action(xi, z)`` (optional) returns ``exp(xi_1 v_1) ... exp(xi_d v_d) . z``
    for parameters ``xi`` (..., d) and complex points ``z`` (..., n+1).
    Without it the product is evaluated by RK4 flows of the generator jets.
    """

    n: int
    generators: tuple
    action: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None
    commuting: bool = False
    name: str = "custom"
    flow_steps: int = 1000

    def __post_init__(self):
        gens = tuple(tuple(g) for g in self.generators)
        object.__setattr__(self, "generators", gens)
        N = 2 * self.n + 2
        for g in gens:
            if len(g) != N or any(c.nvars != N for c in g):
                raise ShapeError(f"generators need {N} component jets in {N} variables")
        if len(gens) > 2 * self.n + 1:
            raise PreconditionError("an orbit in a hypersurface has dimension at most 2n+1")

    @property
    def d(self) -> int:
        return len(self.generators)

    @property
    def nreal(self) -> int:
        return 2 * self.n + 2

    def field_values(self, x) -> np.ndarray:
        """Generator values at real points ``x`` (..., 2N) as an array (..., d, 2N)."""
        x = np.asarray(x, dtype=float)
        if not self.d:
            return np.zeros(x.shape[:-1] + (0, self.nreal))
        return np.stack([np.stack([c.evaluate(x) for c in g], axis=-1) for g in self.generators], axis=-2)

    def _field(self, j, x):
        return np.stack([c.evaluate(x) for c in self.generators[j]], axis=-1)

    def flow(self, j: int, t, x) -> np.ndarray:
        """RK4 flow of generator ``j`` for times ``t`` (...) from real points ``x`` (..., 2N)."""
        x = np.array(x, dtype=float)
        h = (np.asarray(t, dtype=float) / self.flow_steps)[..., None]
        for _ in range(self.flow_steps):
            k1 = self._field(j, x)
            k2 = self._field(j, x + 0.5 * h * k1)
            k3 = self._field(j, x + 0.5 * h * k2)
            k4 = self._field(j, x + h * k3)
            x = x + h * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0
        return x

    def act(self, xi, z) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        z = np.asarray(z, dtype=complex)
        if xi.shape[-1] != self.d:
            raise ShapeError(f"expected {self.d} group parameters")
        if self.action is not None:
            return self.action(xi, z)
        shape = np.broadcast_shapes(xi.shape[:-1], z.shape[:-1])
        x = np.broadcast_to(complex_to_real(z), shape + (self.nreal,))
        xi = np.broadcast_to(xi, shape + (self.d,))
        for j in reversed(range(self.d)):
            x = self.flow(j, xi[..., j], x)
        return real_to_complex(x)


def _const_field(vec, N, degree):
    return [Jet.const(float(v), N, degree) for v in vec]


def heisenberg_field(n: int, t0: float, sigma, degree: int = 4) -> list[Jet]:
    """Generator of ``s -> (s t0, s sigma)`` acting on the left: ``(t0 + 2i z.conj(sigma), sigma)``."""
    N = 2 * n + 2
    sigma = np.asarray(sigma, dtype=complex)
    x0 = Jet.const(float(t0), N, degree)
    y0 = Jet.zero(N, degree)
    comps = [None, None]
    for j in range(n):
        a, b = sigma[j].real, sigma[j].imag
        xj, yj = Jet.var(2 * j + 2, N, degree), Jet.var(2 * j + 3, N, degree)
        x0 = x0 + xj * (2 * b) - yj * (2 * a)
        y0 = y0 + xj * (2 * a) + yj * (2 * b)
    comps[0], comps[1] = x0, y0
    for j in range(n):
        comps.append(Jet.const(sigma[j].real, N, degree))
        comps.append(Jet.const(sigma[j].imag, N, degree))
    return comps


def validate_real_span(basis) -> np.ndarray:
    """Basis of a real subspace S of C^n with ``Im(u . conj(v)) = 0`` on S."""
    B = np.atleast_2d(np.asarray(basis, dtype=complex))
    if B.size == 0:
        return B.reshape(0, B.shape[-1] if B.ndim == 2 else 0)
    real = np.concatenate([B.real, B.imag], axis=1)
    if np.linalg.matrix_rank(real, tol=RANK_TOL * max(1.0, np.abs(real).max())) < B.shape[0]:
        raise InvalidSubgroupError("subgroup basis is not real-linearly independent")
    gram = B @ B.conj().T
    scale = max(1.0, np.abs(gram).max())
    if np.abs(gram.imag).max() > RANK_TOL * scale:
        raise InvalidSubgroupError("span violates the reality condition Im(z . conj(z')) = 0")
    return B


def heisenberg_subgroup(n: int, basis=None, degree: int = 4) -> GroupModel:
    """Subgroup ``{(0, zeta): zeta in span_R(basis)}``; default basis is the real unit vectors."""
    B = np.eye(n, dtype=complex) if basis is None else validate_real_span(basis)
    if B.shape[1] != n:
        raise ShapeError("basis vectors must lie in C^n")
    gens = [heisenberg_field(n, 0.0, b, degree) for b in B]

    def action(xi, z, B=B):
        zeta = np.asarray(xi, dtype=float) @ B
        return heisenberg_act_arrays(0.0, zeta, z)

    return GroupModel(n, gens, action, commuting=True, name="heisenberg-subgroup")


def full_heisenberg(n: int, degree: int = 4) -> GroupModel:
    """All of H_n with generators ``d/dt``, ``zeta = e_j``, ``zeta = i e_j``."""
    dirs = [(1.0, np.zeros(n, complex))]
    for j in range(n):
        e = np.zeros(n, complex)
        e[j] = 1.0
        dirs.append((0.0, e))
        dirs.append((0.0, 1j * e))
    gens = [heisenberg_field(n, t0, sig, degree) for t0, sig in dirs]

    def action(xi, z):
        xi = np.asarray(xi, dtype=float)
        t = np.zeros(xi.shape[:-1])
        zeta = np.zeros(xi.shape[:-1] + (n,), complex)
        for k, (t0, sig) in enumerate(dirs):
            t, zeta = _mul_arrays(t, zeta, xi[..., k] * t0, xi[..., k, None] * sig)
        return heisenberg_act_arrays(t, zeta, z)

    return GroupModel(n, gens, action, commuting=False, name="full-heisenberg")


def cylinder_phic(c: float, degree: int = 4) -> GroupModel:
    """``(z0, z1) -> (z0 + c t, z1 + t)`` on C^2."""
    gen = _const_field([c, 0.0, 1.0, 0.0], 4, degree)

    def action(xi, z, c=float(c)):
        t = np.asarray(xi, dtype=float)[..., 0]
        z = np.asarray(z, dtype=complex)
        shift = np.stack(np.broadcast_arrays(c * t, t), axis=-1).astype(complex)
        return z + shift

    return GroupModel(1, [gen], action, commuting=True, name="cylinder-phic")


def group_from_jets(n: int, generators, commuting: bool = False, name: str = "custom") -> GroupModel:
    return GroupModel(n, generators, None, commuting, name)


# tangent spaces


def apply_J(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    out = np.empty_like(v)
    out[..., 0::2] = -v[..., 1::2]
    out[..., 1::2] = v[..., 0::2]
    return out


@dataclass
class OrbitTangent:
    basis: np.ndarray
    singular_values: np.ndarray
    rank: int
    free: bool
    warning: str = ""


def numerical_rank(T: np.ndarray, tol: float = RANK_TOL) -> tuple[int, np.ndarray]:
    if T.size == 0:
        return 0, np.zeros(0)
    sv = np.linalg.svd(T, compute_uv=False)
    return int(np.sum(sv > tol * sv[0])) if sv[0] > 0 else 0, sv


def orbit_tangent(G: GroupModel, p=None, tol: float = RANK_TOL) -> OrbitTangent:
    p = np.zeros(G.nreal) if p is None else np.asarray(p, dtype=float)
    T = G.field_values(p)
    rank, sv = numerical_rank(T, tol)
    free = rank == G.d
    warn = "" if free else f"orbit tangent has rank {rank} < d = {G.d}: action is not locally free"
    return OrbitTangent(T, sv, rank, free, warn)


@dataclass
class TangencyReport:
    passed: bool
    residuals: np.ndarray
    normal_plane: np.ndarray
    tol: float


def tangency_residuals(T, rho: DefiningFunction, p) -> tuple[np.ndarray, np.ndarray]:
    """Relative size of each vector's component along ``span{grad rho, J grad rho}``."""
    g = rho.gradient(p)
    g = g / np.linalg.norm(g)
    plane = np.stack([g, apply_J(g)])
    T = np.atleast_2d(np.asarray(T, dtype=float))
    if T.shape[0] == 0 or T.size == 0:
        return np.zeros(0), plane
    proj = T @ plane.T
    norms = np.linalg.norm(T, axis=1)
    res = np.linalg.norm(proj, axis=1) / np.where(norms > 0, norms, 1.0)
    return res, plane


def check_tangency(G: GroupModel, rho: DefiningFunction, p=None, tol: float = RANK_TOL) -> TangencyReport:
    """``T_p(G.p)`` inside ``T^c_p(bM)``, decided on the generator values at ``p``."""
    p = np.zeros(G.nreal) if p is None else np.asarray(p, dtype=float)
    res, plane = tangency_residuals(orbit_tangent(G, p, tol).basis, rho, p)
    return TangencyReport(bool(np.all(res <= tol)), res, plane, tol)


@dataclass
class TotallyRealReport:
    is_totally_real: bool
    rank: int
    rank_with_J: int
    d: int
    n: int
    dim_bound_ok: bool


def check_totally_real(G_or_T, p=None, tangency: bool | None = None, n: int | None = None,
                       tol: float = RANK_TOL) -> TotallyRealReport:
    """``T cap J T = {0}`` via ``rank [T; JT] = 2 rank T``; with tangency also asserts ``d <= n``."""
    if isinstance(G_or_T, GroupModel):
        T = orbit_tangent(G_or_T, p, tol).basis
        n = G_or_T.n
    else:
        T = np.atleast_2d(np.asarray(G_or_T, dtype=float))
        if n is None:
            n = T.shape[1] // 2 - 1
    d = T.shape[0] if T.size else 0
    r, _ = numerical_rank(T, tol)
    rJ, _ = numerical_rank(np.concatenate([T, apply_J(T)]) if d else T, tol)
    tr = rJ == 2 * r
    ok = True if not tangency else d <= n
    if tangency and tr and d > n:
        raise PreconditionError(f"totally real tangent orbit of dimension {d} > n = {n}")
    return TotallyRealReport(bool(tr), r, rJ, d, n, bool(ok))


# orbit charts


def lie_derivative(field: Sequence[Jet], g: Jet) -> Jet:
    out = Jet.zero(g.nvars, g.degree)
    for l, v in enumerate(field):
        if len(v):
            out = out + v * g.deriv(l)
    return out


def orbit_jets(G: GroupModel, p, degree: int) -> list[Jet]:
    """Jets in ``xi`` of ``exp(xi_1 v_1) ... exp(xi_m v_m) . p - p`` (real components)."""
    p = np.asarray(p, dtype=float)
    N2, m = G.nreal, G.d
    fields = [[jet_translate(c.with_degree(degree), p) for c in gen] for gen in G.generators]
    X = [Jet.zero(m, degree) for _ in range(N2)]
    ident = [Jet.var(i, N2, degree) for i in range(N2)]
    for j in reversed(range(m)):
        xi = Jet.var(j, m, degree)
        new = list(X)
        cur = ident
        for k in range(1, degree + 1):
            cur = [lie_derivative(fields[j], c) for c in cur]
            coef = xi ** k / math.factorial(k)
            for i in range(N2):
                if len(cur[i]):
                    new[i] = new[i] + coef * jet_compose(cur[i], X)
        X = new
    return X


def _to_chart(chart: Chart, X: list[Jet]) -> list[Jet]:
    R = complex_matrix_to_real(chart.linear_map)
    m, D = X[0].nvars, X[0].degree
    U = [sum((X[j] * R[i, j] for j in range(len(X)) if R[i, j] != 0), Jet.zero(m, D)) for i in range(len(X))]
    if not chart.is_affine:
        U = [jet_compose(c.with_degree(D), U) for c in chart.nonlinear_forward_jets(D)]
    return U


@dataclass
class OrbitChart:
    """Projected orbit as a graph over ``x' = (x'_1..x'_m)`` in the frame ``z' = frame @ z``.

    ``x0 = h(x')``, ``x'' = g1(x')``, ``y' = g2(x')``; ``P`` is the full
    parametrization in the chart's real coordinates.
    """

    m: int
    n: int
    h: Jet
    g1: list
    g2: list
    P: list
    frame: np.ndarray
    degree: int
    reparam: list | None = None

    @classmethod
    def from_param(cls, P: Sequence[Jet], gf: GraphForm, tol: float = RANK_TOL) -> "OrbitChart":
        P = list(P)
        n = gf.n
        m = P[0].nvars
        D = min(c.degree for c in P)
        lin = np.array([c.linear_part() for c in P]).reshape(len(P), m)
        r, _ = numerical_rank(lin.T, tol)
        if r < m:
            raise FreeActionError(f"parametrization has rank {r} < {m}")
        scale = np.abs(lin).max()
        if np.abs(lin[:2]).max() > tol * scale:
            raise PreconditionError("parametrized manifold is not complex-tangent at 0")
        Dz = lin[2::2] + 1j * lin[3::2]
        if np.linalg.matrix_rank(Dz, tol=tol * scale) < m:
            raise PreconditionError("parametrized manifold is not totally real")
        Q, _ = np.linalg.qr(Dz, mode="complete")
        B = np.concatenate([Dz, Q[:, m:]], axis=1)
        W = np.linalg.inv(B)
        zc = [ComplexJet(P[2 * j + 2], P[2 * j + 3]) for j in range(n)]
        zp = [sum((zc[j] * complex(W[k, j]) for j in range(n) if W[k, j] != 0), ComplexJet.zero(m, D))
              for k in range(n)]
        G = jet_inverse_map([zp[k].re for k in range(m)])
        comp = lambda j: jet_compose(j.with_degree(D), G)
        h = comp(P[0])
        g1 = [comp(zp[k].re) for k in range(m, n)]
        g2 = [comp(zp[k].im) for k in range(n)]
        return cls(m, n, h, g1, g2, [comp(c) for c in P], W, D, G)

    @classmethod
    def from_graph(cls, h: Jet, gf: GraphForm, g1=None, g2=None, frame=None) -> "OrbitChart":
        """Planted manifold ``x0 = h(x')``, ``y0 = f(h, z)`` over ``x'`` in the frame ``z' = frame @ z``."""
        n, m, D = gf.n, h.nvars, h.degree
        g1 = list(g1) if g1 is not None else [Jet.zero(m, D) for _ in range(n - m)]
        g2 = list(g2) if g2 is not None else [Jet.zero(m, D) for _ in range(n)]
        W = np.eye(n, dtype=complex) if frame is None else np.asarray(frame, dtype=complex)
        Winv = np.linalg.inv(W)
        zp = [ComplexJet(Jet.var(k, m, D) if k < m else g1[k - m], g2[k]) for k in range(n)]
        z = [sum((zp[k] * complex(Winv[j, k]) for k in range(n) if Winv[j, k] != 0), ComplexJet.zero(m, D))
             for j in range(n)]
        args = [h]
        for zj in z:
            args.extend([zj.re, zj.im])
        y0 = jet_compose(gf.f.with_degree(max(gf.f.degree, D)), args)
        P = [h, y0]
        for zj in z:
            P.extend([zj.re, zj.im])
        return cls(m, n, h, g1, g2, P, W, D, None)


def orbit_chart(G: GroupModel, chart: Chart, gf: GraphForm, degree: int | None = None) -> OrbitChart:
    """Orbit of the base point as jets, moved to ``chart`` and rewritten as a graph."""
    D = degree if degree is not None else gf.degree
    if G.d == 0:
        raise PreconditionError("trivial group has no orbit chart")
    if G.d > gf.n:
        raise PreconditionError("orbit charts need a totally real orbit (d <= n)")
    X = orbit_jets(G, chart.base_point, D)
    return OrbitChart.from_param(_to_chart(chart, X), gf)


@dataclass
class Order3Report:
    passed: bool
    low_order: dict
    max_low: float
    restricted: Jet
    tol: float


def check_order3(oc: OrbitChart, gf: GraphForm, tol: float = ZERO_TOL) -> Order3Report:
    """``Re Lambda`` restricted to the orbit has no terms of degree <= 2."""
    if oc.degree < 3:
        raise InsufficientDegreeError(f"order-3 check needs jets of degree >= 3, got {oc.degree}")
    re_lam = gf.adapted_levi().re
    D = min(oc.degree, re_lam.degree)
    r = jet_compose(re_lam.with_degree(D), [c.with_degree(D) for c in oc.P])
    scale = r.max_abs()
    low = {mi: c for mi, c in r.terms() if sum(mi) <= 2}
    bad = {mi: c for mi, c in low.items() if not is_negligible(c, scale, tol)}
    max_low = max((abs(c) for c in low.values()), default=0.0)
    return Order3Report(not bad, low, max_low, r, tol)


def extend_orbit_chart(oc: OrbitChart, gf: GraphForm) -> OrbitChart:
    """A 2n-dimensional manifold in bM containing ``oc`` with the same order-3 verdict.

    Graph ``x0 = -2 Im P(z) + R(x')`` over all of ``z' = frame @ z``, where ``R``
    is ``Re Lambda`` restricted to ``oc`` in its own parameters.
    """
    n, m, D = oc.n, oc.m, oc.degree
    if m == 2 * n:
        return oc
    R = check_order3(oc, gf).restricted
    k = 2 * n
    sub = [Jet.var(j, k, D) for j in range(m)]
    Rk = jet_compose(R.with_degree(D), sub)
    # parameters (x'_1.., x'_n, y'_1.., y'_n); on oc itself x'' = g1 and y' = g2
    xi = [Jet.var(j, k, D) for j in range(k)]
    shift_x = [xi[j] + jet_compose(oc.g1[j - m], sub) if j >= m else xi[j] for j in range(n)]
    shift_y = [xi[n + j] + jet_compose(oc.g2[j], sub) for j in range(n)]
    zp = [ComplexJet(shift_x[j], shift_y[j]) for j in range(n)]
    Winv = np.linalg.inv(oc.frame)
    z = [sum((zp[q] * complex(Winv[j, q]) for q in range(n) if Winv[j, q] != 0), ComplexJet.zero(k, D))
         for j in range(n)]
    Pz = ComplexJet.zero(k, D)
    for a in range(n):
        for b in range(n):
            if gf.P[a, b] != 0:
                Pz = Pz + z[a] * z[b] * complex(gf.P[a, b])
    H = Pz.im * (-2.0) + Rk
    args = [H]
    for zj in z:
        args.extend([zj.re, zj.im])
    y0 = jet_compose(gf.f.with_degree(D), args)
    P = [H, y0]
    for zj in z:
        P.extend([zj.re, zj.im])
    return OrbitChart(k, n, H, [], [], P, oc.frame, D, None)


# C_G locus


@dataclass
class CGLocusReport:
    raw: list
    normalized: list
    normals: np.ndarray
    expected_normals: np.ndarray
    normals_match: bool
    transversal: bool


def _normal_form_ok(phi: Jet, tol: float) -> bool:
    N = phi.nvars // 2
    target = sum((Jet.var(2 * k + 1, phi.nvars, phi.degree) ** 2 for k in range(N)), Jet.zero(phi.nvars, phi.degree))
    low = phi.truncate(min(2, phi.degree)).with_degree(phi.degree)
    return low.max_diff(target) <= tol * (1 + phi.max_abs())


def cg_locus(phi: Jet, G: GroupModel, tol: float = RANK_TOL) -> CGLocusReport:
    """Defining jets of ``{<v_j, J grad phi> = 0}``, raw and divided by -2.

    Correct through degree ``phi.degree - 1`` (one derivative is taken).
    """
    if phi.nvars != G.nreal:
        raise ShapeError("phi and the group act on different spaces")
    if not _normal_form_ok(phi, tol):
        raise PreconditionError("phi is not of the form sum y_j^2 + O(3)")
    N = phi.nvars // 2
    Jg = []
    for k in range(N):
        Jg.append(-phi.deriv(2 * k + 1))
        Jg.append(phi.deriv(2 * k))
    raw, norm = [], []
    for gen in G.generators:
        pair = Jet.zero(phi.nvars, phi.degree)
        for v, w in zip(gen, Jg):
            if len(v) and len(w):
                pair = pair + v.with_degree(phi.degree) * w
        raw.append(pair)
        norm.append(pair * (-0.5))
    normals = np.array([j.linear_part() for j in norm]).reshape(len(norm), phi.nvars)
    v0 = G.field_values(np.zeros(G.nreal))
    expected = apply_J(v0)
    match = True
    for a, b in zip(normals, expected):
        na, nb = np.linalg.norm(a), np.linalg.norm(b)
        if na == 0 or nb == 0 or abs(abs(a @ b) / (na * nb) - 1) > tol:
            match = False
    r, _ = numerical_rank(normals, tol) if len(norm) else (0, None)
    return CGLocusReport(raw, norm, normals, expected, match, r == len(norm))


# orbit families


class OrbitFamily:
    """``Gamma(s, xi) = (A + iB, C)`` with ``Gamma(s, 0) = (is, 0)`` in a normalised chart."""

    m: int
    n: int

    def evaluate(self, s, xi):
        raise NotImplementedError

    def gamma(self, s, xi) -> np.ndarray:
        A, B, C = self.evaluate(s, xi)
        return np.concatenate([(A + 1j * B)[..., None], C], axis=-1)

    def density(self, s, xi) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        return np.ones(np.broadcast_shapes(np.shape(s), xi.shape[:-1]))

    def base_path_error(self, s_values) -> float:
        s = np.asarray(s_values, dtype=float)
        g = self.gamma(s, np.zeros(s.shape + (self.m,)))
        lam = np.zeros_like(g)
        lam[..., 0] = 1j * s
        return float(np.max(np.abs(g - lam)))

    def perturbations(self, s, xi):
        """``xi . a``, ``xi . b`` and ``c`` recovered from the A, B, C split."""
        A, B, C = self.evaluate(s, xi)
        A0, B0, C0 = self.evaluate(np.zeros_like(np.asarray(s, dtype=float)), xi)
        s = np.broadcast_to(np.asarray(s, dtype=float), A.shape)
        return (A - A0) / s, (B - B0) / s - 1.0, (C - C0) / s[..., None]


def _dot(a, xi):
    return np.sum(np.asarray(a) * xi, axis=-1)


class ParametrizedFamily(OrbitFamily):
    """``A = h + s xi.a``, ``B = f(h, z) + s(1 + xi.b)``, ``C = z + s c``.

    ``z(xi)`` embeds the parameters in C^n (default: real coordinate axes).
    ``a``, ``b`` map ``(s, xi)`` to R^m and ``c`` to C^n.
    """

    def __init__(self, m, n, h=None, f=None, z=None, a=None, b=None, c=None, weight=None):
        self.m, self.n = m, n
        self._h = h
        self._f = f
        self._z = z
        self._a, self._b, self._c = a, b, c
        self._w = weight

    def zmap(self, xi):
        if self._z is not None:
            return self._z(xi)
        out = np.zeros(xi.shape[:-1] + (self.n,), complex)
        out[..., : self.m] = xi
        return out

    def evaluate(self, s, xi):
        xi = np.asarray(xi, dtype=float)
        s = np.asarray(s, dtype=float)
        shape = np.broadcast_shapes(s.shape, xi.shape[:-1])
        s = np.broadcast_to(s, shape)
        xi = np.broadcast_to(xi, shape + (self.m,))
        z = self.zmap(xi)
        h = self._h(xi) if self._h is not None else np.zeros(shape)
        f = self._f(h, z) if self._f is not None else np.sum(np.abs(z) ** 2, axis=-1)
        A = h + (s * _dot(self._a(s, xi), xi) if self._a is not None else 0.0)
        B = f + s * (1.0 + (_dot(self._b(s, xi), xi) if self._b is not None else 0.0))
        C = z + (s[..., None] * self._c(s, xi) if self._c is not None else 0.0)
        return np.broadcast_to(A, shape).copy(), np.broadcast_to(B, shape).copy(), np.broadcast_to(C, shape + (self.n,)).copy()

    def density(self, s, xi):
        if self._w is None:
            return super().density(s, xi)
        return self._w(s, xi)


def heisenberg_family(m: int, n: int | None = None) -> ParametrizedFamily:
    """Orbits of the real subgroup through ``(is, 0)``: ``Gamma = (i(s + |xi|^2), xi)``."""
    return ParametrizedFamily(m, m if n is None else n)


class FlowFamily(OrbitFamily):
    """Group-translated family: ``Gamma(s, xi) = Phi(exp(K xi) . Phi^{-1}(is, 0))``.

    ``K`` normalises the parameters so that ``|z(xi)|^2 = |xi|^2 + O(3)`` on ``O``.
    """

    def __init__(self, G: GroupModel, chart: Chart, domain_radius: float | None = None, K=None):
        self.G, self.chart = G, chart
        self.m, self.n = G.d, G.n
        self.domain_radius = domain_radius
        if K is None:
            v = G.field_values(chart.base_point)
            Vc = v[:, 0::2] + 1j * v[:, 1::2]
            Dz = (chart.linear_map @ Vc.T)[1:]
            gram = (Dz.conj().T @ Dz).real
            w, U = np.linalg.eigh(gram)
            if w.min() <= RANK_TOL * w.max():
                raise FreeActionError("orbit parameters are degenerate in the chart")
            K = (U / np.sqrt(w)) @ U.T
        self.K = np.asarray(K, dtype=float)

    def gamma(self, s, xi):
        xi = np.asarray(xi, dtype=float)
        s = np.asarray(s, dtype=float)
        shape = np.broadcast_shapes(s.shape, xi.shape[:-1])
        lam = np.zeros(shape + (self.n + 1,), complex)
        lam[..., 0] = 1j * np.broadcast_to(s, shape)
        z = self.chart.inverse(lam)
        moved = self.G.act(np.broadcast_to(xi, shape + (self.m,)) @ self.K.T, z)
        u = self.chart.forward(moved)
        if self.domain_radius is not None and np.any(np.linalg.norm(u, axis=-1) > self.domain_radius):
            raise DomainExceededError("orbit family leaves the chart ball")
        return u

    def evaluate(self, s, xi):
        u = self.gamma(s, xi)
        return u[..., 0].real, u[..., 0].imag, u[..., 1:]


def orbit_family(G: GroupModel | None, chart: Chart, gf: GraphForm | None = None, analytic: str | None = None,
                 domain_radius: float | None = None, check_s=(1e-3, 1e-2, 0.1)) -> OrbitFamily:
    """Family of orbits through ``lambda(s) = (is, 0)`` in a normalised chart."""
    if gf is not None and gf.Lambda.convention != "fs" and chart.convention != "fs":
        raise PreconditionError("orbit families live in a Folland-Stein chart")
    if analytic == "heisenberg-subgroup":
        fam = heisenberg_family(G.d, G.n)
    elif G is None:
        raise UnsupportedError("no group and no analytic family given")
    else:
        fam = FlowFamily(G, chart, domain_radius)
    err = fam.base_path_error(np.asarray(check_s))
    if err > 1e-9:
        raise PreconditionError(f"family does not pass through (is, 0): error {err:.3g}")
    return fam
