"""Local geometry of a real hypersurface at a boundary point.

Ambient coordinates are ``(z_0, z_1, ..., z_n)`` split into real variables
``(x_0, y_0, x_1, y_1, ...)``. A chart maps a neighbourhood of the base point
to coordinates in which the boundary is the graph ``y_0 = f(x_0, z)`` and the
domain lies on the side ``y_0 > f``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import NotHypersurfacePointError, PreconditionError, UnsupportedError
from .jetcalc import (
    DEFAULT_DEGREE,
    ZERO_TOL,
    ComplexJet,
    Jet,
    complex_coords,
    complex_matrix_to_real,
    complex_to_real,
    is_negligible,
    jet_compose,
    jet_graph_solve,
    jet_inverse_map,
    jet_linear_change,
    jet_translate,
    real_to_complex,
    split_complex,
)

PSEUDOCONVEX_TOL = 1e-9


# defining functions


@dataclass(frozen=True)
class DefiningFunction:
    """Defining function of ``bM`` near a point.

    ``rho`` is a polynomial jet in the ambient real coordinates. With
    ``interior_sign = -1`` the domain is ``{rho < 0}``; ``+1`` selects
    ``{rho > 0}`` (the ``Im z0 - f`` convention).
    """

    rho: Jet
    n: int
    evaluator: Callable[[np.ndarray], np.ndarray] | None = None
    interior_sign: int = -1
    name: str = "custom"
    exact_polynomial: bool = True

    def __post_init__(self):
        if self.rho.nvars != 2 * self.n + 2:
            raise PreconditionError(f"rho must have {2 * self.n + 2} real variables")
        if self.interior_sign not in (-1, 1):
            raise PreconditionError("interior_sign must be +1 or -1")

    @classmethod
    def from_polynomial(cls, rho: Jet, n: int, interior_sign: int = -1, name: str = "custom") -> "DefiningFunction":
        return cls(rho, n, rho.evaluate, interior_sign, name)

    @property
    def nreal(self) -> int:
        return 2 * self.n + 2

    def gradient(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        if not self.exact_polynomial and np.any(p):
            raise UnsupportedError("gradient away from 0 needs an exact polynomial rho")
        return jet_translate(self.rho, p).linear_part()

    def value(self, p) -> float:
        return float(self.rho.evaluate(np.asarray(p, dtype=float)))

    def inside(self, pts) -> np.ndarray:
        """Signed interior measure: positive exactly on the domain side."""
        if self.evaluator is None:
            raise UnsupportedError("no numeric evaluator for this defining function")
        return self.interior_sign * self.evaluator(np.asarray(pts, dtype=float))


def siegel(n: int, degree: int = DEFAULT_DEGREE) -> DefiningFunction:
    """``|z|^2 - Im z0``, negative on the Siegel domain."""
    N = 2 * n + 2
    rho = -Jet.var(1, N, degree)
    for j in range(1, n + 1):
        rho = rho + Jet.var(2 * j, N, degree) ** 2 + Jet.var(2 * j + 1, N, degree) ** 2
    return DefiningFunction.from_polynomial(rho, n, -1, "siegel")


def cylinder(epsilon: float, degree: int = DEFAULT_DEGREE) -> DefiningFunction:
    """Tube ``y0^2 + y1^2 < eps^2`` in C^2."""
    rho = Jet.var(1, 4, degree) ** 2 + Jet.var(3, 4, degree) ** 2 - epsilon ** 2
    return DefiningFunction.from_polynomial(rho, 1, -1, "cylinder")


def perturbed_siegel(n: int, tail: Jet | None = None, degree: int = DEFAULT_DEGREE) -> DefiningFunction:
    """``|z|^2 + tail - Im z0`` with ``tail`` a jet in the ambient variables."""
    df = siegel(n, degree)
    rho = df.rho if tail is None else df.rho + tail.with_degree(degree)
    return DefiningFunction.from_polynomial(rho, n, -1, "perturbed-siegel")


# charts


@dataclass(frozen=True)
class Chart:
    """Holomorphic chart ``u = Phi(z)`` around ``base_point``.

    ``w = linear_map @ (z - p)`` followed by the polynomial normalisation
    ``t0 = w0 - 2i w_z^T harmonic w_z``, ``u0 = t0 + i t0 (kappa0 t0 + kappa_z . w_z)``,
    ``u_z = w_z``. Plain adapted charts carry zero ``harmonic`` and ``kappa``.
    """

    base_point: np.ndarray
    linear_map: np.ndarray
    harmonic: np.ndarray | None = None
    kappa: np.ndarray | None = None
    convention: str = "adapted"
    note: str = ""

    @property
    def N(self) -> int:
        return self.linear_map.shape[0]

    @property
    def n(self) -> int:
        return self.N - 1

    @property
    def is_affine(self) -> bool:
        return (self.harmonic is None or not np.any(self.harmonic)) and (
            self.kappa is None or not np.any(self.kappa))

    def _P(self, wz):
        H = self.harmonic
        if H is None:
            return np.zeros(wz.shape[:-1], dtype=complex)
        return np.einsum("...j,jk,...k->...", wz, H, wz)

    def _k(self, t0, wz):
        if self.kappa is None:
            return np.zeros_like(t0)
        return self.kappa[0] * t0 + wz @ self.kappa[1:]

    def forward(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        p = real_to_complex(self.base_point)
        w = (z - p) @ self.linear_map.T
        if self.is_affine:
            return w
        wz = w[..., 1:]
        t0 = w[..., 0] - 2j * self._P(wz)
        u0 = t0 + 1j * t0 * self._k(t0, wz)
        return np.concatenate([u0[..., None], wz], axis=-1)

    def inverse(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=complex)
        if not self.is_affine:
            uz = u[..., 1:]
            u0 = u[..., 0]
            kap = self.kappa if self.kappa is not None else np.zeros(self.N, complex)
            b = 1.0 + 1j * (uz @ kap[1:])
            a = 1j * kap[0]
            if a == 0:
                t0 = u0 / b
            else:
                disc = np.sqrt(b * b + 4.0 * a * u0)
                disc = np.where((np.conj(b) * disc).real < 0, -disc, disc)
                t0 = 2.0 * u0 / (b + disc)
            w0 = t0 + 2j * self._P(uz)
            u = np.concatenate([w0[..., None], uz], axis=-1)
        p = real_to_complex(self.base_point)
        return u @ np.linalg.inv(self.linear_map).T + p

    def nonlinear_forward_jets(self, degree: int) -> list[Jet]:
        """Real jets of ``w -> u`` (identity for affine charts)."""
        N = self.N
        zc = complex_coords(N, degree)
        if self.is_affine:
            return split_complex(zc)
        wz = zc[1:]
        P = ComplexJet.zero(2 * N, degree)
        if self.harmonic is not None:
            for j in range(self.n):
                for k in range(self.n):
                    if self.harmonic[j, k] != 0:
                        P = P + wz[j] * wz[k] * complex(self.harmonic[j, k])
        t0 = zc[0] - P * 2j
        kap = self.kappa if self.kappa is not None else np.zeros(N, complex)
        lin = t0 * complex(kap[0])
        for j in range(self.n):
            lin = lin + wz[j] * complex(kap[j + 1])
        u0 = t0 + t0 * lin * 1j
        return split_complex([u0] + wz)

    def pullback(self, rho: Jet, exact_polynomial: bool = True) -> Jet:
        """Jet of ``rho o Phi^{-1}`` at 0."""
        p = np.asarray(self.base_point, dtype=float)
        if np.any(p) and not exact_polynomial:
            raise UnsupportedError("translating a truncated jet is inexact")
        r = jet_translate(rho, p)
        r = jet_linear_change(r, complex_matrix_to_real(np.linalg.inv(self.linear_map)))
        if not self.is_affine:
            r = jet_compose(r, jet_inverse_map(self.nonlinear_forward_jets(rho.degree)))
        return r

    def pushforward_fields(self, fields: list[list[Jet]], exact_polynomial: bool = True) -> list[list[Jet]]:
        """Vector fields (ambient real component jets) expressed in chart coordinates."""
        if not self.is_affine:
            raise UnsupportedError("vector fields are pushed through affine charts only")
        p = np.asarray(self.base_point, dtype=float)
        A = complex_matrix_to_real(self.linear_map)
        Ainv = np.linalg.inv(A)
        out = []
        for comps in fields:
            if np.any(p) and not exact_polynomial:
                raise UnsupportedError("translating a truncated jet is inexact")
            moved = [jet_linear_change(jet_translate(c, p), Ainv) for c in comps]
            out.append([sum((moved[j] * A[i, j] for j in range(len(moved)) if A[i, j] != 0),
                            Jet.zero(moved[0].nvars, moved[0].degree)) for i in range(len(moved))])
        return out

    def to_dict(self) -> dict:
        def cplx(a):
            a = np.asarray(a, dtype=complex)
            return {"re": a.real.tolist(), "im": a.imag.tolist()}

        d = {"base_point": np.asarray(self.base_point, float).tolist(),
             "linear_map": cplx(self.linear_map), "convention": self.convention, "note": self.note}
        if self.harmonic is not None:
            d["harmonic"] = cplx(self.harmonic)
        if self.kappa is not None:
            d["kappa"] = cplx(self.kappa)
        return d


AdaptedChart = Chart


def adapt_coordinates(rho: DefiningFunction, p=None, tol: float = ZERO_TOL) -> Chart:
    """Translate ``p`` to 0 and rotate so the inward complex normal becomes ``+i d/dz0``."""
    N = rho.n + 1
    p = np.zeros(2 * N) if p is None else np.asarray(p, dtype=float)
    val = jet_translate(rho.rho, p).constant() if np.any(p) else rho.rho.constant()
    scale = max(1.0, rho.rho.max_abs())
    if abs(val) > 1e-8 * scale:
        raise PreconditionError(f"base point is not on the hypersurface (rho = {val:.3g})")
    g = rho.gradient(p)
    gn = np.linalg.norm(g)
    if gn <= tol * scale:
        raise NotHypersurfacePointError("gradient of rho vanishes at the base point")
    u = rho.interior_sign * (g[0::2] + 1j * g[1::2]) / gn
    basis = [u]
    kstar = int(np.argmax(np.abs(u)))
    for k in range(N):
        if k == kstar:
            continue
        e = np.zeros(N, complex)
        e[k] = 1.0
        for b in basis:
            e = e - np.vdot(b, e) * b
        e = e / np.linalg.norm(e)
        # fix the phase so the leading entry is real positive
        lead = e[np.argmax(np.abs(e) > 1e-12)]
        e = e * (abs(lead) / lead)
        basis.append(e)
    A = np.empty((N, N), complex)
    A[0] = 1j * np.conj(u)
    for j in range(1, N):
        A[j] = np.conj(basis[j])
    return Chart(p.copy(), A, convention="adapted", note="unitary completion of the inward complex normal")


# graph form and Levi data


@dataclass(frozen=True)
class LeviPolynomial:
    """``Lambda = z0 - 2i P(z)`` (``adapted``) or ``-i z0`` (``fs``), as a jet in chart coordinates."""

    jet: ComplexJet
    convention: str = "adapted"

    def evaluate(self, u) -> np.ndarray:
        return self.jet.evaluate(complex_to_real(u))

    @staticmethod
    def on_cut(w, tol: float = 0.0) -> np.ndarray:
        w = np.asarray(w, dtype=complex)
        return (np.abs(w.real) <= tol) & (w.imag <= tol)

    @staticmethod
    def cut_distance(w) -> np.ndarray:
        """Distance to the ray ``{Re w = 0, Im w <= 0}``."""
        w = np.asarray(w, dtype=complex)
        return np.where(w.imag <= 0, np.abs(w.real), np.abs(w))


def log_branch(w) -> np.ndarray:
    """Logarithm with argument in (-pi/2, 3pi/2]; cut along the negative imaginary axis."""
    w = np.asarray(w, dtype=complex)
    arg = np.angle(w)
    arg = np.where(arg <= -np.pi / 2, arg + 2 * np.pi, arg)
    return np.log(np.abs(w)) + 1j * arg


def power_branch(w, exponent: float) -> np.ndarray:
    return np.exp(exponent * log_branch(w))


def _f_index_to_ambient(k: int) -> int:
    return 0 if k == 0 else k + 1


@dataclass(frozen=True)
class GraphForm:
    """``Im z0 = f(Re z0, z)`` in a chart, with the split ``f_2 = x0*ell + 2 Re P + L``.

    ``f`` lives on the variables ``(x0, x1, y1, ..., xn, yn)``. ``ell`` holds
    the coefficients of the linear form in that order, ``P`` is the symmetric
    matrix with ``P(z) = z^T P z`` and ``L`` the Hermitian matrix with
    ``L(z) = z^H L z``.
    """

    n: int
    f: Jet
    ell: np.ndarray
    P: np.ndarray
    L: np.ndarray
    Lambda: LeviPolynomial
    chart: Chart
    rho_chart: Jet

    @property
    def degree(self) -> int:
        return self.f.degree

    def harmonic_jet(self) -> ComplexJet:
        return quadratic_form_jet(self.P, self.n, self.f.degree)

    def adapted_levi(self) -> ComplexJet:
        """``z0 - 2i P(z)`` regardless of the convention flag (the order-3 condition uses this one)."""
        zc = complex_coords(self.n + 1, self.f.degree)
        return zc[0] - self.harmonic_jet() * 2j

    def second_order_jet(self) -> Jet:
        """``x0*ell + 2 Re P + L`` rebuilt on the variables of ``f``."""
        D = self.f.degree
        nv = 2 * self.n + 1
        x0 = Jet.var(0, nv, D)
        ell = Jet.linear(self.ell, D)
        z = [ComplexJet(Jet.var(2 * j - 1, nv, D), Jet.var(2 * j, nv, D)) for j in range(1, self.n + 1)]
        P = ComplexJet.zero(nv, D)
        Lf = ComplexJet.zero(nv, D)
        for j in range(self.n):
            for k in range(self.n):
                P = P + z[j] * z[k] * complex(self.P[j, k])
                Lf = Lf + z[j].conj() * z[k] * complex(self.L[j, k])
        return x0 * ell + P.re * 2.0 + Lf.re

    def f_evaluate(self, x0, z) -> np.ndarray:
        """Evaluate ``f`` at real ``x0`` and complex ``z``."""
        x0 = np.asarray(x0, dtype=float)
        z = np.asarray(z, dtype=complex)
        pts = np.concatenate([x0[..., None], complex_to_real(z)], axis=-1)
        return self.f.evaluate(pts)


def quadratic_form_jet(P: np.ndarray, n: int, degree: int) -> ComplexJet:
    """``z^T P z`` as a complex jet on the ambient real variables of C^{n+1}."""
    zc = complex_coords(n + 1, degree)
    out = ComplexJet.zero(2 * n + 2, degree)
    for j in range(n):
        for k in range(n):
            if P[j, k] != 0:
                out = out + zc[j + 1] * zc[k + 1] * complex(P[j, k])
    return out


def split_quadratic(q_hess: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Harmonic and Hermitian parts of a real quadratic form on C^n.

    ``q_hess`` is its real Hessian in ``(x1, y1, ..., xn, yn)`` order. Returns
    ``(P, L)`` with ``q(z) = 2 Re(z^T P z) + z^H L z``.
    """
    xx = q_hess[0::2, 0::2]
    yy = q_hess[1::2, 1::2]
    xy = q_hess[0::2, 1::2]  # d^2 q / dx_j dy_k
    yx = q_hess[1::2, 0::2]  # d^2 q / dy_j dx_k
    L = 0.25 * (xx + yy + 1j * (yx - xy))
    P = 0.125 * (xx - yy - 1j * (xy + yx))
    L = 0.5 * (L + L.conj().T)
    P = 0.5 * (P + P.T)
    return P, L


def graph_form(rho: DefiningFunction, chart: Chart, convention: str | None = None,
               tol: float = ZERO_TOL) -> GraphForm:
    """Solve the boundary equation for ``Im z0`` in ``chart`` and split its quadratic part."""
    convention = convention or chart.convention
    rc = chart.pullback(rho.rho, rho.exact_polynomial)
    D = rc.degree
    grad = rc.linear_part()
    scale = max(1.0, rc.max_abs())
    if not is_negligible(rc.constant(), scale, 1e-8):
        raise PreconditionError("chart base point is not on the hypersurface")
    if is_negligible(grad[1], scale, tol):
        raise PreconditionError("chart is not adapted: d rho / d y0 vanishes")
    others = np.delete(grad, 1)
    if np.any(np.abs(others) > 1e-8 * max(1.0, abs(grad[1]))):
        raise PreconditionError("chart is not adapted: tangent space is not {Im z0 = 0}")
    f = jet_graph_solve(rc, 1)
    f = Jet._raw(f.nvars, f.degree, {mi: v for mi, v in f.terms() if sum(mi) >= 2 or abs(v) > 1e-14})
    n = rho.n
    f2 = f.homogeneous(2)
    Hf = f2.hessian()
    ell = np.zeros(2 * n + 1)
    ell[0] = 0.5 * Hf[0, 0]
    ell[1:] = Hf[0, 1:]
    P, L = split_quadratic(Hf[1:, 1:])
    zc = complex_coords(n + 1, D)
    if convention == "fs":
        lam = zc[0] * (-1j)
    else:
        lam = zc[0] - quadratic_form_jet(P, n, D) * 2j
    return GraphForm(n, f, ell, P, L, LeviPolynomial(lam, convention), chart, rc)


@dataclass(frozen=True)
class PseudoconvexityReport:
    eigenvalues: np.ndarray
    min_eigenvalue: float
    passed: bool
    tol: float = PSEUDOCONVEX_TOL


def check_strict_pseudoconvexity(gf: GraphForm, tol: float = PSEUDOCONVEX_TOL) -> PseudoconvexityReport:
    ev = np.linalg.eigvalsh(gf.L) if gf.n else np.zeros(0)
    mn = float(ev.min()) if ev.size else float("inf")
    return PseudoconvexityReport(ev, mn, bool(mn > tol), tol)


def folland_stein_chart(gf: GraphForm, rho: DefiningFunction | None = None) -> Chart:
    """Chart in which the boundary reads ``Im z0 = |z|^2 + O(3)``."""
    rep = check_strict_pseudoconvexity(gf)
    if not rep.passed:
        raise PreconditionError("Levi form is not positive definite")
    n = gf.n
    w, V = np.linalg.eigh(gf.L)
    S = (V * np.sqrt(w)) @ V.conj().T
    Sinv = (V / np.sqrt(w)) @ V.conj().T
    block = np.eye(n + 1, dtype=complex)
    block[1:, 1:] = S
    A = block @ gf.chart.linear_map
    P_u = Sinv.T @ gf.P @ Sinv
    gamma = gf.ell[1::2] - 1j * gf.ell[2::2]
    gamma_u = Sinv.T @ gamma
    kappa = np.concatenate([[-gf.ell[0]], -gamma_u]).astype(complex)
    return Chart(np.asarray(gf.chart.base_point, float).copy(), A, P_u.astype(complex), kappa,
                 convention="fs", note="harmonic part removed, Levi form normalised, ell absorbed")


# support function check


@dataclass
class SamplingConfig:
    radius: float = 0.1
    n_samples: int = 10_000
    seed: int = 0
    bisection_steps: int = 10
    max_radius_factor: float = 10.0


@dataclass
class SupportReport:
    passed: bool
    zero_set_ok: bool
    cut_ok: bool
    n_interior: int
    n_boundary: int
    min_boundary_lambda: float
    zero_set_margin: float
    cut_margin: float
    largest_radius: float
    details: dict = field(default_factory=dict)


def _ball(rng, n, dim, radius):
    g = rng.normal(size=(n, dim))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    r = radius * rng.uniform(size=(n, 1)) ** (1.0 / dim)
    return g * r


def _boundary_points(rho: DefiningFunction, chart: Chart, gf: GraphForm, xz: np.ndarray) -> np.ndarray:
    """Points of bM over chart coordinates ``(x0, z)`` by Newton in ``y0``."""
    def inside(y0):
        pts = np.insert(xz, 1, y0, axis=1)
        amb = complex_to_real(chart.inverse(real_to_complex(pts)))
        return rho.inside(amb)

    y = gf.f.evaluate(xz)
    h = 1e-7
    for _ in range(30):
        g0 = inside(y)
        dg = (inside(y + h) - inside(y - h)) / (2 * h)
        dg = np.where(np.abs(dg) < 1e-14, 1e-14, dg)
        step = g0 / dg
        y = y - step
        if np.all(np.abs(step) < 1e-15 + 1e-13 * np.abs(y)):
            break
    ok = np.abs(inside(y)) < 1e-10
    return np.insert(xz, 1, y, axis=1)[ok]


def _support_at_radius(gf: GraphForm, rho: DefiningFunction, cfg: SamplingConfig, radius: float):
    chart = gf.chart
    N = gf.n + 1
    rng = np.random.default_rng(cfg.seed)
    lam = gf.Lambda

    def amb(u_real):
        return complex_to_real(chart.inverse(real_to_complex(u_real)))

    # zero set of Lambda: Lambda is affine in z0, solve it for (x0, y0) given z
    zs = _ball(rng, cfg.n_samples, 2 * gf.n, radius) if gf.n else np.zeros((cfg.n_samples, 0))
    zs = zs[np.linalg.norm(zs, axis=1) > 1e-6 * radius]
    pts0 = np.concatenate([np.zeros((len(zs), 2)), zs], axis=1)
    lam_z = lam.evaluate(real_to_complex(pts0))
    c0 = lam.evaluate(real_to_complex(np.eye(2 * N)[0:1]))[0] - lam.evaluate(real_to_complex(np.zeros((1, 2 * N))))[0]
    z0 = -lam_z / c0
    q = np.concatenate([z0.real[:, None], z0.imag[:, None], zs], axis=1)
    keep = np.linalg.norm(q, axis=1) < radius
    q = q[keep]
    zs = zs[keep]
    s_zero = rho.inside(amb(q)) if len(q) else np.zeros(0)
    zero_ok = bool(np.all(s_zero < 0))
    zero_margin = float(np.min(-s_zero / np.sum(zs ** 2, axis=1))) if len(q) else float("inf")

    # boundary samples
    xz = _ball(rng, cfg.n_samples, 2 * gf.n + 1, radius)
    bpts = _boundary_points(rho, chart, gf, xz)
    bpts = bpts[np.linalg.norm(bpts, axis=1) < radius]
    blam = np.abs(lam.evaluate(real_to_complex(bpts))) if len(bpts) else np.zeros(0)
    bnorm = np.linalg.norm(bpts, axis=1) if len(bpts) else np.zeros(0)
    away = bnorm > 1e-3 * radius
    min_blam = float(np.min(blam[away])) if np.any(away) else float("inf")
    boundary_ok = bool(np.all(blam[away] > 0))

    # interior samples and the Re Lambda = 0 slice
    u = _ball(rng, cfg.n_samples, 2 * N, radius)
    ins = rho.inside(amb(u)) > 0
    ui = u[ins]
    w = lam.evaluate(real_to_complex(ui)) if len(ui) else np.zeros(0, complex)
    dist = LeviPolynomial.cut_distance(w)
    cut_margin = float(np.min(dist)) if len(ui) else float("inf")
    samples_ok = bool(np.all(dist > 0))

    re_lam = lam.jet.re
    lin = re_lam.linear_part()
    k = int(np.argmax(np.abs(lin[:2])))
    slice_expr = jet_graph_solve(re_lam, k)
    free = np.delete(u, k, axis=1)
    sl = np.insert(free, k, slice_expr.evaluate(free), axis=1)
    sl = sl[np.linalg.norm(sl, axis=1) < radius]
    sl_in = sl[rho.inside(amb(sl)) > 0] if len(sl) else sl
    wsl = lam.evaluate(real_to_complex(sl_in)) if len(sl_in) else np.zeros(0, complex)
    slice_ok = bool(np.all(wsl.imag > 0))

    cut_ok = samples_ok and slice_ok
    passed = zero_ok and boundary_ok and cut_ok
    details = {"radius": radius, "n_slice_interior": int(len(sl_in)), "n_zero_set": int(len(q)),
               "slice_ok": slice_ok, "boundary_ok": boundary_ok}
    return passed, zero_ok and boundary_ok, cut_ok, len(ui), len(bpts), min_blam, zero_margin, cut_margin, details


def support_function_check(gf: GraphForm, rho: DefiningFunction, samples: SamplingConfig | None = None) -> SupportReport:
    """Sample ``M`` and ``bM`` near the base point and test the two support properties of ``Lambda``."""
    cfg = samples or SamplingConfig()
    if rho.evaluator is None:
        raise UnsupportedError("support check needs a numeric evaluator")
    if not check_strict_pseudoconvexity(gf).passed:
        raise PreconditionError("support check requires strong pseudoconvexity")
    res = _support_at_radius(gf, rho, cfg, cfg.radius)
    passed = res[0]
    hi = cfg.radius * cfg.max_radius_factor
    if not passed:
        lo, hi_b = 0.0, cfg.radius
    elif _support_at_radius(gf, rho, cfg, hi)[0]:
        lo = hi_b = hi
    else:
        lo, hi_b = cfg.radius, hi
    if lo != hi_b:
        for _ in range(cfg.bisection_steps):
            mid = 0.5 * (lo + hi_b)
            if _support_at_radius(gf, rho, cfg, mid)[0]:
                lo = mid
            else:
                hi_b = mid
    return SupportReport(passed, res[1], res[2], res[3], res[4], res[5], res[6], res[7], lo, res[8])
