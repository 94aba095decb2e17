"""Singular convolution probes ``F(s) = int Delta chi Lambda(Gamma(s, xi))^{-tau} dxi`` and exponent fits.

The integrand uses ``Lambda = -i z0`` in a normalised chart, so along a family
``Gamma = (A + iB, C)`` it is ``(B - iA)^{-tau}`` on the branch cut along the
negative imaginary axis.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import mpmath
import numpy as np
from scipy import special, stats

from .errors import BranchCutError, ConfigError, PreconditionError, SingularityError
from .group_action import OrbitFamily
from .hypersurface import GraphForm, LeviPolynomial, power_branch
from .jetcalc import Jet


# kernel


def smoothstep5(t) -> np.ndarray:
    t = np.clip(t, 0.0, 1.0)
    return t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)


@dataclass(frozen=True)
class Kernel:
    """Weight ``Delta`` on the group chart and radial cutoff ``chi``.

    ``chi = 1`` on ``[0, r1]``, ``0`` beyond ``r2``, quintic smoothstep between.
    ``r1 == r2`` gives the sharp indicator of ``[0, r2]``.
    """

    r2: float = 1.0
    r1: float | None = None
    delta: str = "one"
    delta_width: float = 0.5
    delta_jet: Jet | None = None

    def __post_init__(self):
        if self.r1 is None:
            object.__setattr__(self, "r1", 0.4 * self.r2)
        if not 0 < self.r1 <= self.r2:
            raise ConfigError("kernel radii must satisfy 0 < r1 <= r2")
        if self.delta not in ("one", "gaussian", "jet"):
            raise ConfigError(f"unknown Delta kind {self.delta!r}")
        if self.delta == "jet":
            if self.delta_jet is None or abs(self.delta_jet.constant() - 1.0) > 1e-12:
                raise ConfigError("Delta jet must equal 1 at the identity")

    @property
    def sharp(self) -> bool:
        return self.r1 == self.r2

    def chi(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        if self.sharp:
            return (r <= self.r2).astype(float)
        return smoothstep5((self.r2 - r) / (self.r2 - self.r1))

    def delta_at(self, xi) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        if self.delta == "one":
            return np.ones(xi.shape[:-1])
        if self.delta == "gaussian":
            return np.exp(-np.sum(xi * xi, axis=-1) / (2 * self.delta_width ** 2))
        return self.delta_jet.evaluate(xi)


# configuration and quadrature rules


@dataclass
class ProbeConfig:
    tau: float | None = None
    s0: float = 0.1
    ratio: float = 0.5
    count: int = 20
    nodes_per_panel: int = 16
    panels_below_sqrt_s: int = 7
    angular_nodes: int = 32
    max_refine: int = 3
    rtol: float = 1e-10
    override: bool = False

    def s_grid(self) -> np.ndarray:
        return self.s0 * self.ratio ** np.arange(self.count)

    def resolve_tau(self, d: int) -> float:
        tau = (d - 1) / 2 if self.tau is None else float(self.tau)
        if d == 1 and self.tau is None:
            tau = 0.25
        if not self.override and not 0 < 2 * tau < d:
            raise ConfigError(f"tau = {tau} violates 0 < 2 tau < d = {d}; set override for super-critical runs")
        return tau


def sphere_area(m: int) -> float:
    return 2 * math.pi ** (m / 2) / math.gamma(m / 2)


def sphere_rule(m: int, n: int = 32) -> tuple[np.ndarray, np.ndarray]:
    """Directions and weights on ``S^{m-1}``; exact for trigonometric polynomials of moderate degree."""
    if m == 1:
        return np.array([[1.0], [-1.0]]), np.array([1.0, 1.0])
    if m == 2:
        phi = 2 * np.pi * np.arange(n) / n
        return np.stack([np.cos(phi), np.sin(phi)], axis=1), np.full(n, 2 * np.pi / n)
    alpha = (m - 3) / 2
    t, wt = special.roots_jacobi(max(n // 2, 2), alpha, alpha)
    sub, wsub = sphere_rule(m - 1, n)
    T = np.repeat(t, len(sub))
    S = np.tile(sub, (len(t), 1))
    dirs = np.concatenate([T[:, None], np.sqrt(1 - T * T)[:, None] * S], axis=1)
    return dirs, np.outer(wt, wsub).ravel()


def _gl(n):
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


def radial_breakpoints(s: float, r_max: float, r1: float | None, below: int) -> np.ndarray:
    """Graded mesh: octaves around ``sqrt(s)`` refined towards 0, plus the cutoff radii."""
    q = math.sqrt(s)
    pts = {0.0, r_max}
    if r1 is not None and 0 < r1 < r_max:
        pts.add(r1)
    for k in range(-below, 64):
        r = q * 2.0 ** k
        if r >= r_max:
            break
        pts.add(r)
    return np.array(sorted(pts))


def radial_nodes(breaks: np.ndarray, n: int, split: int = 1) -> tuple[np.ndarray, np.ndarray]:
    x, w = _gl(n)
    if split > 1:
        fine = [np.linspace(a, b, split + 1) for a, b in zip(breaks[:-1], breaks[1:])]
        breaks = np.unique(np.concatenate(fine))
    a, b = breaks[:-1, None], breaks[1:, None]
    r = 0.5 * (b - a) * x + 0.5 * (a + b)
    wr = 0.5 * (b - a) * w
    return r.ravel(), wr.ravel()


# reference integral


def reference_integral(m: int, tau: float, s: float, upper: float = 1.0) -> float:
    """``int_0^upper r^{m-1} (s + r^2)^{-tau} dr``; ``inf`` signals divergence at ``s = 0``."""
    if m < 1:
        raise ConfigError("m must be a positive integer")
    if s < 0:
        raise ConfigError("s must be non-negative")
    if upper != 1.0:
        return upper ** (m - 2 * tau) * reference_integral(m, tau, s / upper ** 2)
    if s == 0:
        return math.inf if 2 * tau >= m else 1.0 / (m - 2 * tau)
    if m % 2 == 0:
        # u = r^2 and u^k = ((s+u) - s)^k
        k = m // 2 - 1
        total = 0.0
        for j in range(k + 1):
            e = j - tau + 1
            if abs(e) < 1e-15:
                piece = math.log1p(1.0 / s)
            else:
                piece = s ** e * math.expm1(e * math.log1p(1.0 / s)) / e
            total += math.comb(k, j) * (-s) ** (k - j) * piece
        return 0.5 * total
    if m == 1 and tau == 1:
        q = math.sqrt(s)
        return math.atan(1.0 / q) / q
    with mpmath.workdps(30):
        a = mpmath.mpf(m) / 2
        val = mpmath.hyp2f1(tau, a, a + 1, -1 / mpmath.mpf(s)) * mpmath.mpf(s) ** (-tau) / (2 * a)
        return float(val)


def expected_exponent(m: int, tau: float) -> float:
    return m / 2 - tau - 1


# theta diagnostics


def theta_diagnostic(fam: OrbitFamily, gf: GraphForm | None, s, xi):
    """``theta = -A/B``, ``Q = B/(s + |xi|^2)``, ``R = A/(s + |xi|^2)``."""
    xi = np.asarray(xi, dtype=float)
    A, B, _ = fam.evaluate(s, xi)
    denom = np.asarray(s, dtype=float) + np.sum(xi * xi, axis=-1)
    if np.any(denom == 0) or np.any(B == 0):
        raise SingularityError("theta is undefined at this (s, xi)")
    return -A / B, B / denom, A / denom


def diagnostic_grid(m: int, r: float, ns: int = 8, nr: int = 8, n_ang: int = 16):
    """Deterministic ``(s, xi)`` points with ``s >= 0`` and ``|(s, xi)| <= r``, origin excluded."""
    dirs, _ = sphere_rule(m, n_ang)
    s = r * np.arange(ns + 1) / ns
    rad = r * np.arange(nr + 1) / nr
    S, RR, K = np.meshgrid(s, rad, np.arange(len(dirs)), indexing="ij")
    S, RR, K = S.ravel(), RR.ravel(), K.ravel()
    xi = RR[:, None] * dirs[K]
    keep = (S ** 2 + RR ** 2 <= r * r * (1 + 1e-12)) & ((S > 0) | (RR > 0))
    return S[keep], xi[keep]


def sup_theta(fam: OrbitFamily, gf: GraphForm | None, r: float, ns: int = 8, nr: int = 8, n_ang: int = 16) -> float:
    s, xi = diagnostic_grid(fam.m, r, ns, nr, n_ang)
    th, _, _ = theta_diagnostic(fam, gf, s, xi)
    return float(np.max(np.abs(th)))


def sup_QR(fam: OrbitFamily, gf: GraphForm | None, r: float, **grid) -> tuple[float, float]:
    """``sup |Q - 1|`` and ``sup |R|`` on the diagnostic grid."""
    s, xi = diagnostic_grid(fam.m, r, **grid)
    _, Q, R = theta_diagnostic(fam, gf, s, xi)
    return float(np.max(np.abs(Q - 1))), float(np.max(np.abs(R)))


def angular_factor(fam: OrbitFamily, tau: float, s: float, r: float, n_ang: int = 32) -> complex:
    """``I(s, r) = int_S (Lambda / (s + r^2))^{-tau} dOmega`` on the sphere of radius ``r``."""
    dirs, w = sphere_rule(fam.m, n_ang)
    A, B, _ = fam.evaluate(s, r * dirs)
    vals = power_branch((B - 1j * A) / (s + r * r), -tau)
    return complex(np.sum(vals * w))


# probe


@dataclass
class ProbeResult:
    s: np.ndarray
    F: np.ndarray
    quad_err: np.ndarray
    flagged: np.ndarray
    m: int
    tau: float
    expected: float
    min_cut_distance: float
    meta: dict = field(default_factory=dict)

    def secants(self):
        s, F = self.s, self.F
        dF = (F[:-1] - F[1:]) / (s[:-1] - s[1:])
        return np.sqrt(s[:-1] * s[1:]), dF

    def rows(self) -> list[list[float]]:
        smid, dF = self.secants()
        y = np.log(np.abs(dF.real))
        x = np.log(smid)
        rows = []
        for i in range(len(self.s)):
            d = dF[i].real if i < len(dF) else math.nan
            slope = (y[i] - y[i - 1]) / (x[i] - x[i - 1]) if 0 < i < len(dF) else math.nan
            rows.append([self.s[i], self.F[i].real, self.F[i].imag, self.quad_err[i], d, slope])
        return rows

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["s", "re_F", "im_F", "quad_err", "dF_ds", "log_slope_partial"])
        for row in self.rows():
            w.writerow([repr(float(v)) for v in row])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text


def _integrate_once(fam, kernel, tau, s, m, dirs, wang, breaks, n, split):
    r, wr = radial_nodes(breaks, n, split)
    xi = r[None, :, None] * dirs[:, None, :]
    A, B, _ = fam.evaluate(s, xi)
    lam = B - 1j * A
    if np.any(LeviPolynomial.on_cut(lam)):
        raise BranchCutError(f"integrand meets the branch cut at s = {s:g}")
    dist = float(np.min(LeviPolynomial.cut_distance(lam)))
    integrand = power_branch(lam, -tau) * kernel.delta_at(xi) * fam.density(s, xi)
    radial = kernel.chi(r) * r ** (m - 1) * wr
    inner = np.sum(integrand * radial[None, :], axis=1)
    return complex(np.sum(inner * wang)), dist


def probe_value(fam: OrbitFamily, kernel: Kernel, tau: float, s: float, cfg: ProbeConfig):
    """``F(s)`` with a refinement-difference error estimate; returns (value, err, converged, cut distance)."""
    m = fam.m
    dirs, wang = sphere_rule(m, cfg.angular_nodes)
    r1 = None if kernel.sharp else kernel.r1
    breaks = radial_breakpoints(s, kernel.r2, r1, cfg.panels_below_sqrt_s)
    prev, dist = _integrate_once(fam, kernel, tau, s, m, dirs, wang, breaks, cfg.nodes_per_panel, 1)
    split = 1
    err = math.inf
    for _ in range(cfg.max_refine):
        split *= 2
        cur, d2 = _integrate_once(fam, kernel, tau, s, m, dirs, wang, breaks, cfg.nodes_per_panel, split)
        dist = min(dist, d2)
        err = abs(cur - prev)
        prev = cur
        if err <= cfg.rtol * max(abs(cur), 1e-300):
            return cur, err, True, dist
    return prev, err, False, dist


def convolution_probe(fam: OrbitFamily, gf: GraphForm | None, cfg: ProbeConfig, kernel: Kernel,
                      s_values=None) -> ProbeResult:
    """Evaluate ``F`` on the geometric ``s``-grid (or ``s_values``)."""
    if gf is not None and gf.Lambda.convention != "fs":
        raise PreconditionError("probe integrals use the Folland-Stein convention Lambda = -i z0")
    tau = cfg.resolve_tau(fam.m)
    s_arr = np.asarray(cfg.s_grid() if s_values is None else s_values, dtype=float)
    F = np.empty(len(s_arr), complex)
    err = np.empty(len(s_arr))
    ok = np.empty(len(s_arr), bool)
    dist = math.inf
    for i, s in enumerate(s_arr):
        F[i], err[i], ok[i], d = probe_value(fam, kernel, tau, float(s), cfg)
        dist = min(dist, d)
    return ProbeResult(s_arr, F, err, ~ok, fam.m, tau, expected_exponent(fam.m, tau), dist)


# exponent fit


@dataclass
class DivergenceVerdict:
    exponent: float
    ci: tuple
    expected: float
    verdict: str
    sign_constant: bool
    n_points: int
    tol: float = 0.05

    def to_json(self) -> dict:
        return {"exponent": self.exponent, "ci": list(self.ci), "verdict": self.verdict, "expected": self.expected}

    @property
    def passed(self) -> bool:
        return self.verdict in ("pass", "no-divergence")


def divergence_fit(res: ProbeResult, expected: float | None = None, tol: float = 0.05,
                   min_points: int = 8, ci_width_max: float = 0.2) -> DivergenceVerdict:
    """Least-squares slope of ``log|Re dF/ds|`` against ``log s`` over all valid secants."""
    expected = res.expected if expected is None else expected
    smid, dF = res.secants()
    y = np.abs(dF.real)
    good = np.isfinite(y) & (y > 0)
    if good.sum() < min_points:
        raise PreconditionError(f"exponent fit needs >= {min_points} valid points, got {int(good.sum())}")
    x, ly = np.log(smid[good]), np.log(y[good])
    fit = stats.linregress(x, ly)
    t = stats.t.ppf(0.975, len(x) - 2)
    ci = (float(fit.slope - t * fit.stderr), float(fit.slope + t * fit.stderr))
    tail = np.sign(dF.real[good][-min_points:])
    sign_const = bool(np.all(tail == tail[-1]) and tail[-1] != 0)
    slope = float(fit.slope)
    if expected > 0:
        # bounded F' approaches its limit like s^expected; judge the small-s tail only
        tail_slope = stats.linregress(x[-min_points:], ly[-min_points:]).slope
        verdict = "no-divergence" if tail_slope > -tol else "fail"
    elif ci[1] - ci[0] > ci_width_max:
        verdict = "inconclusive"
    elif abs(slope - expected) <= tol and sign_const:
        verdict = "pass"
    else:
        verdict = "fail"
    return DivergenceVerdict(slope, ci, float(expected), verdict, sign_const, int(len(x)), tol)
