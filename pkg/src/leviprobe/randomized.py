"""Seeded random scenarios: tangent group actions, perturbed Siegel families and adapted coordinate changes.

Every generator takes an explicit seed (or ``numpy.random.Generator``) and
returns plain data, so a draw can be frozen into a :class:`ScenarioConfig`.
"""

from __future__ import annotations

import itertools

import numpy as np

from .config import ScenarioConfig, complex_to_json
from .hypersurface import DefiningFunction, GraphForm, adapt_coordinates, check_strict_pseudoconvexity, graph_form
from .jetcalc import ComplexJet, Jet, complex_coords, format_jet, jet_compose, jet_inverse_map, split_complex
from .group_action import OrbitChart, _to_chart

PD_FLOOR = 0.05


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def random_hermitian_pd(rng, n: int, floor: float = 0.3) -> np.ndarray:
    X = rng.uniform(-0.5, 0.5, (n, n)) + 1j * rng.uniform(-0.5, 0.5, (n, n))
    return X @ X.conj().T + floor * np.eye(n)


def _monomials(variables, degree):
    for combo in itertools.combinations_with_replacement(variables, degree):
        yield combo


def _monomial(nvars, combo, D):
    mi = [0] * nvars
    for v in combo:
        mi[v] += 1
    return tuple(mi)


def _random_polynomial(rng, nvars, variables, degrees, amp, D, density=0.5) -> Jet:
    terms = {}
    for k in degrees:
        for combo in _monomials(variables, k):
            if rng.random() < density:
                terms[_monomial(nvars, combo, D)] = float(rng.uniform(-amp, amp))
    return Jet(nvars, D, terms)


def _random_holomorphic_change(rng, N: int, D: int, linear_amp=0.3, quad_amp=0.2, adapted=False) -> list[Jet]:
    """Real components of ``z = B w + Q(w)`` with ``Q`` quadratic holomorphic.

    ``adapted`` keeps ``z0 = r w0 + O(2)`` with ``r > 0``, so ``{Im z0 = 0}`` is preserved to first order.
    """
    w = complex_coords(N, D)
    B = np.eye(N, dtype=complex) + linear_amp * (rng.uniform(-1, 1, (N, N)) + 1j * rng.uniform(-1, 1, (N, N)))
    if adapted:
        B[0, :] = 0.0
        B[0, 0] = rng.uniform(0.5, 2.0)
    out = []
    for i in range(N):
        zi = ComplexJet.zero(2 * N, D)
        for k in range(N):
            if B[i, k] != 0:
                zi = zi + w[k] * complex(B[i, k])
        for a, b in _monomials(range(N), 2):
            q = complex(rng.uniform(-quad_amp, quad_amp), rng.uniform(-quad_amp, quad_amp))
            zi = zi + w[a] * w[b] * q
        out.append(zi)
    return split_complex(out)


def random_tangent_jets(seed, n: int, m: int, degree: int = 4, max_tries: int = 50):
    """Strongly pseudoconvex ``rho`` and ``m`` commuting fields tangent to ``bM`` with a totally real orbit.

    Built in straightened coordinates ``w``, where ``bM = {Im w0 = f}`` with
    ``f`` independent of ``Re w_1..Re w_m`` and the fields are ``d/d Re w_j``,
    then pushed through a random holomorphic change ``z = Psi(w)``.
    Returns ``(rho, generators)`` as jets in the ambient variables of ``z``.
    """
    if not 1 <= m <= n:
        raise ValueError("need 1 <= m <= n")
    rng = _rng(seed)
    N, D = n + 1, degree
    nv = 2 * N
    excluded = {2 * j for j in range(1, m + 1)}
    allowed = [v for v in range(nv) if v != 1 and v not in excluded]
    for _ in range(max_tries):
        f = _random_polynomial(rng, nv, allowed, (2,), 0.5, D, density=0.6)
        L = random_hermitian_pd(rng, n)
        # Hermitian part sum L_jk conj(w_j) w_k restricted to the allowed variables
        wj = complex_coords(N, D)
        herm = ComplexJet.zero(nv, D)
        for j in range(n):
            for k in range(n):
                herm = herm + wj[j + 1].conj() * wj[k + 1] * complex(L[j, k])
        herm_re = herm.re
        keep = {mi: c for mi, c in herm_re.terms() if not any(mi[v] for v in excluded)}
        f = f + Jet(nv, D, keep) + _random_polynomial(rng, nv, allowed, (3, 4), 0.3, D, density=0.3)
        rho0 = f - Jet.var(1, nv, D)
        df0 = DefiningFunction.from_polynomial(rho0, n)
        gf0 = graph_form(df0, adapt_coordinates(df0))
        if check_strict_pseudoconvexity(gf0).min_eigenvalue > PD_FLOOR:
            break
    else:
        raise RuntimeError("could not draw a strongly pseudoconvex scenario")
    Psi = _random_holomorphic_change(rng, N, D)
    Psi_inv = jet_inverse_map(Psi)
    rho = jet_compose(rho0, Psi_inv)
    gens = []
    for j in range(1, m + 1):
        gens.append([jet_compose(c.deriv(2 * j), Psi_inv) for c in Psi])
    return rho, gens


def random_tangent_scenario(seed: int, n: int, m: int, degree: int = 4) -> ScenarioConfig:
    rho, gens = random_tangent_jets(seed, n, m, degree)
    return ScenarioConfig(
        name=f"random-tangent-n{n}-m{m}-seed{seed}",
        geometry={"rho": format_jet(rho), "n": n},
        group={"generators": [[format_jet(c) for c in g] for g in gens], "commuting": True},
        degree=degree,
        seed=seed,
        randomized=True,
    )


def random_adapted_change(seed, n: int, degree: int = 4) -> list[Jet]:
    """Holomorphic ``u = Psi(u')`` fixing 0 whose differential keeps ``{Im u0 = 0}`` tangent."""
    return _random_holomorphic_change(_rng(seed), n + 1, degree, adapted=True)


def change_coordinates(gf: GraphForm, P: list[Jet], Psi: list[Jet]) -> tuple[GraphForm, OrbitChart]:
    """Rewrite boundary and parametrized manifold in the coordinates ``u'`` with ``u = Psi(u')``.

    ``gf`` and ``P`` live in one adapted chart; the result is re-adapted and
    returned as a graph form with the orbit chart of the transformed manifold.
    """
    D = min(gf.rho_chart.degree, min(c.degree for c in P))
    rho_new = jet_compose(gf.rho_chart.with_degree(D), [c.with_degree(D) for c in Psi])
    Psi_inv = jet_inverse_map([c.with_degree(D) for c in Psi])
    P_new = [jet_compose(c, [p.with_degree(D) for p in P]) for c in Psi_inv]
    df = DefiningFunction(rho_new, gf.n, None, -1, "changed", exact_polynomial=False)
    chart = adapt_coordinates(df)
    gf_new = graph_form(df, chart)
    return gf_new, OrbitChart.from_param(_to_chart(chart, P_new), gf_new)


def random_perturbation(seed, m: int, n: int | None = None, amplitude: float = 0.3,
                        cubic_amplitude: float = 0.3, order2: float = 0.0) -> dict:
    """Planted-family block: cubic ``h``, affine ``a``, ``b`` and linear ``c`` of size ``<= amplitude`` on the unit ball.

    ``order2`` plants a quadratic ``order2 * xi_1^2`` in ``h``.
    """
    rng = _rng(seed)
    n = m if n is None else n
    terms = {}
    for combo in _monomials(range(m), 3):
        terms[_monomial(m, combo, 3)] = float(rng.uniform(-cubic_amplitude, cubic_amplitude))
    if order2:
        terms[tuple([2] + [0] * (m - 1))] = float(order2)
    h = Jet(m, 4, terms)
    # |a0| + ||A1|| <= amplitude for |xi| <= 1
    def affine():
        v = rng.normal(size=m)
        M = rng.normal(size=(m, m))
        v *= 0.5 * amplitude / np.linalg.norm(v)
        M *= 0.5 * amplitude / np.linalg.norm(M, 2)
        return {"const": v.tolist(), "linear": M.tolist()}
    C = rng.normal(size=(n, m)) + 1j * rng.normal(size=(n, m))
    C *= amplitude / np.linalg.norm(C, 2)
    return {"m": m, "h": format_jet(h), "a": affine(), "b": affine(), "c": complex_to_json(C),
            "allow_violation": bool(order2)}
