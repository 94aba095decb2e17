import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from leviprobe.errors import BranchCutError, ConfigError, PreconditionError, SingularityError
from leviprobe.group_action import ParametrizedFamily, heisenberg_family
from leviprobe.probe import (
    Kernel,
    ProbeConfig,
    ProbeResult,
    angular_factor,
    convolution_probe,
    divergence_fit,
    expected_exponent,
    radial_breakpoints,
    reference_integral,
    smoothstep5,
    sphere_area,
    sphere_rule,
    sup_QR,
    sup_theta,
    theta_diagnostic,
)

SHARP = Kernel(r2=1.0, r1=1.0)


def mp_reference(m, tau, s, upper=1.0):
    with mpmath.workdps(30):
        f = lambda r: r ** (m - 1) * (s + r * r) ** (-tau)
        q = mpmath.sqrt(s)
        pts = [0] + [p for p in (q / 4, q, 4 * q) if p < upper] + [upper]
        return float(mpmath.quad(f, pts))


# reference integral


def test_reference_examples():
    assert reference_integral(2, 1.0, 0.01) == pytest.approx(0.5 * math.log(101), rel=1e-12)
    assert reference_integral(1, 1.0, 1.0) == pytest.approx(math.pi / 4, rel=1e-12)
    assert reference_integral(1, 0.25, 0.0) == pytest.approx(2.0)
    assert reference_integral(2, 1.0, 0.0) == math.inf
    assert reference_integral(1, 0.75, 0.0) == math.inf


@pytest.mark.parametrize("m", [1, 2, 3, 4, 5])
@pytest.mark.parametrize("tau", [0.25, 0.5, 1.0, 1.3])
@pytest.mark.parametrize("s", [1e-6, 1e-3, 0.3, 2.0])
def test_reference_matches_quad(m, tau, s):
    assert reference_integral(m, tau, s) == pytest.approx(mp_reference(m, tau, s), rel=1e-9)


def test_reference_upper_scaling():
    assert reference_integral(3, 0.7, 0.01, upper=0.5) == pytest.approx(mp_reference(3, 0.7, 0.01, 0.5), rel=1e-9)


def test_reference_errors():
    with pytest.raises(ConfigError):
        reference_integral(0, 0.5, 0.1)
    with pytest.raises(ConfigError):
        reference_integral(2, 0.5, -1.0)


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 4), st.floats(0.05, 1.9), st.floats(1e-6, 1.0), st.floats(1e-6, 1.0))
def test_reference_monotone_in_s(m, tau, s1, s2):
    lo, hi = sorted((s1, s2))
    assert reference_integral(m, tau, lo) >= reference_integral(m, tau, hi) * (1 - 1e-12)


# kernel and rules


def test_kernel_cutoff():
    k = Kernel(r2=1.0, r1=0.5)
    assert k.chi(0.3) == 1.0 and k.chi(1.2) == 0.0
    assert 0 < k.chi(0.75) < 1
    assert SHARP.sharp and SHARP.chi(1.0) == 1.0 and SHARP.chi(1.0 + 1e-12) == 0.0
    assert smoothstep5(0.5) == pytest.approx(0.5)


def test_kernel_errors():
    with pytest.raises(ConfigError):
        Kernel(r2=1.0, r1=1.5)
    with pytest.raises(ConfigError):
        Kernel(delta="box")
    with pytest.raises(ConfigError):
        Kernel(delta="jet")


def test_tau_resolution():
    assert ProbeConfig().resolve_tau(1) == 0.25
    assert ProbeConfig().resolve_tau(3) == 1.0
    with pytest.raises(ConfigError):
        ProbeConfig(tau=1.0).resolve_tau(2)
    with pytest.raises(ConfigError):
        ProbeConfig(tau=0.0).resolve_tau(2)
    assert ProbeConfig(tau=1.0, override=True).resolve_tau(2) == 1.0


@pytest.mark.parametrize("m", [1, 2, 3, 4])
def test_sphere_rule(m):
    dirs, w = sphere_rule(m, 16)
    assert w.sum() == pytest.approx(sphere_area(m), rel=1e-12)
    assert np.allclose(np.linalg.norm(dirs, axis=1), 1.0)
    if m >= 2:
        # second moment of a coordinate is area / m
        assert np.sum(w * dirs[:, 0] ** 2) == pytest.approx(sphere_area(m) / m, rel=1e-12)


def test_breakpoints_octaves():
    b = radial_breakpoints(1e-4, 1.0, 0.4, 3)
    assert b[0] == 0 and b[-1] == 1.0 and 0.4 in b
    assert np.any(np.isclose(b, 0.01)) and np.any(np.isclose(b, 0.01 / 8))


# probe against the radial oracle


@pytest.mark.parametrize("m,tau", [(1, 0.25), (2, 0.5), (3, 1.0), (4, 1.5)])
def test_probe_matches_reference(m, tau):
    fam = heisenberg_family(m)
    s = np.array([0.1, 1e-3, 1e-6])
    res = convolution_probe(fam, None, ProbeConfig(tau=tau), SHARP, s_values=s)
    for si, Fi in zip(s, res.F):
        assert Fi.imag == pytest.approx(0.0, abs=1e-12)
        assert Fi.real == pytest.approx(sphere_area(m) * reference_integral(m, tau, si), rel=1e-9)
    assert not res.flagged.any()


def test_probe_csv_deterministic(tmp_path):
    fam = heisenberg_family(2)
    cfg = ProbeConfig(count=6)
    a = convolution_probe(fam, None, cfg, Kernel()).to_csv(tmp_path / "a.csv")
    b = convolution_probe(fam, None, cfg, Kernel()).to_csv()
    assert a == b == (tmp_path / "a.csv").read_text()
    assert a.splitlines()[0] == "s,re_F,im_F,quad_err,dF_ds,log_slope_partial"
    assert len(a.splitlines()) == 7


def test_probe_branch_cut():
    # Lambda = B - iA = -i at s = 0.25
    fam = ParametrizedFamily(1, 1, h=lambda xi: np.ones(xi.shape[:-1]), f=lambda h, z: np.full(h.shape, -0.25))
    with pytest.raises(BranchCutError):
        convolution_probe(fam, None, ProbeConfig(), Kernel(), s_values=[0.25])


# theta diagnostics


def test_theta_examples():
    fam = heisenberg_family(1)
    th, Q, R = theta_diagnostic(fam, None, 0.1, np.array([[0.3]]))
    assert th[0] == 0 and Q[0] == pytest.approx(1.0) and R[0] == 0
    assert sup_theta(fam, None, 0.5) == 0.0
    tilted = ParametrizedFamily(1, 1, h=lambda xi: 0.5 * xi[..., 0] ** 2)
    th, _, _ = theta_diagnostic(tilted, None, 0.0, np.array([[0.4]]))
    assert th[0] == pytest.approx(-0.5)
    qd, rd = sup_QR(tilted, None, 0.5)
    assert qd == pytest.approx(0.0, abs=1e-15) and rd == pytest.approx(0.5)


def test_theta_singular():
    fam = heisenberg_family(1)
    with pytest.raises(SingularityError):
        theta_diagnostic(fam, None, 0.0, np.array([[0.0]]))


def test_angular_factor_lower_bound():
    fam = ParametrizedFamily(2, 2, h=lambda xi: 0.3 * xi[..., 0] ** 3)
    for s, r in [(1e-4, 0.01), (1e-2, 0.3), (0.1, 0.9)]:
        val = angular_factor(fam, 0.5, s, r)
        assert val.real >= 0.5 * sphere_area(2)


# exponent fits


def _fit(m, tau, **kw):
    res = convolution_probe(heisenberg_family(m), None, ProbeConfig(tau=tau, **kw), Kernel())
    return divergence_fit(res)


@pytest.mark.parametrize("m,tau", [(1, 0.25), (2, 0.5), (3, 1.0)])
def test_fit_recovers_exponent(m, tau):
    v = _fit(m, tau)
    assert v.verdict == "pass"
    assert v.exponent == pytest.approx(expected_exponent(m, tau), abs=0.05)
    assert v.ci[0] < v.exponent < v.ci[1]


def test_fit_subcritical():
    v = _fit(3, 0.3)
    assert expected_exponent(3, 0.3) > 0
    assert v.verdict == "no-divergence" and v.passed


def test_fit_wrong_expectation_fails():
    res = convolution_probe(heisenberg_family(2), None, ProbeConfig(tau=0.5), Kernel())
    assert divergence_fit(res, expected=-0.2).verdict == "fail"


def test_fit_needs_points():
    res = convolution_probe(heisenberg_family(1), None, ProbeConfig(count=5), Kernel())
    with pytest.raises(PreconditionError):
        divergence_fit(res)


def test_fit_inconclusive_on_noise():
    rng = np.random.default_rng(3)
    s = 0.1 * 0.5 ** np.arange(20)
    F = rng.normal(size=20) * 1e-3 + 1j * 0
    res = ProbeResult(s, F, np.zeros(20), np.zeros(20, bool), 2, 0.5, -0.5, 1.0)
    assert divergence_fit(res).verdict in ("inconclusive", "fail")
