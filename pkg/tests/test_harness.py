import json
import math

import numpy as np
import pytest

from leviprobe.config import ScenarioConfig, complex_from_json, complex_to_json
from leviprobe.errors import ConfigError, InvalidSubgroupError, PreconditionError
from leviprobe.group_action import cg_locus, check_tangency, cylinder_phic
from leviprobe.harness import (
    REPORT_VERSION,
    RunReport,
    build_geometry,
    cylinder_locus_point,
    make_hhk_cylinder,
    make_perturbed_siegel,
    make_siegel_scenario,
    run_builtin,
    run_scenario,
)
from leviprobe.hypersurface import cylinder
from leviprobe.jetcalc import Jet


def fast(cfg):
    return cfg.with_overrides(probe_count=12)


# builders


def test_siegel_builder():
    cfg = make_siegel_scenario(1)
    assert cfg.probe.resolve_tau(1) == 0.25
    assert cfg.group["builtin"] == "heisenberg-subgroup"
    cfg = make_siegel_scenario(2, [[1, 1j]])
    assert np.allclose(complex_from_json(cfg.group["basis"]), [[1, 1j]])
    with pytest.raises(InvalidSubgroupError):
        make_siegel_scenario(2, [[1, 0], [1j, 0]])


def test_cylinder_builder_locus():
    cfg = make_hhk_cylinder(1.0, 0.1)
    y0, y1 = cfg.base_point[1], cfg.base_point[3]
    assert y0 == pytest.approx(0.1 / math.sqrt(2)) and y1 == pytest.approx(-0.1 / math.sqrt(2))
    p = make_hhk_cylinder(0.0, 0.1).base_point
    assert p[3] == 0 and p[1] == pytest.approx(0.1)
    with pytest.raises(ConfigError):
        make_hhk_cylinder(1.0, 0.6)


def test_perturbed_builder():
    xi = Jet.var(0, 1, 4)
    cfg = make_perturbed_siegel(xi ** 3 * 0.2)
    assert cfg.expected["order3"] is True
    with pytest.raises(PreconditionError):
        make_perturbed_siegel(xi * xi)
    cfg = make_perturbed_siegel(xi * xi, allow_violation=True)
    assert cfg.expected["order3"] is False


# config


def test_config_roundtrip(tmp_path):
    cfg = make_hhk_cylinder(2.0, 0.1, out_dir=str(tmp_path))
    path = tmp_path / "c.json"
    cfg.save(path)
    back = ScenarioConfig.load(path)
    assert back.to_dict() == cfg.to_dict()


def test_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        ScenarioConfig(randomized=True)
    with pytest.raises(ConfigError):
        ScenarioConfig(geometry={"builtin": "torus"})
    with pytest.raises(ConfigError):
        ScenarioConfig(geometry={"rho_file": "missing.jet", "n": 1})
    with pytest.raises(ConfigError):
        ScenarioConfig.from_dict({"nonsense": 1})
    with pytest.raises(ConfigError):
        ScenarioConfig(probe={"tau": 0.5, "bogus": 1})
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    with pytest.raises(ConfigError):
        ScenarioConfig.load(bad)
    with pytest.raises(ConfigError):
        ScenarioConfig.load(tmp_path / "absent.json")
    with pytest.raises(ConfigError):
        run_scenario(ScenarioConfig())


def test_rho_file_resolved_relative(tmp_path):
    (tmp_path / "rho.jet").write_text("0 0 2 0 : 1\n0 0 0 2 : 1\n0 1 0 0 : -1\n")
    (tmp_path / "s.json").write_text(json.dumps({
        "geometry": {"rho_file": "rho.jet", "n": 1},
        "group": {"builtin": "heisenberg-subgroup"},
    }))
    cfg = ScenarioConfig.load(tmp_path / "s.json")
    assert build_geometry(cfg).value([0, 1.0, 1.0, 0]) == pytest.approx(0.0)


def test_complex_json():
    z = np.array([[1 + 2j, -1j]])
    assert np.array_equal(complex_from_json(complex_to_json(z)), z)


# pipeline


def test_siegel_pipeline():
    rep = run_scenario(make_siegel_scenario(2))
    assert rep.verdict == "pass" and rep.exit_code == 0
    assert all(rep.status(k) == "pass" for k in ("pseudoconvex", "tangency", "totally_real", "order3", "support"))
    assert rep.fit["exponent"] == pytest.approx(-0.5, abs=0.05)
    assert rep.report_version == REPORT_VERSION
    assert rep.config["geometry"]["builtin"] == "siegel"


def test_off_locus_skips_probe():
    rep = run_scenario(make_hhk_cylinder(1.0, 0.1, offset=0.3))
    assert rep.status("tangency") == "fail"
    assert rep.status("probe") == "skipped" and rep.status("fit") == "skipped"
    assert rep.exit_code == 1 and not rep.override_checks


def test_override_runs_probe_and_is_echoed():
    rep = run_scenario(fast(make_hhk_cylinder(1.0, 0.1, offset=0.3)).with_overrides(override_checks=True))
    assert rep.status("tangency") == "fail"
    assert rep.status("probe") == "pass"
    assert rep.override_checks and rep.config["override_checks"]
    assert "override_checks: on" in rep.summary()


def test_low_degree_is_insufficient():
    rep = run_scenario(make_siegel_scenario(1, degree=2))
    assert rep.stage("order3").code == "INSUFFICIENT_DEGREE"
    assert rep.status("probe") == "skipped"
    assert rep.exit_code == 1


def test_planted_violation_probe_allowed():
    xi = Jet.var(0, 1, 4)
    rep = run_scenario(fast(make_perturbed_siegel(xi * xi, allow_violation=True)))
    assert rep.status("order3") == "fail"
    assert rep.status("probe") == "pass"
    assert rep.exit_code == 1


def test_tail_scenario_passes():
    z = [Jet.var(k, 4, 4) for k in (2, 3)]
    tail = (z[0] * z[0] + z[1] * z[1]) ** 2 * 0.1
    rep = run_scenario(make_perturbed_siegel(Jet.var(0, 1, 4) ** 3 * 0.2, tail=tail))
    assert rep.status("support") == "pass" and rep.status("order3") == "pass"
    assert rep.fit["verdict"] == "pass"


def test_bad_tau_is_usage_error():
    rep = run_scenario(make_siegel_scenario(2).with_overrides(probe_tau=1.5))
    assert rep.exit_code == 2


def test_inconclusive_exit_code():
    # an unreachable rtol leaves every point flagged
    cfg = fast(make_siegel_scenario(1)).with_overrides(probe_rtol=1e-300, probe_max_refine=1)
    rep = run_scenario(cfg)
    assert rep.verdict == "inconclusive" and rep.exit_code == 3


def test_artifacts_and_determinism(tmp_path):
    cfg = fast(make_hhk_cylinder(2.0, 0.1)).with_overrides(out_dir=str(tmp_path / "a"))
    rep = run_scenario(cfg)
    paths = cfg.output_paths()
    assert set(rep.artifacts) == {"csv", "fit", "report"}
    first = paths["csv"].read_bytes()
    again = ScenarioConfig.from_dict(rep.config).with_overrides(out_dir=str(tmp_path / "b"))
    run_scenario(again)
    assert again.output_paths()["csv"].read_bytes() == first
    loaded = RunReport.load(paths["report"])
    assert loaded.verdict == rep.verdict and loaded.fit == json.loads(paths["fit"].read_text())


def test_report_load_rejects_other_json(tmp_path):
    p = tmp_path / "x.json"
    p.write_text("{}")
    with pytest.raises(ConfigError):
        RunReport.load(p)


def test_run_builtin_unknown():
    with pytest.raises(ConfigError):
        run_builtin("torus")


@pytest.mark.parametrize("c", np.linspace(-2, 2, 20))
def test_cylinder_cross_validation(c):
    eps = 0.1
    phi = Jet.var(1, 4) ** 2 + Jet.var(3, 4) ** 2
    locus = cg_locus(phi, cylinder_phic(c)).normalized[0]
    df = cylinder(eps)
    for offset in (0.0, 0.4):
        p = cylinder_locus_point(c, eps, offset)
        on = abs(locus.evaluate(p)) <= 1e-12
        assert on == (offset == 0.0)
        assert check_tangency(cylinder_phic(c), df, p).passed == on
    rep = run_scenario(make_hhk_cylinder(c, eps), stop_after="cg_locus")
    assert rep.status("cg_locus") == "pass" and rep.status("tangency") == "pass"
