import json

import numpy as np
import pytest

from tetraspin.harness import (CHECKS, Report, SuiteConfig, dump_operator, load_operator, preset,
                               run_suite)
from tetraspin.reduction import build_reduced_r
from tetraspin.scalars import ResourceGuard
from tetraspin.spinrep import build_generators
from tetraspin.threed import ThreeDR

SCHEMA = {"suite", "version", "seed", "params", "records", "summary"}
RECORD = {"id", "anchor", "params", "residual", "threshold", "pass", "ms"}


def test_quick_preset_passes():
    rep = run_suite(preset("quick"))
    assert rep.ok and rep.summary["pass"] > 0
    data = rep.to_json()
    assert SCHEMA <= set(data)
    assert all(RECORD <= set(r) for r in data["records"])
    assert data["summary"]["pass"] == sum(r["pass"] is True for r in data["records"])


def test_record_pass_matches_threshold():
    rep = run_suite(preset("quick"))
    for r in rep.records:
        assert r.passed == (r.residual is not None and r.residual <= r.threshold)


def test_unknown_preset_and_keys():
    with pytest.raises(ValueError):
        preset("nope")
    with pytest.raises(ValueError):
        SuiteConfig.from_dict({"bogus": 1})


def test_empty_grid():
    rep = run_suite(SuiteConfig(name="empty", q=[], checks=[{"check": "golden"}]))
    assert rep.records == [] and rep.summary == {"pass": 0, "fail": 0, "skip": 0}


def test_invalid_grid_point_is_a_failed_record():
    rep = run_suite(SuiteConfig(q=[1.5], checks=[{"check": "golden"}]))
    assert rep.summary["fail"] == 1
    assert "OutOfRange" in rep.records[0].note


def test_near_unit_q_reports_tail_failure():
    rep = run_suite(SuiteConfig(q=[0.999], checks=[{"check": "golden"}]))
    assert not rep.ok
    assert any("TailWarning" in r.note for r in rep.records)


def test_resource_guard_aborts():
    with pytest.raises(ResourceGuard):
        run_suite(SuiteConfig(checks=[{"check": "ybe", "ranks": [5]}]))


def _strip_ms(text):
    data = json.loads(text)
    for r in data["records"]:
        r.pop("ms")
    return data


def test_deterministic_reports():
    cfg = SuiteConfig(checks=[{"check": "z", "kinds": ["zn"]}, {"check": "golden"}], seed=5)
    a, b = run_suite(cfg).render("json"), run_suite(cfg).render("json")
    assert _strip_ms(a) == _strip_ms(b)


@pytest.mark.parametrize("fmt", ["json", "csv", "text"])
def test_render_formats(fmt, tmp_path):
    rep = run_suite(SuiteConfig(checks=[{"check": "golden"}]))
    path = tmp_path / f"r.{fmt}"
    text = rep.write(path, fmt)
    assert path.read_text() == text and "golden" in text


def test_config_file_roundtrip(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"name": "f", "checks": [{"check": "selection", "n": 1}]}))
    rep = run_suite(SuiteConfig.load(path))
    assert rep.suite == "f" and rep.ok


def test_registry_covers_all_checks():
    assert {"involution", "adjoint", "tetra", "chi", "golden", "paths", "norms", "ybe",
            "intertwiner", "spectrum", "z", "stability", "selection"} <= set(CHECKS)


def test_dump_reduced_r_roundtrip(tmp_path, P):
    R = build_reduced_r(2, 1, 1, 0.3, P)
    path = dump_operator(R, tmp_path / "r.coo")
    header, mats = load_operator(path)
    assert header["q"] == 0.4 and header["x"] == 0.3 and header["s"] == 2
    assert mats["R"].shape == (4, 4) and np.array_equal(mats["R"], R.matrix)
    lines = [l for l in path.read_text().splitlines() if not l.startswith("#")]
    assert len(lines) == np.count_nonzero(R.matrix)


def test_dump_rank_two_is_16_by_16(tmp_path, P):
    R = build_reduced_r(2, 1, 2, 0.3, P)
    _, mats = load_operator(dump_operator(R, tmp_path / "r.coo"))
    assert mats["R"].shape == (16, 16) and np.array_equal(mats["R"], R.matrix)


def test_dump_threed_block_dense(tmp_path, P):
    R3 = ThreeDR(P)
    path = dump_operator((R3, 1, 1), tmp_path / "b.coo")
    header, mats = load_operator(path)
    assert np.array_equal(mats["block"].real, R3.block(1, 1))
    lines = [l for l in path.read_text().splitlines() if not l.startswith("#")]
    assert len(lines) == R3.block(1, 1).size


def test_dump_generators(tmp_path):
    g = build_generators(("B1", 2), 0.4)
    _, mats = load_operator(dump_operator(g, tmp_path / "g.coo"))
    assert np.array_equal(mats["X+_0"].real, g.xp[0])
    assert np.array_equal(np.diag(mats["H_2"]).real, g.h[2])


def test_report_summary_counts():
    rep = Report("s", 0, {})
    assert rep.summary == {"pass": 0, "fail": 0, "skip": 0} and rep.ok
