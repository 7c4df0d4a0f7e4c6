"""Acceptance run: one pass/fail line per criterion at the stated tolerances.

Every suite is run once with ``configs/default.json`` and cached for the module.
The lines are printed in the pytest terminal summary, and also when this file is
run as a script.
"""

import json
import math
import re
import sys
from pathlib import Path

import pytest

from stringphase import cli
from stringphase.suites import SuiteConfig, run_suite

pytestmark = pytest.mark.slow

CONFIG = Path(__file__).resolve().parents[1] / "configs" / "default.json"
_CACHE = {}


def report(name):
    if name not in _CACHE:
        _CACHE[name] = run_suite(SuiteConfig.load(CONFIG, name))
    return _CACHE[name]


def records(*suites):
    return [r for s in suites for r in report(s).records]


def named(recs, prefix):
    out = [r for r in recs if r.name.startswith(prefix)]
    assert out, f"no record named {prefix!r}"
    return out


def all_pass(recs):
    # negative controls carry passed=True exactly when they fail to converge
    return all(r.passed for r in recs)


def judge(log, k, title, checks, detail=""):
    """Log the line, then assert; ``checks`` maps a label to a bool."""
    bad = [label for label, ok in checks.items() if not ok]
    status = "PASS" if not bad else "FAIL"
    line = f"criterion {k} {status} {title}"
    if detail:
        line += f" [{detail}]"
    if bad:
        line += f" failed: {', '.join(bad)}"
    log.append(line)
    print(line)
    assert not bad, line


def test_c01_projector_algebra(acceptance_log):
    recs = records("projectors")
    worst = max(r.values["value"] for r in recs)
    judge(acceptance_log, 1, "projector algebra", {
        "all sheets below 1e-10": worst < 1e-10,
        "200 nodes per sheet": all(r.values["nodes"] == 200 for r in recs),
    }, f"{len(recs)} sheets, max {worst:.1e}")


def test_c02_adjusted_ricci(acceptance_log):
    recs = named(records("adjusted-ricci"), "adjusted Ricci")
    judge(acceptance_log, 2, "adjusted Ricci", {
        "levels 64/128/256": all(r.levels == [64, 128, 256] for r in recs),
        "converges": all_pass(recs),
        "finest below 1e-3": all(r.residuals[-1] < 1e-3 for r in recs),
        "scalar curvature oracle": all_pass(named(records("adjusted-ricci"), "scalar curvature")),
    }, f"finest max {max(r.residuals[-1] for r in recs):.1e}")


def test_c03_gauss_bonnet(acceptance_log):
    recs = records("gauss-bonnet")
    sphere = named(recs, "Gauss-Bonnet unit sphere")[0]
    i128 = sphere.values["integrals"][sphere.levels.index(128)]
    torus = named(recs, "Gauss-Bonnet flat torus")[0]
    deformed = named(recs, "Gauss-Bonnet deformed")
    judge(acceptance_log, 3, "Gauss-Bonnet", {
        "sphere within 0.1% at 128": abs(i128 - 8 * math.pi) < 1e-3 * 8 * math.pi,
        "torus below 1e-3 * 8 pi": abs(torus.values["integral"]) < 1e-3 * 8 * math.pi,
        "deformations within 0.2%": all(r.values["value"] < 2e-3 for r in deformed),
        "records pass": all_pass(recs),
    }, f"sphere rel {abs(i128 / (8 * math.pi) - 1):.1e}, "
       f"worst deformation {max(r.values['value'] for r in deformed):.1e}")


def _orders(recs):
    return ", ".join(f"{r.order:.2f}" for r in recs if r.order is not None)


def test_c04_divergence_identities(acceptance_log):
    recs = records("divergence")
    judge(acceptance_log, 4, "pure-divergence identities", {
        "three levels": all(len(r.levels) == 3 for r in recs),
        "order >= 1.8": all(r.order >= 1.8 for r in recs),
        "R and Omega present": bool(named(recs, "R = div")) and bool(named(recs, "Omega = div")),
    }, f"orders {_orders(recs)}")


def test_c05_palatini(acceptance_log):
    recs = records("palatini")
    rigid = named(recs, "Palatini rigid rotation")[0]
    conv = named(recs, "Palatini identity")
    judge(acceptance_log, 5, "Palatini-type identity", {
        "sphere and plane converge": all_pass(conv) and len(conv) == 2,
        "rigid rotation below 1e-12": rigid.values["value"] < 1e-12,
    }, f"orders {_orders(conv)}, rigid {rigid.values['value']:.1e}")


def test_c06_psi_agreement(acceptance_log):
    recs = records("psi-agreement")
    worst = max(r.values["value"] for r in recs)
    judge(acceptance_log, 6, "topological potential agreement", {
        "relative difference below 1e-6": worst < 1e-6,
        "fixed 128 grid": SuiteConfig.load(CONFIG, "psi-agreement").lv() == [128],
    }, f"max rel {worst:.1e}")


def test_c07_dng_dynamics(acceptance_log):
    dyn = named(records("dng-dynamics"), "DNG residual")
    cat = records("catenoid")
    area = named(cat, "catenoid area")[0]
    judge(acceptance_log, 7, "DNG dynamics and catenoid relaxation", {
        "rotating string and catenoid converge": all(r.order >= 1.8 for r in dyn),
        "area within 0.5%": area.values["value"] < 5e-3,
        "post-hoc residual": all_pass(named(cat, "relaxed catenoid DNG residual")),
        "other dynamics records": all_pass(records("dng-dynamics")),
    }, f"orders {_orders(dyn)}, area rel {area.values['value']:.1e}")


def test_c08_symplectic_current(acceptance_log):
    recs = records("conservation-dng")
    neg = [r for r in recs if r.negative_control]
    judge(acceptance_log, 8, "symplectic current", {
        "antisymmetry exact": named(recs, "current antisymmetry")[0].values["value"] == 0.0,
        "bilinearity": named(recs, "current bilinearity")[0].passed,
        "static string conservation": named(recs, "conservation static string")[0].order >= 1.8,
        "off-shell control does not converge": bool(neg) and all_pass(neg),
        "records pass": all_pass(recs),
    }, f"orders {_orders([r for r in recs if not r.negative_control])}")


def test_c09_slice_independence(acceptance_log):
    recs = records("slice-independence")
    sl = named(recs, "slice independence")
    judge(acceptance_log, 9, "slice independence", {
        "with and without topological weights": len(sl) >= 2 and all(r.values["value"] < 1e-3 for r in sl),
        "field equation bytes identical": named(recs, "field equation independent")[0].values["identical_bytes"],
    }, f"max rel {max(r.values['value'] for r in sl):.1e}")


def test_c10_nilpotency(acceptance_log):
    recs = records("nilpotency")
    pairs = [r for r in recs if "pairs" in r.values]
    judge(acceptance_log, 10, "nilpotency", {
        "20 tangent pairs": all(r.values["pairs"] == 20 for r in pairs) and len(pairs) == 3,
        "within 2x / 3x variation error": all_pass(recs),
    }, f"worst ratio {max(r.values.get('max_ratio_to_twice_error', 0) for r in recs):.1e}")


def test_c11_yang_mills(acceptance_log):
    recs = records("yang-mills")
    theta = named(recs, "theta term total derivative su2")[0]
    shift = named(recs, "theta term leaves")[0]
    pw = named(recs, "u(1) plane wave")[0]
    judge(acceptance_log, 11, "Yang-Mills", {
        "plane wave at N=256": pw.levels[-1] == 256 and pw.order >= 1.8,
        "current conservation": named(recs, "u(1) current conservation")[0].order >= 1.8,
        "theta total derivative on 24^4": theta.levels[-1] == 24 and theta.order >= 1.8,
        "theta shift vanishes, potential does not": shift.passed,
        "records pass": all_pass(recs),
    }, f"theta order {theta.order:.2f}, potential/eom "
       f"{shift.values['potential_change'][-1] / shift.residuals[-1]:.0f}")


def test_c12_linearized_gr(acceptance_log):
    recs = records("linearized-gr")
    judge(acceptance_log, 12, "linearised gravity", {
        "TT residual order": named(recs, "TT wave")[0].order >= 1.8,
        "current conservation order": named(recs, "TT pair current")[0].order >= 1.8,
        "equal pair exactly 0": named(recs, "equal-pair current")[0].values["value"] == 0.0,
        "records pass": all_pass(recs),
    }, f"orders {_orders([r for r in named(recs, 'TT') if not r.negative_control])}")


def _without_timestamp(path):
    return re.sub(rb'\n\s*"timestamp": "[^"]*",?\n', b"\n", path.read_bytes())


def test_c13_cli_determinism(acceptance_log, tmp_path):
    runs = []
    for tag in ("a", "b"):
        cli.main(["verify", "psi-agreement", "--config", str(CONFIG), "--out", str(tmp_path / tag),
                  "--format", "json"])
        runs.append(tmp_path / tag / "psi-agreement.json")
    a, b = (_without_timestamp(p) for p in runs)
    stamps = [json.loads(p.read_text())["timestamp"] for p in runs]
    judge(acceptance_log, 13, "CLI determinism", {
        "byte-identical without timestamp": a == b,
        "timestamp is the only field removed": b'"timestamp"' not in a,
    }, f"{len(a)} bytes compared, stamps {'differ' if stamps[0] != stamps[1] else 'equal'}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s"]))
