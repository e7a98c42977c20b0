from dataclasses import replace

import numpy as np
import pytest

from cascadesim.core import three_level, two_level
from cascadesim.diagram_integrals import DIAGRAM_TYPES, theta_recombination
from cascadesim.fields import Pulse
from cascadesim.presets import preset
from cascadesim.signals import (QuadratureError, Scenario, ScanSpec, SignalGrid, baseline_signal,
                                effective_field, evaluate, s1_vmi, s2_vmi_freq, s2_vmi_time,
                                s3_cascade, scaling_probe, vmi_signal)

X, Y, Z = (1.0, 0, 0), (0, 1.0, 0), (0, 0, 1.0)


def scenario(name):
    return replace(preset(name).scenario(), scan=None)


def dimer_s1(**kw):
    return replace(scenario("dimer_linear"), **kw)


def pulses_along_x(pol, drives=((0.0, 1.0), (3.0, 0.9)), det=(9.0, 1.9), width=3.0):
    out = [Pulse(t, w, width, k_direction=X, polarization=pol) for t, w in drives]
    return out + [Pulse(det[0], det[1], width, k_direction=X, polarization=pol, role="detection")]


def with_molecules(sc, make):
    return replace(sc, molecules=[make(m) for m in sc.molecules])


def as_two_level(m):
    return two_level(1.0, 0.15, position=m.position, tag=m.tag)


def only_pair(sc, a_tag, b_tag):
    # restrict the ordered-pair sum to a single (a, b)
    mols = {m.tag: m for m in sc.molecules}
    object.__setattr__(sc, "ordered_pairs", lambda: [(mols[a_tag], mols[b_tag])])
    return sc


# ---------------------------------------------------------------- selection rules

def test_two_level_second_order_vanishes():
    ref = scenario("ladder_s2")
    scale = max(abs(v[0]) for v in s2_vmi_freq(ref).terms.values())
    sc = with_molecules(ref, as_two_level)
    for grid in (s2_vmi_time(sc), s2_vmi_freq(sc)):
        assert abs(grid.values[0]) < 1e-14 * scale


def test_orthogonal_polarization_vanishes():
    # y polarization misses the z and x dipoles of every transition
    ref = scenario("ladder_s2")
    sc = replace(ref, pulses=pulses_along_x(Y))
    assert s2_vmi_time(sc).values[0] == 0
    assert s2_vmi_freq(sc).values[0] == 0
    lin = dimer_s1(pulses=[Pulse(0.0, 1.0, 4.0, k_direction=X, polarization=Y),
                           Pulse(10.0, 1.0, 4.0, k_direction=X, polarization=Y,
                                 role="detection")])
    assert s1_vmi(lin).values[0] == 0


# ---------------------------------------------------------------- baseline

def test_baseline_is_additive_in_molecules():
    sc = replace(scenario("ladder_s2"), vmi=False)
    doubled = replace(sc, molecules=list(sc.molecules)
                      + [m.moved(m.position, tag=m.tag + "2") for m in sc.molecules])
    for domain in ("time", "frequency"):
        one = baseline_signal(sc, domain).values[0]
        two = baseline_signal(doubled, domain).values[0]
        assert two == pytest.approx(2 * one, rel=1e-12)


def test_baseline_two_level_resonant_sign_is_positive():
    m = two_level(1.0, 0.1)
    sc = Scenario([m], pulses_along_x(Z, drives=((0.0, 1.0),), det=(0.0, 1.0), width=4.0),
                  order=1, vmi=False)
    grid = baseline_signal(sc)
    assert grid.values[0] > 0
    assert baseline_signal(sc, "time").values[0] == pytest.approx(grid.values[0], rel=1e-8)


def test_baseline_spectrally_disjoint_detection():
    m = two_level(1.0, 0.1)
    near = Scenario([m], pulses_along_x(Z, drives=((0.0, 1.0),), det=(0.0, 1.0), width=4.0),
                    order=1, vmi=False)
    far = Scenario([m], pulses_along_x(Z, drives=((0.0, 1.0),), det=(0.0, 5.0), width=4.0),
                   order=1, vmi=False)
    assert abs(baseline_signal(far).values[0]) < 1e-15 * abs(baseline_signal(near).values[0])


# ---------------------------------------------------------------- first order

def test_first_order_time_and_frequency_agree():
    sc = dimer_s1()
    f, t = s1_vmi(sc).values[0], s1_vmi(sc, domain="time").values[0]
    assert t == pytest.approx(f, rel=1e-6)


def test_far_separation_is_negligible():
    sc = dimer_s1()
    base = baseline_signal(replace(sc, vmi=False)).values[0]
    a, b = sc.molecules
    far = replace(sc, molecules=[a, b.moved((0, 0, 1000.0))])
    assert abs(s1_vmi(far).values[0]) < 1e-6 * abs(base)


def test_swapped_pairs_contribute_equally():
    sc = dimer_s1()
    ab = s1_vmi(only_pair(dimer_s1(), "a", "b")).values[0]
    ba = s1_vmi(only_pair(dimer_s1(), "b", "a")).values[0]
    assert ab == pytest.approx(ba, rel=1e-12)
    assert s1_vmi(sc).values[0] == pytest.approx(2 * ab, rel=1e-12)


def test_large_speed_of_light_matches_instantaneous_coupling():
    sc = replace(scenario("ladder_s2"), c=1e9)
    full = s2_vmi_time(sc).values[0]
    static = s2_vmi_time(replace(sc, kernel="static")).values[0]
    assert abs(full - static) < 1e-8 * abs(full)


# ---------------------------------------------------------------- second order

def test_second_order_time_and_frequency_agree_per_term():
    sc = scenario("ladder_s2")
    t, f = s2_vmi_time(sc), s2_vmi_freq(sc)
    assert set(t.terms) == {"b1", "b2", "b12"}
    for key in t.terms:
        assert t.terms[key][0] == pytest.approx(f.terms[key][0], rel=1e-5, abs=1e-6)


def test_global_time_translation_invariance():
    sc = scenario("ladder_s2")
    shifted = replace(sc, pulses=[p.replace(center_time=p.center_time + 7.3) for p in sc.pulses])
    for fn in (s2_vmi_time, s2_vmi_freq):
        assert fn(shifted).values[0] == pytest.approx(fn(sc).values[0], rel=1e-6)


def test_detection_far_from_any_combination():
    sc = scenario("ladder_s2")
    ref = max(abs(v[0]) for v in s2_vmi_freq(sc).terms.values())
    det = sc.detection.replace(center_frequency=6.0)
    far = replace(sc, pulses=list(sc.drives) + [det])
    assert abs(s2_vmi_freq(far).values[0]) < 1e-12 * ref


def test_rwa_keeps_resonant_branch_only():
    sc = scenario("ladder_s2")
    rwa = s2_vmi_freq(replace(sc, rwa=True)).values[0]
    full = s2_vmi_freq(sc).values[0]
    assert rwa != full
    assert abs(rwa - full) < 0.5 * abs(full)


def test_theta_recombination():
    res = theta_recombination(replace(scenario("ladder_s2"), kernel="static"))
    assert len(res["diagrams"]) == 2 * len(DIAGRAM_TYPES)
    assert abs(res["diagram_sum"] - res["compact"]) < 2e-6 * abs(res["compact"])
    both = res["diagrams"]["both_12"] + res["diagrams"]["both_21"]
    assert both == pytest.approx(res["compact_terms"]["b12"], rel=1e-6)


# ---------------------------------------------------------------- effective field

def test_effective_field_is_causal():
    sc = scenario("scramble_demo")
    p1 = sc.drives[0]
    t = np.array([p1.center_time - 10 * p1.width])
    assert np.linalg.norm(effective_field(sc, "b", 1, t)) < 1e-12


def test_effective_field_decays_at_dephasing_rate():
    sc = scenario("scramble_demo")
    t = np.linspace(15.0, 60.0, 46)
    amp = np.linalg.norm(effective_field(sc, "b", 1, t, zeta=1), axis=1)
    slope = np.polyfit(t, np.log(amp), 1)[0]
    assert -slope == pytest.approx(0.01, rel=0.02)


def test_effective_pair_field_vanishes_for_two_level_source():
    sc = with_molecules(scenario("ladder_s2"), as_two_level)
    t = np.linspace(0, 20, 11)
    assert np.abs(effective_field(sc, "b", (1, 2), t)).max() < 1e-14


def test_effective_field_target_required_for_many_molecules():
    sc = scenario("ladder_s2")
    extra = replace(sc, molecules=list(sc.molecules) + [sc.molecules[0].moved((3, 0, 0), "c")])
    with pytest.raises(ValueError, match="target"):
        effective_field(extra, "b", 1, [0.0])
    assert effective_field(extra, "b", 1, [5.0], target="a").shape == (1, 3)


# ---------------------------------------------------------------- third order

def test_third_order_cascade_vanishes_for_orthogonal_polarization():
    sc = scenario("cascade_s3")
    pulses = pulses_along_x(Y, drives=((0.0, 1.0), (4.0, 0.9), (8.0, 1.0)), det=(16.0, 1.1),
                            width=4.0)
    grid = s3_cascade(replace(sc, pulses=pulses), "time")
    assert grid.values[0] == 0
    assert set(grid.terms) == {"b12", "b13", "b23"}


def test_third_order_baseline_frequency_domain_refused():
    sc = replace(scenario("cascade_s3"), vmi=False)
    with pytest.raises(ValueError, match="time domain"):
        baseline_signal(sc, "frequency")


# ---------------------------------------------------------------- scaling

def _chain(N, unit_phases):
    cfg = preset("scaling")
    mols = [two_level(1.0, 0.1, position=(0, 0, float(i)), tag=f"m{i}") for i in range(N)]
    sc = cfg.scenario()
    return replace(sc, molecules=mols, unit_phases=unit_phases,
                   coupling_separation=(0.0, 0.0, 1.0) if unit_phases else None)


def test_scaling_counts_and_ratio():
    res = scaling_probe(lambda n: _chain(n, True), [2, 3, 4, 5])
    assert res["baseline_terms"] == [2, 3, 4, 5]
    assert res["pair_terms"] == [2, 6, 12, 20]
    vmi = np.asarray(res["vmi"])
    assert vmi[2] / vmi[0] == pytest.approx(6, rel=1e-10)
    assert vmi / vmi[0] == pytest.approx([1, 3, 6, 10], rel=1e-10)
    assert res["vmi_exponent"] > res["baseline_exponent"]


# ---------------------------------------------------------------- scenario / grid plumbing

def test_scan_grid():
    sc = replace(scenario("dimer_linear"), scan=ScanSpec.parse("omega_s=0.9:1.1:5"))
    grid = s1_vmi(sc)
    assert grid.axes[0][0] == "omega_s" and len(grid.values) == 5
    point = s1_vmi(replace(sc, scan=None,
                           pulses=[sc.drives[0], sc.detection.replace(center_frequency=1.0)]))
    assert grid.values[2] == point.values[0]


@pytest.mark.parametrize("text", ["omega_s=1:0:3", "phase=0:1:3"])
def test_bad_scan_rejected(text):
    with pytest.raises(ValueError):
        ScanSpec.parse(text)


def test_scenario_validation():
    sc = scenario("dimer_linear")
    with pytest.raises(ValueError, match="detection"):
        replace(sc, pulses=sc.drives)
    with pytest.raises(ValueError, match="unique"):
        replace(sc, molecules=[sc.molecules[0], sc.molecules[0]])
    with pytest.raises(ValueError, match="two molecules"):
        replace(sc, molecules=sc.molecules[:1])
    with pytest.raises(ValueError, match="coincide"):
        s1_vmi(replace(sc, molecules=[sc.molecules[0], sc.molecules[1].moved((0, 0, 0))]))


def test_signal_grid_requires_finite_values():
    with pytest.raises(ValueError):
        SignalGrid([], np.array([np.nan]))


def test_evaluation_is_deterministic():
    sc = scenario("ladder_s2")
    a, b = evaluate(sc), evaluate(sc)
    assert a.values.tobytes() == b.values.tobytes()
    assert a.metadata["digest"] == b.metadata["digest"]


def test_quadrature_error_names_term():
    sc = replace(scenario("ladder_s2"), tolerance=1e-15)
    with pytest.raises(QuadratureError) as info:
        vmi_signal(sc, domain="time")
    assert info.value.term
