"""Exit criteria.  Each test prints one PASS/FAIL line (also collected in the
terminal summary) and asserts the criterion at its fixed tolerance."""

import math
import time
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from teqkd.adversary import AdversaryConfig, intercept
from teqkd.channel import reduce_time
from teqkd.cli import main
from teqkd.config import load
from teqkd.physics import DetectorSpec, SourceSpec, coincidence_probability, delay_distribution, sample_delay
from teqkd.simulation import run_trials, sweep
from teqkd.stats import detection_probability

from conftest import OMEGA_0, OMEGA_1, OMEGA_2, report
from test_physics import l1_histogram_distance

ROOT = Path(__file__).resolve().parents[1]
SCENARIOS = ROOT / "scenarios"


def test_criterion_1_delay_law_fidelity():
    start = time.perf_counter()
    details, ok = [], True
    for ga, gb in [(1e9, 1e9), (1e9, 1e2)]:
        dist = delay_distribution(DetectorSpec(OMEGA_1, ga), DetectorSpec(OMEGA_2, gb))
        x = sample_delay(dist, np.random.default_rng(101), size=1_000_000)
        l1 = l1_histogram_distance(dist, x, bins=200)
        expected_mean = (ga - gb) / (2 * ga * gb)
        z = abs(x.mean() - expected_mean) / math.sqrt(dist.variance / x.size)
        ok &= l1 < 0.01 and z < 3
        details.append(f"({ga:g},{gb:g}) L1={l1:.4f} mean z={z:.2f}")
    elapsed = time.perf_counter() - start
    ok &= elapsed < 10
    assert report(1, ok, "; ".join(details) + f"; {elapsed:.1f}s < 10s")


def test_criterion_2_narrow_and_wide_limits():
    source = SourceSpec(OMEGA_0)
    g = 1e2
    # Omega = 1e5 from two detectors both centred on omega_1
    a, b = DetectorSpec(OMEGA_1, g), DetectorSpec(OMEGA_1, g)
    omega = OMEGA_0 - 2 * OMEGA_1
    assert omega == 1e5
    p = coincidence_probability(a, b, source)
    # exact rational evaluation of the Lorentzian as the oracle
    w2 = Fraction(2 * g) ** 2
    exact = w2 / (Fraction(omega) ** 2 + w2)
    rel_lorentz = abs(Fraction(p) - exact) / exact
    rel_nominal = abs(p - 4e-6) / 4e-6

    dist = delay_distribution(DetectorSpec(OMEGA_0 / 2, 1e9), DetectorSpec(OMEGA_0 / 2, 1e9))
    t = sample_delay(dist, np.random.default_rng(202), size=100_000)
    q99 = float(np.quantile(np.abs(t), 0.99))

    ok = rel_lorentz < 1e-6 and q99 <= 3e-9
    assert report(
        2, ok,
        f"P={p:.9e} vs Lorentzian rel err {float(rel_lorentz):.1e} (<1e-6), "
        f"vs nominal 4e-6 rel {rel_nominal:.1e}; q99|T|={q99:.3e} s <= 3e-9 s",
    )


@pytest.mark.xfail(strict=True, reason="exact Lorentzian is 4e-6/(1+4e-6); literal 4e-6*(1±1e-6) band is too tight")
def test_criterion_2_literal_nominal_band():
    source = SourceSpec(OMEGA_0)
    p = coincidence_probability(DetectorSpec(OMEGA_1, 1e2), DetectorSpec(OMEGA_1, 1e2), source)
    assert abs(p - 4e-6) <= 4e-6 * 1e-6


def test_criterion_3_perfect_key_correlation():
    cfg = load(SCENARIOS / "baseline.cfg")
    assert not cfg.adversary.enabled
    start = time.perf_counter()
    trials = run_trials(cfg, 1000)
    elapsed = time.perf_counter() - start
    agree = sum(t.disagreements == 0 for t in trials)
    n_bits = sum(t.key_length for t in trials)
    ones = sum(t.key_ones for t in trials)
    bias_z = abs(ones / n_bits - 0.5) / math.sqrt(0.25 / n_bits)
    ok = agree == 1000 and bias_z < 3 and elapsed < 60
    assert report(3, ok, f"{agree}/1000 runs with bits_A == bits_B; {n_bits} bits, "
                         f"ones={ones / n_bits:.4f} (z={bias_z:.2f}); {elapsed:.1f}s < 60s")


def test_criterion_4_delay_arithmetic():
    cfg = AdversaryConfig.build(OMEGA_1, OMEGA_2, 1e5)
    rng = np.random.default_rng(404)
    n = 1_000_000
    total = 0.0
    for k in range(n):
        total += intercept(OMEGA_1 if k % 2 else OMEGA_2, cfg, rng).added_delay
    mean = total / n
    rel = abs(mean - 5e-6) / 5e-6
    km = reduce_time(1e-5, 3000.0, 3e8)
    ok = rel < 0.01 and km == 0.0
    assert report(4, ok, f"mean added delay {mean:.4e} s (rel err {rel:.2%} < 1%); "
                         f"reduce_time(1e-5 s, 3000 m, 3e8 m/s) = {km!r}")


def test_criterion_5_detection_power():
    cfg = load(SCENARIOS / "eavesdropper.cfg")
    assert (cfg.adversary.gamma_star, cfg.party_A.p_wide, cfg.n_rounds, cfg.threshold) == (1e5, 0.5, 200, 1e-8)
    start = time.perf_counter()
    on = detection_probability(cfg, n_trials=1000)
    off = detection_probability(cfg.honest, n_trials=1000)
    elapsed = time.perf_counter() - start
    ok = on.probability >= 0.999 and off.probability <= 1e-3 and elapsed < 300
    assert report(5, ok, f"detection {on.probability:.4f} >= 0.999; false positives "
                         f"{off.probability:.4f} <= 1e-3; {elapsed:.1f}s < 300s")


def test_criterion_6_more_wide_band_rounds_more_detection():
    cfg = load(SCENARIOS / "sweep_p_wide.cfg")
    assert cfg.sweep.values == (0.1, 0.3, 0.5, 0.7, 0.9) and cfg.n_rounds == 50
    rows = sweep(cfg)
    probs = [r.detection_probability for r in rows]
    ok = probs == sorted(probs) and probs[-1] >= 0.99
    assert report(6, ok, "detection vs p_wide: " + ", ".join(
        f"{r.value:g}->{r.detection_probability:.3f}" for r in rows))


def test_criterion_7_accuracy_delay_tradeoff():
    cfg = load(SCENARIOS / "sweep_gamma_star.cfg")
    rows = sweep(cfg)
    split = OMEGA_2 - OMEGA_1
    ok = True
    notes = []
    for r in rows:
        expected = 1 / (2 * r.value)
        # exponential delays: standard error of the mean is mean / sqrt(n)
        ok &= abs(r.eve_mean_delay - expected) < 3 * expected / math.sqrt(r.eve_resent)
        notes.append(f"{r.value:.0e}: acc={r.eve_accuracy:.3f} delay={r.eve_mean_delay:.3e}")
    beyond = [r for r in rows if r.value >= split]
    for lo, hi in zip(beyond, beyond[1:]):
        slack = 3 * math.hypot(lo.eve_accuracy_stderr, hi.eve_accuracy_stderr)
        ok &= hi.eve_accuracy <= lo.eve_accuracy + slack
    last = rows[-1]
    ok &= abs(last.eve_accuracy - 0.5) < 3 * last.eve_accuracy_stderr
    ok &= rows[0].eve_accuracy >= 0.99
    ok &= beyond[0].eve_accuracy - last.eve_accuracy > 0.15
    assert report(7, ok, "; ".join(notes))


def test_criterion_8_determinism(tmp_path):
    logs = []
    for d in ("first", "second"):
        out = tmp_path / d
        code = main(["run", str(SCENARIOS / "eavesdropper.cfg"), "--out", str(out), "--omniscient", "--quiet"])
        logs.append((out / "events.log").read_bytes())
    ok = logs[0] == logs[1] and code == 2 and len(logs[0]) > 0
    assert report(8, ok, f"two runs, events.log {len(logs[0])} bytes each, identical={logs[0] == logs[1]}")
