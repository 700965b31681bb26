"""Acceptance suite: every criterion at its stated tolerance and full default size."""

import functools
import math
import time

import numpy as np
import pytest

from hardymult import serialize
from hardymult.verify import make_config, run_check

SEED = 7

# lemma ids exercised by each criterion
LEMMAS = {
    1: ["multiplier"], 2: ["fejer-identity"], 3: ["enl2"], 4: ["schodkapr"], 5: ["stein"],
    6: ["khintchine"], 7: ["atdec"], 8: ["transfer"], 9: ["discretization"],
    10: ["dyadicrbdd", "oldrev"], 11: ["2d"],
}
LIMITS = {1: 5, 2: 5, 3: 30, 4: 60, 5: 10, 6: 60, 7: 60, 8: 30, 9: 120, 10: 600, 11: 600}


@functools.lru_cache(maxsize=None)
def run(lemma: str, jobs: int = 1):
    t0 = time.perf_counter()
    rep = run_check(make_config(lemma, SEED, jobs=jobs))
    return rep, time.perf_counter() - t0, serialize.dumps(rep.to_json()).encode()


def timed(number):
    reps = [run(lemma) for lemma in LEMMAS[number]]
    return [r[0] for r in reps], sum(r[1] for r in reps)


def test_criterion_01_multiplier_characterization(criterion):
    (rep,), secs = timed(1)
    ok = rep.passed and rep.instances == 64 and rep.config_echo["n_max"] == 256
    ok &= rep.details["max_error"] <= 1e-12 and secs < LIMITS[1]
    criterion(1, ok, f"E*_N multiplier, n<=256 N<=64, max error {rep.details['max_error']:.2e}, "
                     f"{secs:.1f}s")
    assert ok


def test_criterion_02_fejer_identity(criterion):
    (rep,), secs = timed(2)
    ok = rep.passed and rep.instances == 1000 and rep.config_echo["degree_max"] == 128
    ok &= rep.config_echo["tol"] == 1e-12 and secs < LIMITS[2]
    criterion(2, ok, f"Fejer convolution identity, {rep.instances} polys, "
                     f"{rep.violations} violations, {secs:.1f}s")
    assert ok


def test_criterion_03_enl2(criterion):
    (rep,), secs = timed(3)
    ok = rep.passed and rep.instances >= 10_000 and rep.config_echo["n_max"] == 256
    ok &= secs < LIMITS[3]
    criterion(3, ok, f"shift-average L2 bound, {rep.instances} instances, "
                     f"{rep.violations} violations, worst {rep.worst_ratio:.4f}, {secs:.1f}s")
    assert ok


def test_criterion_04_schodkapr(criterion):
    (rep,), secs = timed(4)
    cfg = rep.config_echo
    ok = rep.passed and cfg["degree_max"] == 32 and cfg["grid"] == 1 << 14
    ok &= (cfg["n_min"], cfg["n_max"]) == (4, 256) and secs < LIMITS[4]
    criterion(4, ok, f"pointwise cell-mean bound, {rep.instances} instances, "
                     f"{rep.violations} violations, {secs:.1f}s")
    assert ok


def test_criterion_05_stein_constants(criterion):
    (rep,), secs = timed(5)
    exact = rep.details["exact"]
    ok = rep.passed and exact["violations"] == 0 and exact["instances"] > 0
    ok &= rep.config_echo["alphas"] == ["1/2", "1", "2", "4"] and rep.config_echo["length_max"] == 12
    ok &= rep.config_echo["identity_tol"] == 1e-10 and secs < LIMITS[5]
    criterion(5, ok, f"Stein constants of the block symbols, {exact['instances']} systems, "
                     f"{exact['violations']} violations, {secs:.1f}s")
    assert ok


def test_criterion_06_khintchine(criterion):
    (rep,), secs = timed(6)
    d = rep.details
    lo, hi = 1 / math.sqrt(2) - 1e-9, 1 + 1e-9
    ok = rep.passed and rep.instances == 1000 and rep.config_echo["n_max"] == 10
    ok &= lo <= d["min_bracket_ratio"] and d["max_bracket_ratio"] <= hi
    ok &= abs(d["constant_pair_ratio"] - 1 / math.sqrt(2)) <= 1e-12 and secs < LIMITS[6]
    criterion(6, ok, f"Khintchine bracket [{d['min_bracket_ratio']:.4f}, "
                     f"{d['max_bracket_ratio']:.4f}], constant pair "
                     f"{d['constant_pair_ratio']:.16f}, {secs:.1f}s")
    assert ok


def test_criterion_07_atomic_decomposition(criterion):
    (rep,), secs = timed(7)
    d = rep.details
    ok = rep.passed and rep.instances == 1000 and rep.config_echo["depth_max"] == 10
    ok &= d["max_reconstruction_error"] <= 1e-10 and d["batch_spread"] <= 0.10
    ok &= "C_dec" in d and max(d["batch_sup"]) <= d["C_dec"] and secs < LIMITS[7]
    criterion(7, ok, f"atomic decomposition, C_dec {d['C_dec']}, batch sups "
                     f"{d['batch_sup'][0]:.3f}/{d['batch_sup'][1]:.3f}, error "
                     f"{d['max_reconstruction_error']:.1e}, {secs:.1f}s")
    assert ok


def test_criterion_08_norm_transfer(criterion):
    (rep,), secs = timed(8)
    ok = rep.passed and rep.instances == 1000 and rep.config_echo["tol"] == 1e-12
    ok &= secs < LIMITS[8]
    criterion(8, ok, f"norm transfer through the Rademacher embedding, {rep.instances} families, "
                     f"{rep.violations} violations, {secs:.1f}s")
    assert ok


def test_criterion_09_discretization(criterion):
    (rep,), secs = timed(9)
    ok = rep.passed and rep.instances == 1000 and rep.config_echo["eps"] == [0.1, 0.25, 0.4]
    ok &= secs < LIMITS[9]
    criterion(9, ok, f"discretization, C_alpha used {rep.details['c_alpha_used']:.3f}, "
                     f"{rep.instances} instances, {rep.violations} violations, {secs:.1f}s")
    assert ok


def test_criterion_10_dyadic_and_oldrev(criterion):
    (dy, old), secs = timed(10)
    ok = True
    for rep in (dy, old):
        cfg = rep.config_echo
        ok &= rep.passed and rep.violations == 0
        ok &= cfg["instances"] == 1000 and cfg["search_starts"] == 50
        ok &= cfg["sizes_small"] == [2, 4] and cfg["sizes_large"] == [4, 8]
        ok &= rep.details["size_growth"] < 2.0
    ok &= dy.details["atoms"] > 0 and dy.details["atom_chain_failures"] == 0
    ok &= secs < LIMITS[10]
    criterion(10, ok, f"dyadic growth {dy.details['size_growth']:.3f}, atom chains "
                      f"{dy.details['atoms'] - dy.details['atom_chain_failures']}/"
                      f"{dy.details['atoms']}, oldrev growth {old.details['size_growth']:.3f} "
                      f"with reduction chain, {secs:.1f}s")
    assert ok


def test_criterion_11_idempotent_2d(criterion):
    (rep,), secs = timed(11)
    cfg = rep.config_echo
    ok = rep.passed and cfg["K"] == 3 and cfg["instances"] == 1000 and cfg["search_starts"] == 50
    ok &= rep.details["d"] == [2, 32, 1536] and rep.details["N"] == [2, 16, 512]
    ok &= math.isfinite(rep.estimated_constant) and rep.details["budget_growth"] < 2.0
    ok &= secs < LIMITS[11]
    criterion(11, ok, f"2D idempotent probe, sup {rep.estimated_constant:.4f}, budget growth "
                      f"{rep.details['budget_growth']:.3f}, {secs:.1f}s")
    assert ok


def test_criterion_12_determinism(criterion):
    mismatched = []
    for lemmas in LEMMAS.values():
        for lemma in lemmas:
            if run(lemma)[2] != run(lemma, jobs=8)[2]:
                mismatched.append(lemma)
    # a fresh rerun at jobs 1 as well
    rerun = serialize.dumps(run_check(make_config("enl2", SEED)).to_json()).encode()
    if rerun != run("enl2")[2]:
        mismatched.append("enl2 rerun")
    ok = not mismatched
    criterion(12, ok, "byte-identical reports at --jobs 1 and --jobs 8"
              + (f", mismatch in {mismatched}" if mismatched else ""))
    assert ok
