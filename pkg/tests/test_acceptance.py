"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v`` or directly as
``python3 tests/test_acceptance.py``.
"""
from __future__ import annotations

import math
import sys
import time

import numpy as np
import pytest
from scipy.linalg import block_diag

from ossfield.covariance import (
    CovarianceModel,
    cov_oss_check,
    dom_symmetry_check,
    fbf_closed_form,
    hurst,
    ofbf_cov,
    ran_symmetry_check,
    square_grid,
)
from ossfield.exponents import (
    ExponentFamily,
    GroupSpec,
    decompose_field_exponent,
    exponent_family,
    family_invariants_check,
    haar_commuting_exponent,
    invariant_gaussian,
)
from ossfield.fieldsim import empirical_oss_test
from ossfield.matlin import commutator, mat_power
from ossfield.polar import PolarConfig, e_norm, polar_compose, polar_decompose
from ossfield.semistable import SemistableSpec, lattice_scaling_check, oss_failure_witness

J = np.array([[0.0, -1.0], [1.0, 0.0]])
I2 = np.eye(2)
GAMMA = 3.0
H_EXAMPLE = hurst(GAMMA)
MC_GRID = [[0.5, 0.0], [0.0, 0.5], [0.5, 0.5], [-0.3, 0.4]]


def _emit(request, number, ok, detail):
    line = f"[criterion {number:>2}] {'PASS' if ok else 'FAIL'}  {detail}"
    capman = request.config.pluginmanager.getplugin("capturemanager") if request is not None else None
    if capman is not None:
        with capman.global_and_fixture_disabled():
            print("\n" + line)
    else:
        print(line)
    return ok


# ---------------------------------------------------------------------------


def criterion_1():
    t0 = time.perf_counter()
    worst = {}
    G = square_grid(5)
    for gamma in (2.5, 3.0, 3.5):
        err = 0.0
        for s in G:
            for t in G:
                a = ofbf_cov(s, t, gamma)
                b = fbf_closed_form(s, t, gamma)
                scale = math.sqrt(fbf_closed_form(s, s, gamma)[0, 0] * fbf_closed_form(t, t, gamma)[0, 0])
                d = float(np.abs(a - b).max())
                err = max(err, d / scale if scale > 0 else d)
        worst[gamma] = err
    dt = time.perf_counter() - t0
    ok = max(worst.values()) <= 1e-3 and dt <= 60
    detail = ", ".join(f"gamma={g}: {e:.2e}" for g, e in worst.items())
    return ok, f"OFBF oracle max rel err {detail} (<= 1e-3); {dt:.1f}s (<= 60s)"


def criterion_2():
    t0 = time.perf_counter()
    model = CovarianceModel.ofbf(GAMMA)
    grid = square_grid(4)
    worst, failures = 0.0, 0
    for theta in (0.0, -1.0, -0.3, 0.3, 1.0):
        for c in (0.5, 2.0, 10.0):
            rep = cov_oss_check(model, I2, H_EXAMPLE * I2 + theta * J, c, grid, 1e-5)
            worst = max(worst, rep.max_rel_deviation)
            failures += not rep.passed
    dt = time.perf_counter() - t0
    ok = failures == 0 and dt <= 120
    return ok, f"scaling law over 15 (H, c) cases: max rel dev {worst:.2e} (<= 1e-5), {failures} failures; {dt:.1f}s (<= 120s)"


def criterion_3():
    rep = cov_oss_check(CovarianceModel.ofbf(GAMMA), I2, (H_EXAMPLE + 0.1) * I2, 2.0, square_grid(4), 1e-5)
    target = 2**0.2 - 1
    ok = (not rep.passed) and abs(rep.max_rel_deviation - target) <= 0.1 * target
    return ok, f"negative control rel dev {rep.max_rel_deviation:.6f} vs {target:.6f} (within 10%), passed={rep.passed}"


def criterion_4():
    model = CovarianceModel.ofbf(GAMMA)
    grid = square_grid(4)
    members = GroupSpec.orthogonal(2).samples(16)
    worst = 0.0
    ok = True
    for A in members:
        for fn in (dom_symmetry_check, ran_symmetry_check):
            rep = fn(model, A, grid, 1e-6)
            worst = max(worst, rep.max_rel_deviation)
            ok &= rep.passed
    rejected = []
    for D in (np.diag([2.0, 1.0]), np.diag([1.0, 2.0])):
        rejected.append(not dom_symmetry_check(model, D, grid, 1e-6).passed)
        rejected.append(not ran_symmetry_check(model, D, grid, 1e-6).passed)
    ok &= all(rejected)
    return ok, f"16 O(2) elements: max rel dev {worst:.2e} (<= 1e-6); diagonal non-symmetries rejected {sum(rejected)}/4"


def criterion_5():
    rng = np.random.default_rng(5)
    g = GroupSpec.orthogonal(2)
    samples = g.samples(64)
    dev = comm = 0.0
    for _ in range(20):
        H = rng.uniform(-3, 3, (2, 2))
        H0 = haar_commuting_exponent(H, g)
        dev = max(dev, float(np.linalg.norm(H0 - np.trace(H) / 2 * I2)))
        comm = max(comm, max(float(np.linalg.norm(commutator(H0, A))) for A in samples))
    ok = dev <= 1e-9 and comm <= 1e-9
    return ok, f"Haar O(2): max |H0 - tr(H)/2 I| {dev:.2e}, max commutator {comm:.2e} (both <= 1e-9)"


def criterion_6():
    rng = np.random.default_rng(6)
    reports = [family_invariants_check(exponent_family(H_EXAMPLE * I2, GroupSpec.orthogonal(2)), 50, 1e-8)]
    T = block_diag(J, [[0.0]])
    for _ in range(5):
        Q = rng.normal(size=(3, 3)) + 2 * np.eye(3)
        base = block_diag(rng.uniform(0.2, 2.0) * I2, [[rng.uniform(0.2, 2.0)]])
        reports.append(family_invariants_check(ExponentFamily(base, (T,)).conjugate(Q), 50, 1e-8, seed=int(rng.integers(1 << 30))))
    spec = max(r.max_spectrum_deviation for r in reports)
    nil = max(r.max_nilpotent_deviation for r in reports)
    ok = all(r.passed for r in reports) and spec <= 1e-8 and nil <= 1e-8
    return ok, f"{len(reports)} families x 50 members: spectrum dev {spec:.2e}, nilpotent dev {nil:.2e} (<= 1e-8)"


def criterion_7():
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    cfgs = [PolarConfig(np.eye(2)), PolarConfig(np.diag([1.0, 2.0])), PolarConfig(np.eye(2) + 0.4 * J)]
    rt = hom = sphere = 0.0
    for i in range(1000):
        cfg = cfgs[i % 3]
        x = rng.normal(size=2) * 10 ** rng.uniform(-3, 3)
        c = 10 ** rng.uniform(-2, 2)
        pc = polar_decompose(x, cfg)
        back = polar_compose(pc.radial, pc.directional, cfg)
        rt = max(rt, float(np.linalg.norm(back - x) / np.linalg.norm(x)))
        sphere = max(sphere, abs(e_norm(pc.directional, cfg) - 1.0))
        pc2 = polar_decompose(mat_power(cfg.exponent, c) @ x, cfg)
        hom = max(hom, abs(pc2.radial - c * pc.radial) / (c * pc.radial), float(np.linalg.norm(pc2.directional - pc.directional)))
    closed = polar_decompose(np.array([0.0, 4.0]), cfgs[1])
    cf = max(abs(closed.radial - math.sqrt(2.0)), float(np.abs(closed.directional - [0.0, 2.0]).max()))
    dt = time.perf_counter() - t0
    ok = rt <= 1e-8 and hom <= 1e-8 and sphere <= 1e-8 and cf <= 1e-8
    return ok, f"1000 polar cases: round-trip {rt:.2e}, homogeneity {hom:.2e}, |l|_0-1 {sphere:.2e}, closed form {cf:.2e} (<= 1e-8); {dt:.1f}s"


def criterion_8():
    rng = np.random.default_rng(8)
    spec_err = rec_err = inv_err = 0.0
    for _ in range(20):
        theta = rng.uniform(0.5, 3.0)
        D = np.diag(rng.uniform(0.3, 3.0, 2)) + np.triu(rng.uniform(-1, 1, (2, 2)), 1)
        Q = rng.normal(size=(4, 4)) + 3 * np.eye(4)
        H = Q @ block_diag(theta * J, D) @ np.linalg.inv(Q)
        sp = decompose_field_exponent(H)
        z = np.sort_complex(np.linalg.eigvals(sp.block_zero))
        p = np.sort(np.linalg.eigvals(sp.block_positive).real)
        spec_err = max(spec_err, float(np.abs(z - [-1j * theta, 1j * theta]).max()), float(np.abs(p - np.sort(np.diag(D))).max()))
        rec_err = max(rec_err, float(np.linalg.norm(sp.reconstruct() - H) / np.linalg.norm(H)))
        S = invariant_gaussian(sp.block_zero)
        for r in np.geomspace(1e-2, 1e2, 17):
            R = mat_power(sp.block_zero, r)
            inv_err = max(inv_err, float(np.linalg.norm(R @ S @ R.T - S) / np.linalg.norm(S)))
    ok = spec_err <= 1e-8 and rec_err <= 1e-8 and inv_err <= 1e-8
    return ok, f"20 conjugated splits: block spectra {spec_err:.2e}, reconstruction {rec_err:.2e}, invariance {inv_err:.2e} (<= 1e-8)"


def criterion_9():
    t0 = time.perf_counter()
    model = CovarianceModel.ofbf(GAMMA)
    h = H_EXAMPLE
    runs = {
        "hI": empirical_oss_test(model, I2, h * I2, 2.0, MC_GRID, N=100_000, seed=90),
        "hI+0.3J": empirical_oss_test(model, I2, h * I2 + 0.3 * J, 2.0, MC_GRID, N=100_000, seed=91),
        "0.8I": empirical_oss_test(model, I2, 0.8 * I2, 2.0, MC_GRID, N=100_000, seed=92),
    }
    dt = time.perf_counter() - t0
    ok = runs["hI"].passed and runs["hI+0.3J"].passed and not runs["0.8I"].passed and dt <= 300
    detail = ", ".join(f"{k}: dev {r.max_abs_deviation:.3f} / band {r.band:.3f}" for k, r in runs.items())
    return ok, f"Monte Carlo N=1e5: {detail}; {dt:.1f}s (<= 300s)"


def criterion_10():
    t0 = time.perf_counter()
    spec = SemistableSpec(b=4.0, c0=2.0, K=50)
    lat = lattice_scaling_check(spec, np.linspace(-10, 10, 101))
    wit = oss_failure_witness(spec, 1.5, np.linspace(0.1, 10, 100))
    dt = time.perf_counter() - t0
    ok = lat.passed and wit.max_deviation > 10 * wit.truncation_bound and dt <= 5
    return ok, (
        f"semistable: lattice residual {lat.max_residual:.2e} <= bound {lat.max_bound:.2e}; "
        f"witness {wit.max_deviation:.3f} = {wit.ratio:.1e} x bound; {dt:.2f}s (<= 5s)"
    )


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
            criterion_6, criterion_7, criterion_8, criterion_9, criterion_10]


@pytest.mark.parametrize("number", range(1, 11))
def test_criterion(number, request):
    ok, detail = CRITERIA[number - 1]()
    _emit(request, number, ok, detail)
    assert ok, detail


if __name__ == "__main__":
    results = []
    for n, fn in enumerate(CRITERIA, start=1):
        ok, detail = fn()
        results.append(_emit(None, n, ok, detail))
    print(f"{sum(results)}/{len(results)} criteria passed")
    sys.exit(0 if all(results) else 1)
