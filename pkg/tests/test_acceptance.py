"""End-to-end acceptance suite.

Each test prints a single PASS/FAIL line (bypassing capture) so the overall
verdict is readable from the raw run log, then asserts.
"""

import sys

import numpy as np
import pytest

from ncr import _kernel
from ncr.envelope import concave_envelope, convex_envelope
from ncr.flux import (
    ModelParams,
    flux_G,
    flux_G_deriv,
    marginal,
    special_points,
    theta_of_density,
)
from ncr.fvm import FvmConfig, fvm_solve
from ncr.riemann import (
    RiemannProblem,
    WaveKind,
    entropy_profile,
    entropy_solution,
    phase_diagram_grid,
    wave_structure,
)
from ncr.simulator import SimConfig, run

from oracles import conserved_integral_exact, discrete_hull, transition_probs

P08 = ModelParams.from_b(0.08)
P20 = ModelParams.from_b(0.2)
SP08 = special_points(P08)

# one representative Riemann problem per phase label at b = 0.08
SHOWCASE = [
    ("S", (0.15, -0.05)),
    ("R", (-0.1, 0.15)),
    ("RS", (-0.1, 0.9)),
    ("SR", (-0.9, 0.1)),
    ("RSR", (1.0, -1.0)),
    ("SRS", (-SP08.v_max, SP08.v_max)),
]


VERDICT_LINES = []


def verdict(num, desc, passed):
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {num:2d}: {desc}"
    VERDICT_LINES.append(line)
    print(line, file=sys.__stdout__, flush=True)
    assert passed, line


def test_criterion_01_flux_identities():
    ok = True
    for b in (0.02, 0.05, 0.08, 0.12, 0.15):
        p = ModelParams.from_b(b)
        sp = special_points(p)
        expect_max = (1 - 2 * b) ** 2 / (8 - 32 * b)
        ok &= abs(flux_G(0.0, p) - b) < 1e-12
        ok &= abs(flux_G(sp.v_max, p) - expect_max) < 1e-12
        ok &= abs(flux_G(-sp.v_max, p) - expect_max) < 1e-12
    verdict(1, "flux identities G(0)=b, G(+-v_max)=(1-2b)^2/(8-32b)", ok)


def test_criterion_02_convexity_threshold():
    v = np.linspace(-1, 1, 3000)
    ok = True
    for b in (1 / 6, 0.2, 0.25):
        ok &= np.max(flux_G_deriv(v, ModelParams.from_b(b), 2)) <= 1e-10
    vi = SP08.v_infl
    for a, b_, sign in [(-1 + 1e-9, -vi - 1e-9, -1.0),
                        (-vi + 1e-9, vi - 1e-9, 1.0),
                        (vi + 1e-9, 1 - 1e-9, -1.0)]:
        vals = flux_G_deriv(np.linspace(a, b_, 3000), P08, 2)
        ok &= bool(np.all(sign * vals > 0))
    verdict(2, "concavity for b >= 1/6 and -/+/- curvature pattern at b=0.08",
            ok)


def test_criterion_03_flux_from_measure():
    ok = True
    worst = 0.0
    for b in (0.02, 0.05, 0.08, 0.12, 0.15):
        p = ModelParams.from_b(b)
        for v in np.linspace(-0.999, 0.999, 1001):
            m = marginal(theta_of_density(v, p), p)
            assembled = (p.c * m.p_zero**2 + m.p_plus * m.p_minus
                         + 0.5 * m.p_zero * m.p_minus
                         + 0.5 * m.p_plus * m.p_zero)
            worst = max(worst, abs(assembled - flux_G(v, p)))
    ok = worst < 1e-13
    verdict(3, f"explicit flux matches measure assembly (max err {worst:.2e})",
            ok)


def test_criterion_04_phase_showcase():
    rsr = wave_structure(RiemannProblem(1.0, -1.0, P08))
    ok = rsr.label.value == "RSR"
    mid = rsr.waves[1]
    ok &= mid.kind is WaveKind.SHOCK and abs(mid.speed) < 1e-12
    ok &= abs((mid.left_density - mid.right_density) - 2 * SP08.v_max) < 1e-10
    srs = wave_structure(RiemannProblem(-SP08.v_max, SP08.v_max, P08))
    ok &= srs.label.value == "SRS"
    ok &= srs.waves[0].speed < 0 < srs.waves[2].speed
    verdict(4, "RSR zero-speed middle shock of jump 2*v_max; SRS with "
               "opposite-sign shocks", ok)


def test_criterion_05_diagram_dichotomy_and_symmetry():
    n = 201
    densities, labels = phase_diagram_grid(P20, n)
    ok = True
    for i in range(n):
        for j in range(n):
            if i == j:
                ok &= labels[i, j] == "NONE"
            else:
                ok &= labels[i, j] == ("S" if densities[i] < densities[j]
                                       else "R")
    _, labels8 = phase_diagram_grid(P08, n)
    ok &= set(np.unique(labels8)) == {"S", "R", "RS", "SR", "RSR", "SRS",
                                      "NONE"}
    for i in range(n):
        for j in range(n):
            mirrored = labels8[n - 1 - j, n - 1 - i]
            want = labels8[i, j] if labels8[i, j] == "NONE" \
                else labels8[i, j][::-1]
            ok &= mirrored == want
    verdict(5, "b=0.2 S/R dichotomy; b=0.08 all six labels with "
               "anti-diagonal reversal symmetry (201x201)", ok)


def test_criterion_06_entropy_solution_structure():
    rng = np.random.default_rng(2024)
    ok = True
    t = 1.0
    n_checked = 0
    for params in (P08, P20):
        while n_checked < (5000 if params is P08 else 10000):
            um, up = rng.uniform(-1, 1, 2)
            if abs(um - up) < 1e-3:
                continue
            n_checked += 1
            prob = RiemannProblem(float(um), float(up), params)
            ws = wave_structure(prob)
            for w in ws.waves:
                if w.kind is not WaveKind.SHOCK:
                    continue
                gl = flux_G(w.left_density, params)
                gr = flux_G(w.right_density, params)
                rh = (gl - gr) / (w.left_density - w.right_density)
                ok &= abs(w.speed - rh) < 1e-10
                mids = w.left_density + (w.right_density - w.left_density) \
                    * np.linspace(1e-4, 1 - 1e-4, 100)
                left_chord = (flux_G(mids, params) - gl) / (mids - w.left_density)
                right_chord = (flux_G(mids, params) - gr) / (mids - w.right_density)
                ok &= np.min(left_chord - w.speed) > -1e-9
                ok &= np.min(w.speed - right_chord) > -1e-9
            expect = t * (flux_G(um, params) - flux_G(up, params))
            ok &= abs(conserved_integral_exact(ws, t) - expect) < 1e-6
            if n_checked % 20 == 0:
                x = float(rng.uniform(-1.5, 1.5))
                tt = float(rng.uniform(0.2, 2.0))
                u = entropy_solution(prob, x, tt)
                ok &= entropy_solution(prob, 2 * x, 2 * tt) == u
                ok &= entropy_solution(prob, 0.5 * x, 0.5 * tt) == u
            if not ok:
                break
    verdict(6, "10^4 random problems: Rankine-Hugoniot 1e-10, Oleinik 1e-9, "
               "conservation 1e-6, dyadic self-similarity exact", ok)


def test_criterion_07_small_system_exactness():
    c, d, t = 0.3, 0.2, 0.5
    start = [1, 0, -1]
    replicas = 100_000
    _kernel.seed_rng(777)
    counts = np.zeros(27)
    bond_counts = np.zeros(2, dtype=np.int64)
    base = np.array(start, dtype=np.int8)
    for _ in range(replicas):
        sites = base.copy()
        _kernel.evolve(sites, c, d, 0.0, t, 0, 1, False, False, bond_counts)
        counts[int(np.dot(sites + 1, [1, 3, 9]))] += 1
    tv = 0.5 * np.abs(counts / replicas - transition_probs(3, c, d, t, start)).sum()
    verdict(7, f"3-site distribution vs matrix exponential, TV={tv:.4f} < 0.01",
            tv < 0.01)


def test_criterion_08_equilibrium_flux():
    ok = True
    details = []
    for rho in (-0.4, 0.0, 0.3):
        cfg = SimConfig(params=P08, N=500, t_end=5.0, u_minus=rho, u_plus=rho,
                        seed=8080, replicas=100, margin=0.0,
                        window=(-0.1, 0.1), bin_width=0.1)
        res = run(cfg)
        currents = res.origin_charge[:, -1] / (cfg.t_end * cfg.N)
        mean = currents.mean()
        sigma = currents.std(ddof=1) / np.sqrt(cfg.replicas)
        dev = abs(mean - flux_G(rho, P08)) / sigma
        details.append(f"rho={rho}: {dev:.2f} sigma")
        ok &= dev < 4.0
    verdict(8, "origin-bond current matches G(rho) within 4 sigma ("
               + ", ".join(details) + ")", ok)


def test_criterion_09_hydrodynamic_convergence():
    prob = RiemannProblem(1.0, -1.0, P08)
    l1 = {}
    for N in (250, 500, 1000, 2000):
        cfg = SimConfig(params=P08, N=N, t_end=1.0, u_minus=1.0, u_plus=-1.0,
                        seed=909, replicas=100, window=(-1.0, 1.0),
                        bin_width=0.05)
        res = run(cfg)
        prof = res.profiles[-1]
        exact = entropy_profile(prob, prof.bin_centers, 1.0)
        l1[N] = float(np.sum(np.abs(prof.densities - exact)) * cfg.bin_width)
    ok = all(l1[b] < l1[a] * 1.10
             for a, b in [(250, 500), (500, 1000), (1000, 2000)])
    ok &= l1[2000] < 0.05
    verdict(9, "RSR profile L1 decreases along N=250..2000 "
               f"({', '.join(f'{n}:{l1[n]:.4f}' for n in sorted(l1))}), "
               "final < 0.05", ok)


def test_criterion_10_fvm_oracle():
    ok = True
    mean_l1 = {}
    for cells in (1000, 2000, 4000):
        dists = []
        for _, (um, up) in SHOWCASE:
            cfg = FvmConfig(cell_count=cells, domain_halfwidth=1.5, t_end=1.0,
                            params=P08, u_minus=um, u_plus=up)
            x, u = fvm_solve(cfg)
            exact = entropy_profile(RiemannProblem(um, up, P08), x, 1.0)
            dists.append(np.sum(np.abs(u - exact)) * (x[1] - x[0]))
        mean_l1[cells] = float(np.mean(dists))
        if cells == 4000:
            ok &= max(dists) < 0.02
    # per-step ratios oscillate with shock/grid alignment; the mean reduction
    # factor per doubling over the 1000 -> 4000 sequence is the stable
    # first-order-convergence measure
    ratio = float(np.sqrt(mean_l1[1000] / mean_l1[4000]))
    ok &= 1.6 <= ratio <= 2.4
    verdict(10, "FVM vs closed form: six showcases L1 < 0.02 at 4000 cells; "
                f"mean L1 reduction per cell doubling {ratio:.2f} in "
                "[1.6, 2.4]", ok)


def test_criterion_11_envelope_ground_truth():
    rng = np.random.default_rng(1111)
    worst = 0.0
    done = 0
    while done < 200:
        lo, hi = np.sort(rng.uniform(-1, 1, 2))
        if hi - lo < 1e-3:
            continue
        done += 1
        for build, concave in ((concave_envelope, True),
                               (convex_envelope, False)):
            env = build(float(lo), float(hi), P08)
            xs, hull = discrete_hull(lo, hi, P08, concave=concave)
            worst = max(worst, float(np.max(np.abs(env.value(xs) - hull))))
    verdict(11, f"analytic envelopes vs 4001-point hull oracle, sup error "
                f"{worst:.2e} < 2e-6 on 200 random intervals", worst < 2e-6)
