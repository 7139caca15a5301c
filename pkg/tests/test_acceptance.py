"""Acceptance criteria, one test each, at their stated tolerances.

Every test records a PASS/FAIL line that is repeated in the pytest summary.
"""

import math
import time

import numpy as np
import pytest
from scipy.linalg import expm as scipy_expm

from digrowth.analysis import entry_growth, log_perron_root, longrun_lyapunov, lyapunov, monodromy, simulate, threshold_search
from digrowth.bounds import H, circuit_bound, path_bound, path_constants
from digrowth.circuits import parse_circuit
from digrowth.config import load_network
from digrowth.linalg import propagate
from digrowth.network import SystemParams
from digrowth.stochastic import DurationDistribution, simulate_random

from conftest import chain_network, ode_oracle, random_schedule, record_criterion, rotating_chain

pytestmark = pytest.mark.acceptance

FIXTURES = ("section33", "birds_source", "section44", "e33")
RED = "|1->3||3->1->2||2->3->1|"


def test_criterion_01_positivity_and_comparison():
    rng = np.random.default_rng(101)
    start = time.perf_counter()
    worst_pos, worst_cmp = 0.0, 0.0
    for _ in range(500):
        n = int(rng.integers(1, 7))
        p = int(rng.integers(1, 5))
        schedule = random_schedule(rng, n, p)
        x0 = rng.uniform(0.0, 1.0, n) * (rng.random(n) < 0.8)
        x = propagate(schedule, x0)
        scale = max(1.0, float(np.abs(x).max()))
        worst_pos = max(worst_pos, float(-x.min()) / scale)
        # A dominating system from a dominating start stays on top.
        bigger = [(d, A + rng.uniform(0.0, 0.5, (n, n)) * (rng.random((n, n)) < 0.5)) for d, A in schedule]
        y = propagate(bigger, x0 + rng.uniform(0.0, 0.5, n))
        scale = max(1.0, float(np.abs(y).max()))
        worst_cmp = max(worst_cmp, float((x - y).max()) / scale)
    elapsed = time.perf_counter() - start
    ok = worst_pos <= 1e-12 and worst_cmp <= 1e-10 and elapsed < 30
    record_criterion(1, ok, f"positivity {worst_pos:.1e}, comparison {worst_cmp:.1e}, {elapsed:.1f}s")
    assert ok


def test_criterion_02_oracle_equivalence():
    rng = np.random.default_rng(202)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(2, 7))
        schedule = random_schedule(rng, n, int(rng.integers(1, 5)))
        x0 = rng.uniform(0.1, 1.0, n)
        got = propagate(schedule, x0)
        ref = ode_oracle(schedule, x0)
        worst = max(worst, float(np.abs(got - ref).max() / np.abs(ref).max()))
    elapsed = time.perf_counter() - start
    ok = worst < 1e-7 and elapsed < 120
    record_criterion(2, ok, f"max relative error {worst:.1e}, {elapsed:.1f}s")
    assert ok


def test_criterion_03_monodromy_vs_long_run():
    points = [(0.01, 10.0), (0.1, 24.0), (0.5, 30.0), (1.0, 5.0), (5.0, 15.0)]
    worst, where = 0.0, ""
    for name in FIXTURES:
        net = load_network(name)
        for m, T in points:
            p = SystemParams(m, T)
            err = abs(log_perron_root(net, p) / T - longrun_lyapunov(net, p, first=1000, last=2000))
            if err >= worst:
                worst, where = err, f"{name} m={m} T={T}"
    ok = worst < 1e-6
    record_criterion(3, ok, f"max |spectral - long-run| {worst:.1e} at {where}")
    assert ok


def test_criterion_04_entry_bound():
    net = load_network("section44", {"r": 1.0, "s": -2.0})
    value = entry_growth(net, SystemParams(5.0, 10.0), 0, 0)
    ok = value > 1.0
    record_criterion(4, ok, f"M[1,1](5, 10) = {value:.6g}")
    assert ok


def test_criterion_05_large_m_closed_form():
    net = load_network("birds_source", {"s": -2.0})
    worst = 0.0
    for m in (10.0, 30.0):
        for T in (10.0, 15.0):
            lam = math.exp(log_perron_root(net, SystemParams(m, T)))
            worst = max(worst, abs(lam * (1 + m + 2) ** 2 / (m**2 * math.exp(T)) - 1))
    ok = worst < 0.01
    record_criterion(5, ok, f"max relative deviation {worst:.2e}")
    assert ok


def test_criterion_06_threshold():
    net = load_network("section33")
    Ts = (24.0, 32.0, 40.0)
    stars = [threshold_search(net, T, 1e-8, 2.0, rtol=1e-6).m_star for T in Ts]
    logs = np.log(stars)
    slopes = np.diff(logs) / np.diff(Ts)
    in_band = 2e-4 <= stars[0] <= 1.5e-3
    affine = bool(np.all(slopes < 0)) and abs(slopes[1] - slopes[0]) <= 0.1 * abs(slopes[0])
    ok = in_band and affine
    record_criterion(6, ok, f"m*(24)={stars[0]:.3e}, log-slopes {slopes[0]:.4f}, {slopes[1]:.4f}")
    assert ok


def test_criterion_07_e33():
    grows = load_network("e33", {"s": -0.9})
    dies = load_network("e33", {"s": -1.0})
    signs = True
    for T in (25.0, 30.0, 40.0):
        p = SystemParams(0.5, T)
        signs &= lyapunov(grows, p).Lyapunov > 0 and lyapunov(dies, p).Lyapunov < 0
    top = max(
        log_perron_root(grows, SystemParams(m, T)) / T
        for m in np.geomspace(1e-3, 10.0, 20)
        for T in np.linspace(5.0, 40.0, 20)
    )
    limit = (1.0 - 0.9) / 2
    ok = signs and top <= limit + 1e-6
    record_criterion(7, ok, f"signs {'ok' if signs else 'wrong'}, grid max Lambda {top:.4f} <= {limit}")
    assert ok


def test_criterion_08_minorization():
    rng = np.random.default_rng(808)
    chain_bad = 0
    for _ in range(100):
        l = int(rng.integers(1, 5))
        rates = rng.uniform(-2.0, 1.0, l + 1)
        m = float(rng.uniform(0.05, 3.0))
        theta = float(rng.uniform(0.5, 3.0))
        A = np.diag(rates - m) + m * np.eye(l + 1, k=-1)
        k = path_constants(rates, theta, mu=1.0)
        for t in theta * np.array([1.0, 1.5, 3.0, 6.0]):
            if scipy_expm(A * t)[l, 0] < path_bound(k, m, t) * (1 - 1e-12):
                chain_bad += 1
    net = load_network("section33")
    c = parse_circuit(RED, 3)
    circuit_bad = 0
    for m in np.geomspace(1e-3, 1.0, 5):
        for T in (6.0, 12.0, 24.0, 40.0):
            b = circuit_bound(net, c, T=T)
            M = monodromy(net, SystemParams(float(m), T))
            if M[c.start, c.start] < H(float(m), T, b) * (1 - 1e-12):
                circuit_bad += 1
    ok = chain_bad == 0 and circuit_bad == 0
    record_criterion(8, ok, f"chain violations {chain_bad}/400, circuit violations {circuit_bad}/20")
    assert ok


def test_criterion_09_dead_end():
    r = 0.5
    net = chain_network([-1.0, -0.5, -2.0, -1.0, r])
    worst = 0.0
    for m in (0.1, 1.0, 10.0):
        traj = simulate(net, SystemParams(m, 50.0), periods=1.0, dt=0.5, x0=[1.0, 0, 0, 0, 0])
        late = traj.t >= 25.0
        slope = np.polyfit(traj.t[late], traj.log_x[late, 4], 1)[0]
        worst = max(worst, abs(slope - r))
    ok = worst < 1e-3
    record_criterion(9, ok, f"max |slope - r| {worst:.1e}")
    assert ok


def test_criterion_10_stochastic():
    net = load_network("section33")
    p = SystemParams(0.01, 24.0)
    degenerate = simulate_random(net, DurationDistribution.jitter(net), p, 200, seed=1, burn_in=100)
    periodic = log_perron_root(net, p) / p.T
    err = abs(degenerate.rate - periodic)
    jittered = simulate_random(net, DurationDistribution.jitter(net, "uniform:0.5:1.5"), p, 2000, seed=2024)
    lower = jittered.mean - jittered.half_width
    chain = rotating_chain([[-1.0, 1.0, -1.0], [-1.0, -1.0, 1.0], [1.0, -1.0, -1.0]])
    c = parse_circuit("|1->2||2->3||3->1|", 3)
    run = simulate_random(chain, DurationDistribution.jitter(chain, "lognormal:0:0.4"), SystemParams(0.2, 12.0), 500, seed=7, circuit=c)
    bad = run.bound_violations()
    ok = err < 1e-8 and lower > 0 and bad == 0
    record_criterion(10, ok, f"degenerate error {err:.1e}, jittered CI lower {lower:.3g}, per-cycle violations {bad}/500")
    assert ok
