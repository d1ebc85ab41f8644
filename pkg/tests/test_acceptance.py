"""Exit criteria. Each test appends one PASS/FAIL line to the terminal summary."""

import math
import random
import time

import numpy as np
import pytest

from codedgossip.engine import CodingConfig, ProtocolParams, run_trial_coupled, trial_uniforms
from codedgossip.estimator import DEFAULT_SEED, estimate, sweep_redundancy
from codedgossip.graph import GridSpec, RggSpec, TreeSpec, gen_grid, gen_rgg, gen_tree, grid_center, tree_levels
from codedgossip.oracle import exact_expectations, exact_reach_probabilities
from codedgossip.tree_analytics import (
    TreeAnalysisInput,
    binomial_tail,
    chernoff_tail_bounds,
    tree_expected_receivers,
    tree_expected_transmissions,
    tree_min_p_closedform,
    tree_min_p_exact,
    tree_tau_closedform,
)

from conftest import ACCEPTANCE_LINES, cycle_graph, path_graph, star_graph

P_TOL = 0.01
LOAD_RUNS: list[tuple[str, int, int, float, float, float]] = []


def report(label: str, ok: bool, detail: str) -> None:
    ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] {label}: {detail}")


def tracked_estimate(name, g, coding, proto, trials, seed=DEFAULT_SEED):
    cov, load = estimate(g, coding, proto, trials, seed)
    LOAD_RUNS.append((name, coding.n, g.node_count, proto.p, load.mean, load.std_error))
    return cov, load


# --- 1: tree closed forms vs exact solve, k=500, H=50, delta=0.1 -------------

@pytest.fixture(scope="module")
def fig4_table():
    H, k, delta = 50, 500, 0.1
    rhos = [round(0.2 * i, 10) for i in range(1, 11)]
    start = time.perf_counter()
    rows = []
    for rho in rhos:
        inp = TreeAnalysisInput(H, k, round(k * (1 + rho)), delta)
        p_exact = tree_min_p_exact(inp)
        rows.append(
            (rho, p_exact, tree_min_p_closedform(H, rho), tree_expected_transmissions(inp, p_exact), tree_tau_closedform(H, k, rho))
        )
    return rows, time.perf_counter() - start


def test_c1a_tree_min_p_exact_vs_closed(fig4_table):
    rows, _ = fig4_table
    worst = max(abs(pe - pc) for _, pe, pc, _, _ in rows)
    ok = worst <= 0.02
    report("1a tree p_exact vs p_closed (abs <= 0.02)", ok, f"max |diff| = {worst:.3g}")
    assert ok


def test_c1b_tree_tau_exact_vs_closed(fig4_table):
    rows, _ = fig4_table
    rel = [(rho, abs(te - tc) / tc) for rho, _, _, te, tc in rows]
    worst_rho, worst = max(rel, key=lambda r: r[1])
    ok = worst <= 0.02
    report(
        "1b tree tau_exact vs tau_closed (rel <= 2%)",
        ok,
        f"max rel diff = {worst:.4f} at rho={worst_rho}; per rho " + ", ".join(f"{r}:{d:.4f}" for r, d in rel),
    )
    assert ok


def test_c1c_tree_tau_strictly_increasing(fig4_table):
    rows, _ = fig4_table
    exact = [r[3] for r in rows]
    closed = [r[4] for r in rows]
    ok = all(a < b for a, b in zip(exact, exact[1:])) and all(a < b for a, b in zip(closed, closed[1:]))
    report("1c tree tau columns strictly increase in rho", ok, f"tau_exact {exact[0]:.4g}..{exact[-1]:.4g}")
    assert ok


def test_c1d_tree_table_runtime(fig4_table):
    _, elapsed = fig4_table
    ok = elapsed < 10.0
    report("1d tree table runtime < 10 s", ok, f"{elapsed:.2f} s")
    assert ok


# --- 2: Monte Carlo vs tree closed forms ------------------------------------

def test_c2_tree_monte_carlo_vs_analytic():
    g = gen_tree(TreeSpec(2, 10))
    N = g.node_count
    coding = CodingConfig(20, 30)
    start = time.perf_counter()
    worst = 0.0
    ok = True
    for p in (0.7, 0.8, 0.9):
        inp = TreeAnalysisInput(10, 20, 30, 0.1)
        cov, load = tracked_estimate("tree10", g, coding, ProtocolParams(p, 0), 10_000)
        z_r = abs(cov.mean * N - tree_expected_receivers(inp, p)) / (cov.std_error * N)
        z_t = abs(load.mean - tree_expected_transmissions(inp, p)) / load.std_error
        worst = max(worst, z_r, z_t)
        ok &= z_r <= 3 and z_t <= 3
    elapsed = time.perf_counter() - start
    ok &= elapsed < 60
    report("2 tree MC vs E[R], E[T] (3 SE, < 1 min)", ok, f"max |z| = {worst:.2f}, {elapsed:.1f} s")
    assert ok


# --- 3: Monte Carlo vs exact oracle on small graphs -------------------------

def test_c3_oracle_equivalence():
    tree_spec = TreeSpec(2, 2)
    graphs = {
        "path7": (path_graph(7), 0),
        "cycle9": (cycle_graph(9), 0),
        "star6": (star_graph(6), 3),
        "grid3x3": (gen_grid(GridSpec(3, 3)), 0),
        "tree_h2": (gen_tree(tree_spec), 0),
        "grid3x3_q2": (gen_grid(GridSpec(3, 3, 2)), 4),
    }
    coding = CodingConfig(2, 3)
    worst = 0.0
    ok = True
    for name, (g, src) in graphs.items():
        assert g.node_count <= 10
        for p in (0.3, 0.6, 0.9):
            er, et = exact_expectations(exact_reach_probabilities(g, src, p), coding, g)
            cov, load = tracked_estimate(name, g, coding, ProtocolParams(p, src), 10_000)
            for mean, se, exact in ((cov.mean * g.node_count, cov.std_error * g.node_count, er), (load.mean, load.std_error, et)):
                z = abs(mean - exact) / se if se > 0 else (0.0 if math.isclose(mean, exact) else math.inf)
                worst = max(worst, z)
                ok &= z <= 3
    tree = gen_tree(tree_spec)
    levels = tree_levels(tree_spec)
    tree_err = 0.0
    for p in (0.3, 0.6, 0.9):
        q = exact_reach_probabilities(tree, 0, p).q
        tree_err = max(tree_err, max(abs(q[v] - p ** (levels[v] - 1)) for v in range(1, tree.node_count)))
    ok &= tree_err <= 1e-12
    report("3 oracle equivalence on 6 graphs (3 SE; tree q exact)", ok, f"max |z| = {worst:.2f}, tree q err = {tree_err:.1e}")
    assert ok


# --- 4: grid U-shape ---------------------------------------------------------

def test_c4_grid_u_shape():
    g = gen_grid(GridSpec(31, 31))
    rhos = [round(0.1 * i, 10) for i in range(16)]
    start = time.perf_counter()
    points = sweep_redundancy(g, 100, rhos, 0.1, 500, P_TOL, DEFAULT_SEED, source=grid_center(31, 31))
    elapsed = time.perf_counter() - start
    assert all(pt.feasible for pt in points)
    taus = [pt.tau for pt in points]
    ps = [pt.p_min for pt in points]
    i_star = int(np.argmin(taus))
    interior = 0 < i_star < len(taus) - 1
    ok = interior and taus[i_star] < taus[0] and taus[-1] > taus[i_star]
    ok &= all(a >= b for a, b in zip(ps, ps[1:]))
    report(
        "4 grid 31x31 tau U-shape, p_min non-increasing",
        ok,
        f"tau(0)={taus[0]:.0f}, min tau={taus[i_star]:.0f} at rho={rhos[i_star]}, tau(1.5)={taus[-1]:.0f}; "
        f"p_min {ps[0]:.4f}->{ps[-1]:.4f}; {elapsed:.1f} s",
    )
    assert ok


# --- 5: tree simulation trend -------------------------------------------------

def test_c5_tree_tau_non_decreasing():
    g = gen_tree(TreeSpec(2, 10))
    points = sweep_redundancy(g, 100, [0, 0.25, 0.5, 0.75, 1.0], 0.1, 500, P_TOL, DEFAULT_SEED, source=0)
    assert all(pt.feasible for pt in points)
    ok = all(
        b.tau >= a.tau - 3 * math.hypot(a.tau_std_error, b.tau_std_error) for a, b in zip(points, points[1:])
    )
    report("5 tree H=10 tau non-decreasing in rho", ok, "tau " + ", ".join(f"{pt.tau:.0f}" for pt in points))
    assert ok


# --- 6: coupling monotonicity --------------------------------------------------

def test_c6_coupling_monotone():
    g = gen_grid(GridSpec(5, 5))
    coding = CodingConfig(5, 10)
    ps = [round(0.1 * i, 10) for i in range(1, 10)]
    bad = 0
    for trial in range(100):
        outs = run_trial_coupled(g, coding, grid_center(5, 5), ps, trial_uniforms(DEFAULT_SEED, trial, coding.n, 25))
        bad += any(a.receivers > b.receivers or a.transmissions > b.transmissions for a, b in zip(outs, outs[1:]))
    ok = bad == 0
    report("6 coupled R, T monotone in p (100 trials)", ok, f"{bad} non-monotone trials")
    assert ok


# --- 7: transmission upper bound ------------------------------------------------

def test_c7_transmission_bound():
    extra = [
        ("grid31", gen_grid(GridSpec(31, 31)), grid_center(31, 31), CodingConfig(100, 130)),
        ("rgg60", gen_rgg(RggSpec(60, 20, 20, 5.5, 0)), 7, CodingConfig(100, 150)),
        ("grid31_q10", gen_grid(GridSpec(31, 31, 10)), grid_center(31, 31), CodingConfig(20, 30)),
    ]
    for name, g, src, coding in extra:
        for p in (0.2, 0.5, 0.8, 1.0):
            tracked_estimate(name, g, coding, ProtocolParams(p, src), 200)
    violations = [
        r for r in LOAD_RUNS if r[4] > r[1] + (r[2] - 1) * r[1] * r[3] + 3 * r[5] + 1e-9
    ]
    ok = not violations
    report("7 E[T] <= n + (N-1) n p + 3 SE", ok, f"{len(LOAD_RUNS)} estimate runs, {len(violations)} violations")
    assert ok


# --- 8: Gq ordering --------------------------------------------------------------

def test_c8_grid_family_ordering():
    rhos = [0.0, 0.5, 1.0]
    table = {}
    for name, q in (("G", None), ("G5", 5), ("G10", 10), ("G15", 15)):
        pts = sweep_redundancy(gen_grid(GridSpec(31, 31, q)), 100, rhos, 0.1, 500, P_TOL, DEFAULT_SEED, source=grid_center(31, 31))
        table[name] = [pt.p_min for pt in pts]
    names = ["G", "G5", "G10", "G15"]
    ok = all(
        table[a][i] <= table[b][i] + P_TOL for i in range(len(rhos)) for a, b in zip(names, names[1:])
    )
    report("8 p_min(G) <= p_min(G5) <= p_min(G10) <= p_min(G15)", ok, "; ".join(f"{n}: {table[n]}" for n in names))
    assert ok


# --- 9: Chernoff sandwich ----------------------------------------------------------

def test_c9_chernoff_sandwich():
    rng = random.Random(DEFAULT_SEED)
    done = wrong = 0
    while done < 50:
        k = rng.randint(1, 200)
        rho = rng.uniform(0, 2)
        n = max(k, round(k * (1 + rho)))
        p = rng.uniform(0.3, 0.999)
        level = rng.randint(0, 60)
        s = p**level
        if math.isclose(s, k / n, rel_tol=1e-9):
            continue
        lower, upper = chernoff_tail_bounds(TreeAnalysisInput(50, k, n, 0.1), p, level)
        exact = binomial_tail(n, s, k)
        wrong += not (lower <= exact <= upper)
        done += 1
    ok = wrong == 0
    report("9 Chernoff bounds on the correct side (50 tuples)", ok, f"{wrong} violations")
    assert ok


# --- RGG substitute for the unpublished layout ---------------------------------------

def test_rgg_shape_substitute():
    g = gen_rgg(RggSpec(60, 20.0, 20.0, 5.5, seed=0))
    rhos = [round(0.1 * i, 10) for i in range(16)]
    points = sweep_redundancy(g, 100, rhos, 0.1, 500, P_TOL, DEFAULT_SEED)
    assert all(pt.feasible for pt in points)
    ps = [pt.p_min for pt in points]
    taus = [pt.tau for pt in points]
    i_star = int(np.argmin(taus))
    ok = all(a >= b for a, b in zip(ps, ps[1:])) and i_star < len(taus) - 1
    report("RGG 60 nodes r=5.5: p_min non-increasing, tau minimum not final", ok, f"min tau at rho={rhos[i_star]}")
    assert ok
