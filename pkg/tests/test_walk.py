import math

import numpy as np
import pytest

from photonwalk import graphs as G
from photonwalk import walk as W
from photonwalk.coins import CoinKind, CoinSpec, coin
from conftest import load_fixture
from oracles import brute_line_walk

S = 1 / math.sqrt(2)
H = coin(CoinSpec(CoinKind.HADAMARD, 2))
G4 = coin(CoinSpec(CoinKind.GROVER, 4))
MICHELSON_S = S * np.array([[1j, 1], [1, 1j]])


def with_scattering(g, s):
    return G.Graph(g.kind, g.params, g.ports, tuple(s for _ in g.ports), g.labels, g.coords, g.marked)


def test_hadamard_one_step():
    st = W.coin_step(W.line_state(1), H)
    o = st.origin
    assert abs(st.amplitudes[o + 1, 0] - S) < 1e-15
    assert abs(st.amplitudes[o - 1, 1] - S) < 1e-15
    assert abs(st.norm - 1) < 1e-15
    assert np.count_nonzero(np.abs(st.amplitudes) > 1e-15) == 2


def test_hadamard_two_steps():
    run = W.run_walk("line", "coin", W.line_state(2), 2, H)
    p = W.position_distribution(run, 2)
    assert abs(p[2] - 0.25) < 1e-15 and abs(p[0] - 0.5) < 1e-15 and abs(p[-2] - 0.25) < 1e-15
    assert p[1] == p[-1] == 0


def test_grover_torus_one_step():
    g = G.build_graph("rect", w=5, h=5, toroidal=True)
    m, n = 2, 2
    st = W.coin_step(W.lattice_coin_state(g, m + 5 * n, [0, 1, 0, 0]), G4)
    a = st.amplitudes
    assert abs(a[m - 1, n, 0] - 0.5) < 1e-15
    assert abs(a[m, n + 1, 1] + 0.5) < 1e-15
    assert abs(a[m + 1, n, 2] - 0.5) < 1e-15
    assert abs(a[m, n - 1, 3] - 0.5) < 1e-15


def test_coin_model_refuses_open_boundaries():
    with pytest.raises(ValueError, match="edge model"):
        W.lattice_coin_state(G.build_graph("rect", w=4, h=4), 0, [1, 0, 0, 0])
    with pytest.raises(ValueError):
        W.coin_step(W.line_state(3), G4)


def test_line_boundary_guard():
    st = W.line_state(1)
    st = W.coin_step(st, H)
    with pytest.raises(W.BoundaryError):
        W.coin_step(st, H)


def test_edge_step_michelson_line():
    g = with_scattering(G.build_graph("cycle", n=21), MICHELSON_S)
    idx = g.edge_index()
    m = 10
    amps = np.zeros(len(idx), dtype=complex)
    amps[idx.index(m - 1, m)] = 1
    out = W.edge_step(W.EdgeWalkState(amps), g).amplitudes
    expected = np.zeros_like(out)
    expected[idx.index(m, m + 1)] = S
    expected[idx.index(m, m - 1)] = 1j * S
    assert np.abs(out - expected).max() < 1e-15


def test_edge_step_grover_torus_display():
    g0 = G.build_graph("rect", w=5, h=5, toroidal=True)
    g = with_scattering(g0, G.scattering_from_coin(G4))
    idx = g.edge_index()
    v = lambda x, y: x % 5 + 5 * (y % 5)  # noqa: E731
    m, n = 2, 2
    amps = np.zeros(len(idx), dtype=complex)
    amps[idx.index(v(m, n - 1), v(m, n))] = 1
    out = W.edge_step(W.EdgeWalkState(amps), g).amplitudes
    expected = np.zeros_like(out)
    expected[idx.index(v(m, n), v(m - 1, n))] = 0.5
    expected[idx.index(v(m, n), v(m, n + 1))] = -0.5
    expected[idx.index(v(m, n), v(m + 1, n))] = 0.5
    expected[idx.index(v(m, n), v(m, n - 1))] = 0.5
    assert np.abs(out - expected).max() < 1e-15


def test_edge_step_hypercube2_norm(rng):
    g = G.build_graph("hypercube", d=2, default_coin="dft")
    a = rng.normal(size=8) + 1j * rng.normal(size=8)
    st = W.EdgeWalkState(a / np.linalg.norm(a))
    assert abs(W.edge_step(st, g).norm - 1) < 1e-14
    with pytest.raises(ValueError):
        W.edge_step(W.EdgeWalkState(np.ones(5)), g)


def test_e_map_examples(rng):
    g = G.build_graph("cycle", n=21)
    idx = g.edge_index()
    amps = np.zeros(len(idx), dtype=complex)
    amps[idx.index(4, 5)] = 1
    c = W.e_map(W.EdgeWalkState(amps), g).amplitudes
    assert c[5, 0] == 1 and np.count_nonzero(c) == 1
    t = G.build_graph("rect", w=4, h=4, toroidal=True)
    tidx = t.edge_index()
    amps = np.zeros(len(tidx), dtype=complex)
    amps[tidx.index(1 + 4 * 3, 1 + 4 * 2)] = 1
    c = W.e_map(W.EdgeWalkState(amps), t).amplitudes
    assert c[1, 2, 3] == 1 and np.count_nonzero(c) == 1
    x = rng.normal(size=len(tidx)) + 1j * rng.normal(size=len(tidx))
    back = W.e_map_inverse(W.e_map(W.EdgeWalkState(x), t), t).amplitudes
    assert np.array_equal(back, x)
    with pytest.raises(ValueError):
        W.e_map(W.EdgeWalkState(np.ones(24)), G.build_graph("hypercube", d=3))


def test_zero_steps_keeps_initial():
    run = W.run_walk("line", "coin", W.line_state(0, [S, 1j * S]), 0, H)
    assert run.distribution(0)[run.final.origin] == pytest.approx(1.0, abs=1e-15)


def test_hadamard_100_asymmetric_and_matches_brute():
    run = W.run_walk("line", "coin", W.line_state(100), 100, H)
    p = W.position_distribution(run, 100)
    brute = brute_line_walk(H, 100, (1, 0))
    assert max(abs(p.get(x, 0) - q) for x, q in brute.items()) < 1e-12
    right = sum(q for x, q in p.items() if x > 0)
    left = sum(q for x, q in p.items() if x < 0)
    assert right - left > 0.4


def _equivalence_pair(g, s):
    ge = with_scattering(g, s)
    c = G.coin_from_scattering(s, g.labels[0])
    return ge, c


@pytest.mark.parametrize("graph, s", [
    (G.build_graph("cycle", n=21), MICHELSON_S),
    (G.build_graph("rect", w=4, h=4, toroidal=True), G.scattering_from_coin(G4)),
])
def test_edge_and_coin_distributions_agree(graph, s):
    ge, c = _equivalence_pair(graph, s)
    rng = np.random.default_rng(0)
    a = rng.normal(size=2 * ge.n_edges) + 1j * rng.normal(size=2 * ge.n_edges)
    edge0 = W.EdgeWalkState(a / np.linalg.norm(a))
    er = W.run_walk(ge, "edge", edge0, 20)
    cr = W.run_walk(ge, "coin", W.e_map(edge0, ge), 20, c)
    for t in range(21):
        assert np.abs(er.distribution(t) - cr.distribution(t)).max() < 1e-12


def test_michelson_line_coin_is_symmetric_splitter():
    c = G.coin_from_scattering(MICHELSON_S, ("R", "L"))
    assert np.abs(c - S * np.array([[1, 1j], [1j, 1]])).max() < 1e-15


def test_distribution_errors_and_sums():
    run = W.run_walk("line", "coin", W.line_state(5), 5, H, retain=False)
    with pytest.raises(ValueError, match="retained"):
        run.distribution(0)
    run = W.run_walk("line", "coin", W.line_state(5), 5, H)
    with pytest.raises(ValueError):
        run.distribution(6)
    assert sum(W.position_distribution(run, 5).values()) == pytest.approx(1, abs=1e-10)
    g = G.build_graph("cycle", n=9)
    f = coin(CoinSpec(CoinKind.DFT, 2))
    uniform = np.full((9, 2), 1 / math.sqrt(18), dtype=complex)
    cr = W.run_walk(g, "coin", W.CoinWalkState(uniform, "cycle"), 3, f)
    assert np.abs(cr.distribution(0) - 1 / 9).max() < 1e-15
    assert abs(cr.distribution(3).sum() - 1) < 1e-10
    gt = G.build_graph("glued_tree", depth=3, seed=1)
    er = W.run_walk(gt, "edge", W.edge_state_from_vertex(gt, 0), 7)
    assert abs(er.distribution(7).sum() - 1) < 1e-10


def test_unnormalised_initial_rejected():
    g = G.build_graph("cycle", n=5)
    with pytest.raises(ValueError, match="normalised"):
        W.run_walk(g, "edge", W.EdgeWalkState(np.ones(10)), 1)
    with pytest.raises(ValueError):
        W.run_walk(g, "edge", W.uniform_edge_state(g), -1)


def test_spread():
    run = W.run_walk("line", "coin", W.line_state(100), 100, H)
    sigma = W.spread_stddev(run)
    assert sigma[0] == 0
    assert sigma[100] / sigma[50] >= 1.8
    assert W.classical_line_stddev(100) == pytest.approx(10, rel=0.02)
    assert W.classical_line_stddev(100) / W.classical_line_stddev(50) == pytest.approx(math.sqrt(2), rel=0.01)
    g = G.build_graph("cycle", n=5)
    er = W.run_walk(g, "edge", W.uniform_edge_state(g), 2)
    with pytest.raises(ValueError, match="line"):
        W.spread_stddev(er)


def test_norm_drift_over_1000_steps():
    g = G.build_graph("rect", w=6, h=6, toroidal=True)
    prop_state = W.edge_state_from_vertex(g, 0)
    run = W.run_walk(g, "edge", prop_state, 1000, retain=False)
    assert abs(run.final.norm - 1) < 1e-9
    st = W.lattice_coin_state(g, 0, [0.5, 0.5, 0.5, 0.5])
    cr = W.run_walk(g, "coin", st, 1000, G4, retain=False)
    assert abs(cr.final.norm - 1) < 1e-9


def test_edge_step_reversible(rng):
    g = G.mark_vertex(G.build_graph("hex", w=6, h=4), 3, -np.eye(3))
    a = rng.normal(size=2 * g.n_edges) + 1j * rng.normal(size=2 * g.n_edges)
    st = W.EdgeWalkState(a / np.linalg.norm(a))
    back = W.edge_step(W.edge_step(st, g), g, adjoint=True)
    assert np.abs(back.amplitudes - st.amplitudes).max() < 1e-12


def test_uniform_state_invariant_on_grover_torus():
    g = G.build_graph("rect", w=5, h=4, toroidal=True)
    run = W.run_walk(g, "edge", W.uniform_edge_state(g), 10)
    for t in range(11):
        assert np.abs(run.distribution(t) - 1 / 20).max() < 1e-12


def test_search_unmarked_flat_and_errors():
    g = G.build_graph("rect", w=8, h=8, toroidal=True)
    res = W.spatial_search(g, 64, vertex=36)
    assert np.abs(res.series - res.baseline).max() < 1e-10
    assert res.baseline == 2 * 4 / (2 * g.n_edges)
    with pytest.raises(ValueError, match="exactly one"):
        W.spatial_search(g, 5)
    two = G.mark_vertex(G.mark_vertex(g, 1, -np.eye(4)), 2, -np.eye(4))
    with pytest.raises(ValueError, match="exactly one"):
        W.spatial_search(two, 5)


def test_search_localises():
    fx = load_fixture("walk_thresholds.json")
    cfg = fx["search_torus"]
    g = G.mark_vertex(G.build_graph("rect", w=cfg["w"], h=cfg["h"], toroidal=True), cfg["marked"], -np.eye(4))
    res = W.spatial_search(g, cfg["steps"])
    assert res.peak / res.baseline >= cfg["min_ratio"]
    hx = fx["search_hex"]
    gh = G.mark_vertex(G.build_graph("hex", w=hx["w"], h=hx["h"]), hx["marked"], -np.eye(3))
    res = W.spatial_search(gh, hx["steps"])
    assert res.peak > res.baseline


def test_hitting_validation():
    g = G.build_graph("hypercube", d=4)
    with pytest.raises(ValueError, match="differ"):
        W.hitting_time(g, 3, 3, 10, 0.1)
    for bad in (0.0, 1.5, -0.2):
        with pytest.raises(ValueError, match="threshold"):
            W.hitting_time(g, 0, 15, 10, bad)


@pytest.mark.parametrize("key, kind", [("hit_hypercube", "hypercube"), ("hit_glued_tree", "glued_tree")])
def test_hitting_ordering(key, kind):
    cfg = load_fixture("walk_thresholds.json")[key]
    params = {"d": cfg["d"]} if kind == "hypercube" else {"depth": cfg["depth"], "seed": cfg["seed"]}
    g = G.build_graph(kind, **params)
    res = W.hitting_time(g, cfg["start"], cfg["target"], cfg["steps"], cfg["threshold"])
    assert res.quantum is not None and res.classical is not None
    assert res.quantum < res.classical
    assert (res.quantum, res.classical) == (cfg["recorded_quantum"], cfg["recorded_classical"])
    assert res.quantum_series[0] == 0 and res.classical_series[0] == 0


def test_classical_series_matches_monte_carlo():
    g = G.build_graph("glued_tree", depth=3, seed=7)
    steps, trials = 20, 1_000_000
    exact = W.classical_series(g, 0, steps)[:, 15]
    mc = W.classical_hitting_monte_carlo(g, 0, 15, steps, trials, seed=11)
    sigma = np.sqrt(np.maximum(exact * (1 - exact), 1e-12) / trials)
    assert np.all(np.abs(mc - exact) <= 3 * sigma + 1e-12)
    assert np.allclose(W.classical_series(g, 0, steps).sum(axis=1), 1)
