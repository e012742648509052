"""Discrete-time quantum walks in the coin and the edge (scattering) picture.

Coin model
    State ``psi[position..., direction]``; one step is ``V = S (I x C)``: the
    coin mixes directions, then the moving shift carries the amplitude in
    direction ``X`` one site along ``X``.  Directions are ordered (R, L) on a
    line or cycle and (L, U, R, D) on a torus.
Edge model
    State on directed edges; the amplitude on ``u -> v`` scatters at ``v``
    through ``S_v[out_port, in_port]`` into the edges leaving ``v``.

The map ``E`` sends the edge ``u -> v`` to ``|v> x |direction of travel>``.
With ``S_v = C @ P`` (see :func:`graphs.scattering_from_coin`) it
intertwines the two pictures, ``E U = V E``.
"""
from __future__ import annotations

import math
import weakref
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np
from scipy.stats import binom

from .graphs import OPPOSITE, Graph
from .linalg import as_cmatrix

__all__ = [
    "CoinWalkState",
    "EdgeWalkState",
    "WalkRun",
    "SearchResult",
    "HittingResult",
    "line_state",
    "lattice_coin_state",
    "uniform_edge_state",
    "edge_state_from_vertex",
    "coin_step",
    "edge_step",
    "e_map",
    "e_map_inverse",
    "run_walk",
    "position_distribution",
    "spread_stddev",
    "classical_line_distribution",
    "classical_line_stddev",
    "spatial_search",
    "classical_series",
    "hitting_time",
    "classical_hitting_monte_carlo",
]

_DIRECTIONS = {
    "line": (("R", (1,)), ("L", (-1,))),
    "cycle": (("R", (1,)), ("L", (-1,))),
    "torus": (("L", (-1, 0)), ("U", (0, 1)), ("R", (1, 0)), ("D", (0, -1))),
}


class BoundaryError(ValueError):
    pass


# --------------------------------------------------------------------------
# States
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CoinWalkState:
    """Amplitudes ``psi[grid..., direction]``.

    For ``line`` the grid index ``i`` is position ``i - origin``.  For
    ``torus`` the grid is ``[x, y]``.
    """

    amplitudes: np.ndarray
    substrate: str
    origin: int = 0

    def __post_init__(self):
        if self.substrate not in _DIRECTIONS:
            raise ValueError(f"coin walks run on {sorted(_DIRECTIONS)}, not {self.substrate!r}")
        ndim = 2 if self.substrate == "torus" else 1
        if self.amplitudes.ndim != ndim + 1 or self.amplitudes.shape[-1] != len(_DIRECTIONS[self.substrate]):
            raise ValueError(f"bad amplitude shape {self.amplitudes.shape} for a {self.substrate} coin walk")

    @property
    def norm(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2))

    def probabilities(self) -> np.ndarray:
        """Probability per site; torus sites in vertex order ``x + w*y``."""
        p = np.sum(np.abs(self.amplitudes) ** 2, axis=-1)
        return p.reshape(-1, order="F") if self.substrate == "torus" else p

    def positions(self) -> np.ndarray:
        n = self.amplitudes.shape[0]
        return np.arange(n) - self.origin if self.substrate == "line" else np.arange(self.probabilities().size)


@dataclass(frozen=True, eq=False)
class EdgeWalkState:
    amplitudes: np.ndarray

    @property
    def norm(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2))


def _normalised(v) -> np.ndarray:
    v = np.asarray(v, dtype=np.complex128)
    nrm = np.linalg.norm(v)
    if nrm == 0:
        raise ValueError("initial state is zero")
    if abs(nrm - 1.0) > 1e-12:
        raise ValueError(f"initial state must be normalised (norm {nrm:.15g})")
    return v


def line_state(steps: int, coin_state: Sequence[complex] = (1, 0), position: int = 0) -> CoinWalkState:
    """Point source on a line sized for ``steps`` steps (2*steps + 3 sites)."""
    if steps < 0:
        raise ValueError("steps must be non-negative")
    origin = steps + 1
    if abs(position) > steps:
        raise ValueError("start position must lie within the allocated line")
    amps = np.zeros((2 * steps + 3, 2), dtype=np.complex128)
    amps[origin + position] = _normalised(coin_state)
    return CoinWalkState(amps, "line", origin)


def _coin_substrate(g: Graph) -> str:
    if g.kind == "cycle":
        return "cycle"
    if g.kind == "rect" and g.params.get("toroidal"):
        return "torus"
    raise ValueError(
        f"the coin model needs a cycle or a toroidal lattice, got {g.kind}"
        " (open boundaries: use the edge model)"
    )


def _grid_shape(g: Graph) -> tuple[int, ...]:
    return (g.params["n"],) if g.kind == "cycle" else (g.params["w"], g.params["h"])


def lattice_coin_state(g: Graph, vertex: int, coin_state: Sequence[complex]) -> CoinWalkState:
    substrate = _coin_substrate(g)
    shape = _grid_shape(g)
    amps = np.zeros(shape + (len(_DIRECTIONS[substrate]),), dtype=np.complex128)
    amps[np.unravel_index(vertex, shape, order="F")] = _normalised(coin_state)
    return CoinWalkState(amps, substrate)


def uniform_edge_state(g: Graph) -> EdgeWalkState:
    n = 2 * g.n_edges
    return EdgeWalkState(np.full(n, 1 / math.sqrt(n), dtype=np.complex128))


def edge_state_from_vertex(g: Graph, v: int) -> EdgeWalkState:
    """Equal superposition over the edges leaving ``v``."""
    idx = g.edge_index()
    amps = np.zeros(len(idx), dtype=np.complex128)
    amps[idx.out_edges[v]] = 1 / math.sqrt(g.degree(v))
    return EdgeWalkState(amps)


# --------------------------------------------------------------------------
# Step operators
# --------------------------------------------------------------------------


def coin_step(state: CoinWalkState, c) -> CoinWalkState:
    c = as_cmatrix(c)
    dirs = _DIRECTIONS[state.substrate]
    if c.shape != (len(dirs), len(dirs)):
        raise ValueError(f"coin is {c.shape[0]}x{c.shape[1]}, walk has {len(dirs)} directions")
    mixed = state.amplitudes @ c.T
    out = np.empty_like(mixed)
    for k, (_, disp) in enumerate(dirs):
        comp = mixed[..., k]
        for axis, step in enumerate(disp):
            if step:
                comp = np.roll(comp, step, axis=axis)
        out[..., k] = comp
    if state.substrate == "line" and (np.any(out[0] != 0) or np.any(out[-1] != 0)):
        raise BoundaryError("walker reached the end of the allocated line")
    return CoinWalkState(out, state.substrate, state.origin)


class _EdgePropagator:
    """Vectorised scattering step, grouped by vertex degree."""

    def __init__(self, g: Graph):
        self.index = g.edge_index()
        self.size = len(self.index)
        groups: dict[int, list[int]] = {}
        for v in range(g.n_vertices):
            groups.setdefault(g.degree(v), []).append(v)
        self.groups = []
        for deg, vs in sorted(groups.items()):
            if deg == 0:
                continue
            s = np.stack([g.scattering[v] for v in vs])
            ins = np.stack([self.index.in_edges[v] for v in vs])
            outs = np.stack([self.index.out_edges[v] for v in vs])
            self.groups.append((s, ins, outs))

    def apply(self, amps: np.ndarray, adjoint: bool = False) -> np.ndarray:
        new = np.zeros_like(amps)
        for s, ins, outs in self.groups:
            if adjoint:
                src, dst, mat = outs, ins, np.conj(np.swapaxes(s, 1, 2))
            else:
                src, dst, mat = ins, outs, s
            # amps[src] has shape (vertices, degree, *batch)
            new[dst] = np.einsum("vop,vp...->vo...", mat, amps[src])
        return new


_PROPAGATORS: "weakref.WeakKeyDictionary[Graph, _EdgePropagator]" = weakref.WeakKeyDictionary()


def _propagator(g: Graph) -> _EdgePropagator:
    prop = _PROPAGATORS.get(g)
    if prop is None:
        prop = _PROPAGATORS[g] = _EdgePropagator(g)
    return prop


def edge_step(state: EdgeWalkState, g: Graph, adjoint: bool = False) -> EdgeWalkState:
    prop = _propagator(g)
    if state.amplitudes.shape[0] != prop.size:
        raise ValueError(f"state has {state.amplitudes.shape[0]} entries, graph has {prop.size} directed edges")
    return EdgeWalkState(prop.apply(state.amplitudes, adjoint))


def edge_operator(g: Graph) -> np.ndarray:
    """Dense one-step edge unitary (columns = input edges)."""
    prop = _propagator(g)
    return prop.apply(np.eye(prop.size, dtype=np.complex128))


def _e_permutation(g: Graph) -> tuple[np.ndarray, tuple[int, ...]]:
    substrate = _coin_substrate(g)
    order = [name for name, _ in _DIRECTIONS[substrate]]
    shape = _grid_shape(g) + (len(order),)
    idx = g.edge_index()
    perm = np.empty(len(idx), dtype=int)
    for e in range(len(idx)):
        v = int(idx.head[e])
        arrived_via = g.labels[v][int(idx.head_port[e])]
        grid = np.unravel_index(v, shape[:-1], order="F")
        perm[e] = np.ravel_multi_index(grid + (order.index(OPPOSITE[arrived_via]),), shape)
    return perm, shape


def e_map(state: EdgeWalkState, g: Graph) -> CoinWalkState:
    perm, shape = _e_permutation(g)
    if state.amplitudes.shape[0] != perm.size:
        raise ValueError("state does not match the graph's directed edges")
    flat = np.zeros(int(np.prod(shape)), dtype=np.complex128)
    flat[perm] = state.amplitudes
    return CoinWalkState(flat.reshape(shape), _coin_substrate(g))


def e_map_inverse(state: CoinWalkState, g: Graph) -> EdgeWalkState:
    perm, shape = _e_permutation(g)
    if state.amplitudes.shape != shape:
        raise ValueError("state does not match the graph")
    return EdgeWalkState(state.amplitudes.reshape(-1)[perm].copy())


# --------------------------------------------------------------------------
# Runs
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class WalkRun:
    substrate: Any
    model: str
    steps: int
    final: Any
    distributions: tuple[np.ndarray, ...] | None
    positions: np.ndarray

    def distribution(self, t: int) -> np.ndarray:
        if self.distributions is None:
            raise ValueError("per-step distributions were not retained")
        if not 0 <= t <= self.steps:
            raise ValueError(f"step {t} outside 0..{self.steps}")
        return self.distributions[t]


def _edge_probabilities(g: Graph, amps: np.ndarray) -> np.ndarray:
    idx = g.edge_index()
    return np.bincount(idx.head, weights=np.abs(amps) ** 2, minlength=g.n_vertices)


def run_walk(substrate, model: str, initial, steps: int, coin=None, retain: bool = True) -> WalkRun:
    """Iterate a walk.

    ``model="coin"`` needs a :class:`CoinWalkState` and a coin matrix;
    ``substrate`` is ``"line"`` or the cycle/torus graph the state lives on.
    ``model="edge"`` needs a :class:`Graph` and an :class:`EdgeWalkState`.
    """
    if steps < 0:
        raise ValueError("steps must be non-negative")
    dists: list[np.ndarray] = []
    if model == "coin":
        if not isinstance(initial, CoinWalkState) or coin is None:
            raise ValueError("coin walks need a CoinWalkState and a coin matrix")
        state = initial
        if state.substrate == "line" and state.amplitudes.shape[0] < 2 * steps + 3:
            raise ValueError(f"line of {state.amplitudes.shape[0]} sites is too short for {steps} steps")
        _normalised(state.amplitudes.reshape(-1))
        for t in range(steps + 1):
            if retain:
                dists.append(state.probabilities())
            if t < steps:
                state = coin_step(state, coin)
        positions = state.positions()
    elif model == "edge":
        if not isinstance(substrate, Graph) or not isinstance(initial, EdgeWalkState):
            raise ValueError("edge walks need a Graph and an EdgeWalkState")
        _normalised(initial.amplitudes)
        state = initial
        prop = _propagator(substrate)
        if state.amplitudes.shape[0] != prop.size:
            raise ValueError("initial state does not match the graph's directed edges")
        amps = state.amplitudes
        for t in range(steps + 1):
            if retain:
                dists.append(_edge_probabilities(substrate, amps))
            if t < steps:
                amps = prop.apply(amps)
        state = EdgeWalkState(amps)
        positions = np.arange(substrate.n_vertices)
    else:
        raise ValueError(f"model must be 'coin' or 'edge', got {model!r}")
    return WalkRun(substrate, model, steps, state, tuple(dists) if retain else None, positions)


def position_distribution(run: WalkRun, t: int) -> dict:
    p = run.distribution(t)
    return {int(x): float(q) for x, q in zip(run.positions, p)}


def spread_stddev(run: WalkRun) -> np.ndarray:
    if run.substrate != "line":
        raise ValueError("spread is defined for line walks")
    x = run.positions.astype(float)
    out = []
    for t in range(run.steps + 1):
        p = run.distribution(t)
        mean = np.dot(p, x)
        out.append(math.sqrt(max(0.0, np.dot(p, (x - mean) ** 2))))
    return np.array(out)


def classical_line_distribution(t: int) -> tuple[np.ndarray, np.ndarray]:
    """Exact positions and probabilities of a fair coin-toss walk after ``t`` steps."""
    k = np.arange(t + 1)
    return 2 * k - t, binom.pmf(k, t, 0.5)


def classical_line_stddev(t: int) -> float:
    x, p = classical_line_distribution(t)
    mean = np.dot(p, x)
    return math.sqrt(np.dot(p, (x - mean) ** 2))


# --------------------------------------------------------------------------
# Experiments
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SearchResult:
    vertex: int
    series: np.ndarray
    baseline: float

    @property
    def peak(self) -> float:
        return float(np.max(self.series))

    @property
    def peak_step(self) -> int:
        return int(np.argmax(self.series))


def spatial_search(g: Graph, steps: int, vertex: int | None = None) -> SearchResult:
    """Probability on the directed edges touching the marked vertex, per step.

    The walk starts in the uniform superposition over all directed edges.
    ``vertex`` overrides the marked set (for unmarked controls).
    """
    if vertex is None:
        if len(g.marked) != 1:
            raise ValueError(f"spatial search needs exactly one marked vertex, graph has {len(g.marked)}")
        (vertex,) = tuple(g.marked)
    idx = g.edge_index()
    incident = (idx.head == vertex) | (idx.tail == vertex)
    prop = _propagator(g)
    amps = uniform_edge_state(g).amplitudes
    series = []
    for t in range(steps + 1):
        series.append(float(np.sum(np.abs(amps[incident]) ** 2)))
        if t < steps:
            amps = prop.apply(amps)
    baseline = 2 * g.degree(vertex) / (2 * g.n_edges)
    return SearchResult(int(vertex), np.array(series), baseline)


def classical_series(g: Graph, start: int, steps: int) -> np.ndarray:
    """Exact occupation probabilities of the simple random walk, ``[t, vertex]``."""
    n = g.n_vertices
    p = np.zeros(n)
    p[start] = 1.0
    out = [p]
    tails = np.repeat(np.arange(n), [g.degree(v) for v in range(n)])
    heads = np.concatenate([np.array(nb, dtype=int) for nb in g.ports])
    weights = 1.0 / np.array([g.degree(v) for v in tails])
    for _ in range(steps):
        p = np.bincount(heads, weights=p[tails] * weights, minlength=n)
        out.append(p)
    return np.array(out)


@dataclass(frozen=True)
class HittingResult:
    threshold: float
    quantum: int | None
    classical: int | None
    quantum_argmax: int
    classical_argmax: int
    quantum_series: np.ndarray
    classical_series: np.ndarray

    def to_dict(self) -> dict:
        return {
            "threshold": self.threshold,
            "quantum": self.quantum,
            "classical": self.classical,
            "quantum_argmax": self.quantum_argmax,
            "classical_argmax": self.classical_argmax,
            "quantum_series": [float(x) for x in self.quantum_series],
            "classical_series": [float(x) for x in self.classical_series],
        }


def _first_crossing(series: np.ndarray, threshold: float) -> int | None:
    hit = np.flatnonzero(series >= threshold)
    return int(hit[0]) if hit.size else None


def hitting_time(g: Graph, start: int, target: int, steps: int, threshold: float) -> HittingResult:
    """First step at which the walker's probability at ``target`` reaches ``threshold``.

    Quantum: edge walk from the equal superposition on ``start``'s outgoing
    edges.  A walker on ``u -> v`` is counted at ``u`` (it has not yet
    crossed the edge), so at ``t = 0`` it sits on ``start``.  Classical: exact
    simple random walk from ``start``.  The step of the maximum within the
    window is reported as well.
    """
    if start == target:
        raise ValueError("start and target must differ")
    if not 0 < threshold <= 1:
        raise ValueError(f"threshold must lie in (0, 1], got {threshold}")
    idx = g.edge_index()
    at_target = idx.tail == target
    prop = _propagator(g)
    amps = edge_state_from_vertex(g, start).amplitudes
    q = []
    for t in range(steps + 1):
        q.append(float(np.sum(np.abs(amps[at_target]) ** 2)))
        if t < steps:
            amps = prop.apply(amps)
    q = np.array(q)
    c = classical_series(g, start, steps)[:, target]
    return HittingResult(
        threshold,
        _first_crossing(q, threshold),
        _first_crossing(c, threshold),
        int(np.argmax(q)),
        int(np.argmax(c)),
        q,
        c,
    )


def classical_hitting_monte_carlo(
    g: Graph, start: int, target: int, steps: int, trials: int, seed: int = 0, block: int = 100_000
) -> np.ndarray:
    """Fraction of independent random walkers sitting on ``target`` at each step."""
    max_deg = max(g.degree(v) for v in range(g.n_vertices))
    table = np.full((g.n_vertices, max_deg), -1, dtype=int)
    for v, nb in enumerate(g.ports):
        table[v, : len(nb)] = nb
    deg = np.array([g.degree(v) for v in range(g.n_vertices)])
    counts = np.zeros(steps + 1)
    done = 0
    seeds = np.random.SeedSequence(seed).spawn((trials + block - 1) // block)
    for ss in seeds:
        n = min(block, trials - done)
        rng = np.random.default_rng(ss)
        pos = np.full(n, start)
        counts[0] += np.count_nonzero(pos == target)
        for t in range(1, steps + 1):
            pick = (rng.random(n) * deg[pos]).astype(int)
            pos = table[pos, pick]
            counts[t] += np.count_nonzero(pos == target)
        done += n
    return counts / trials
