"""Walk substrates: vertices with ordered ports and per-vertex scattering matrices.

Port ``k`` of vertex ``v`` is wired to ``ports[v][k]``.  Scattering matrices
are written in that port basis with ``S[out_port, in_port]``.

Port orders
-----------
* ``Line`` / ``Cycle``: (R, L), i.e. toward ``v+1`` then ``v-1``.
* ``RectLattice``: (L, U, R, D) with ``U`` toward ``y+1``; vertex id ``x + w*y``.
* ``HexLattice``: periodic brick-wall honeycomb, ports clockwise from
  12 o'clock: (U, R, L) where the vertical bond points up, (R, D, L) where it
  points down.
* ``Hypercube``: port ``k`` flips bit ``k``.
* ``GluedTree``: (parent, left, right) inside a tree, (left, right) at the
  roots, (parent, glue, glue) at the leaves.

Open boundaries (line ends, non-toroidal lattice edges, glued-tree roots) get
a Grover matrix of the reduced degree unless told otherwise.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Any, Sequence

import numpy as np

from .coins import CoinKind, CoinSpec, coin
from .linalg import as_cmatrix, is_unitary

__all__ = [
    "Graph",
    "DirectedEdgeIndex",
    "build_graph",
    "mark_vertex",
    "scattering_from_coin",
    "coin_from_scattering",
    "graph_to_dict",
    "OPPOSITE",
]

OPPOSITE = {"R": "L", "L": "R", "U": "D", "D": "U"}


@dataclass(frozen=True, eq=False)
class Graph:
    kind: str
    params: dict
    ports: tuple[tuple[int, ...], ...]
    scattering: tuple[np.ndarray, ...]
    labels: tuple[tuple[str, ...], ...] = ()
    coords: tuple[tuple[int, ...], ...] = ()
    marked: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        for v, nbrs in enumerate(self.ports):
            s = self.scattering[v]
            if s.shape != (len(nbrs), len(nbrs)):
                raise ValueError(f"vertex {v}: scattering matrix is {s.shape[0]}x{s.shape[1]} but the vertex has degree {len(nbrs)}")
            for u in nbrs:
                if v not in self.ports[u]:
                    raise ValueError(f"edge {v}->{u} has no reverse")

    @property
    def n_vertices(self) -> int:
        return len(self.ports)

    def degree(self, v: int) -> int:
        return len(self.ports[v])

    @property
    def n_edges(self) -> int:
        return sum(len(p) for p in self.ports) // 2

    def edges(self) -> list[tuple[int, int]]:
        return sorted({(min(u, v), max(u, v)) for u, nbrs in enumerate(self.ports) for v in nbrs})

    def port_of(self, v: int, u: int) -> int:
        """The port of ``v`` that faces ``u``."""
        return self.ports[v].index(u)

    def is_regular(self) -> bool:
        return len({len(p) for p in self.ports}) == 1

    def same_network(self, other: "Graph") -> bool:
        return (
            self.ports == other.ports
            and len(self.scattering) == len(other.scattering)
            and all(np.array_equal(a, b) for a, b in zip(self.scattering, other.scattering))
        )

    def edge_index(self) -> "DirectedEdgeIndex":
        return DirectedEdgeIndex.from_graph(self)


@dataclass(frozen=True, eq=False)
class DirectedEdgeIndex:
    """Dense numbering of directed edges, ordered by (tail, tail port)."""

    tail: np.ndarray
    head: np.ndarray
    tail_port: np.ndarray
    head_port: np.ndarray
    out_edges: tuple[np.ndarray, ...]
    in_edges: tuple[np.ndarray, ...]
    lookup: dict = field(repr=False)

    @classmethod
    def from_graph(cls, g: Graph) -> "DirectedEdgeIndex":
        tail, head, tport = [], [], []
        for v, nbrs in enumerate(g.ports):
            for k, u in enumerate(nbrs):
                tail.append(v)
                head.append(u)
                tport.append(k)
        lookup = {(t, h): e for e, (t, h) in enumerate(zip(tail, head))}
        hport = [g.port_of(h, t) for t, h in zip(tail, head)]
        out_edges = tuple(np.array([lookup[(v, u)] for u in nbrs], dtype=int) for v, nbrs in enumerate(g.ports))
        in_edges = tuple(np.array([lookup[(u, v)] for u in nbrs], dtype=int) for v, nbrs in enumerate(g.ports))
        as_arr = lambda xs: np.array(xs, dtype=int)  # noqa: E731
        return cls(as_arr(tail), as_arr(head), as_arr(tport), as_arr(hport), out_edges, in_edges, lookup)

    def __len__(self) -> int:
        return len(self.tail)

    def index(self, tail: int, head: int) -> int:
        try:
            return self.lookup[(tail, head)]
        except KeyError:
            raise KeyError(f"no directed edge {tail}->{head}") from None

    def edge(self, e: int) -> tuple[int, int]:
        return int(self.tail[e]), int(self.head[e])


# --------------------------------------------------------------------------
# Topologies
# --------------------------------------------------------------------------


def _line(n: int):
    if n < 2:
        raise ValueError("Line needs at least 2 sites")
    ports, labels = [], []
    for v in range(n):
        p, lab = [], []
        if v + 1 < n:
            p.append(v + 1)
            lab.append("R")
        if v > 0:
            p.append(v - 1)
            lab.append("L")
        ports.append(tuple(p))
        labels.append(tuple(lab))
    return ports, labels, [(v,) for v in range(n)]


def _cycle(n: int):
    if n < 3:
        raise ValueError("Cycle needs at least 3 sites")
    ports = [((v + 1) % n, (v - 1) % n) for v in range(n)]
    return ports, [("R", "L")] * n, [(v,) for v in range(n)]


_LATTICE_STEPS = (("L", -1, 0), ("U", 0, 1), ("R", 1, 0), ("D", 0, -1))


def _rect(w: int, h: int, toroidal: bool):
    if w < 1 or h < 1:
        raise ValueError("lattice sizes must be positive")
    if toroidal and (w < 3 or h < 3):
        raise ValueError("toroidal lattices need w, h >= 3 to stay simple graphs")
    ports, labels, coords = [], [], []
    for y in range(h):
        for x in range(w):
            p, lab = [], []
            for name, dx, dy in _LATTICE_STEPS:
                nx, ny = x + dx, y + dy
                if toroidal:
                    nx, ny = nx % w, ny % h
                elif not (0 <= nx < w and 0 <= ny < h):
                    continue
                p.append(nx + w * ny)
                lab.append(name)
            ports.append(tuple(p))
            labels.append(tuple(lab))
            coords.append((x, y))
    return ports, labels, coords


def _hex(w: int, h: int):
    if w < 4 or h < 2 or w % 2 or h % 2:
        raise ValueError("HexLattice needs even w >= 4 and even h >= 2 (periodic brick wall)")
    ports, labels, coords = [], [], []
    for y in range(h):
        for x in range(w):
            right = (x + 1) % w + w * y
            left = (x - 1) % w + w * y
            if (x + y) % 2 == 0:
                p, lab = (x + w * ((y + 1) % h), right, left), ("U", "R", "L")
            else:
                p, lab = (right, x + w * ((y - 1) % h), left), ("R", "D", "L")
            ports.append(p)
            labels.append(lab)
            coords.append((x, y))
    return ports, labels, coords


def _hypercube(d: int):
    if d < 1:
        raise ValueError("Hypercube dimension must be positive")
    n = 1 << d
    ports = [tuple(v ^ (1 << k) for k in range(d)) for v in range(n)]
    labels = [tuple(f"x{k}" for k in range(d))] * n
    coords = [tuple((v >> k) & 1 for k in range(d)) for v in range(n)]
    return ports, labels, coords


def _glued_tree(depth: int, seed: int):
    if depth < 1:
        raise ValueError("GluedTree depth must be at least 1")
    size = (1 << (depth + 1)) - 1
    first_leaf = (1 << depth) - 1
    adj: list[list[int]] = [[] for _ in range(2 * size)]
    labels: list[list[str]] = [[] for _ in range(2 * size)]
    for base in (0, size):
        for i in range(size):
            v = base + i
            if i > 0:
                adj[v].append(base + (i - 1) // 2)
                labels[v].append("parent")
            if i < first_leaf:
                adj[v] += [base + 2 * i + 1, base + 2 * i + 2]
                labels[v] += ["left", "right"]
    rng = np.random.default_rng(seed)
    left = first_leaf + rng.permutation(1 << depth)
    right = size + first_leaf + rng.permutation(1 << depth)
    n_leaves = 1 << depth
    # alternating cycle left[0] right[0] left[1] right[1] ... back to left[0]
    for k in range(n_leaves):
        a, b, a_next = int(left[k]), int(right[k]), int(left[(k + 1) % n_leaves])
        for u, v in ((a, b), (b, a_next)):
            adj[u].append(v)
            adj[v].append(u)
            labels[u].append("glue")
            labels[v].append("glue")
    coords = [(0, _level(i)) for i in range(size)] + [(1, _level(i)) for i in range(size)]
    return [tuple(a) for a in adj], [tuple(x) for x in labels], coords


def _level(i: int) -> int:
    return (i + 1).bit_length() - 1


_BUILDERS = {
    "line": (_line, ("n",)),
    "cycle": (_cycle, ("n",)),
    "rect": (_rect, ("w", "h", "toroidal")),
    "hex": (_hex, ("w", "h")),
    "hypercube": (_hypercube, ("d",)),
    "glued_tree": (_glued_tree, ("depth", "seed")),
}


def _default_scattering(default_coin, degree: int, v: int, boundary_grover: bool) -> np.ndarray:
    if isinstance(default_coin, (str, CoinKind)):
        kind = CoinKind(default_coin)
        try:
            return coin(CoinSpec(kind, degree))
        except ValueError as exc:
            raise ValueError(f"vertex {v}: {exc}") from None
    m = coin(default_coin) if isinstance(default_coin, CoinSpec) else as_cmatrix(default_coin)
    if m.shape == (degree, degree):
        return m
    if boundary_grover:
        return coin(CoinSpec(CoinKind.GROVER, degree))
    raise ValueError(f"vertex {v}: coin dimension {m.shape[0]} does not match degree {degree}")


def build_graph(kind: str, *, default_coin: Any = "grover", boundary_grover: bool | None = None, **params) -> Graph:
    """Build a named substrate.

    ``default_coin`` is a coin kind (instantiated at each vertex's degree),
    a :class:`CoinSpec` or an explicit matrix.  For the last two, vertices of a
    different degree get a reduced Grover matrix when the topology has
    boundaries (``boundary_grover`` defaults to that), otherwise it is an error.
    """
    try:
        builder, names = _BUILDERS[kind]
    except KeyError:
        raise ValueError(f"unknown graph kind {kind!r}; choose from {sorted(_BUILDERS)}") from None
    defaults = {"toroidal": False, "seed": 0}
    args = {n: params.get(n, defaults.get(n)) for n in names}
    extra = set(params) - set(names)
    if extra or any(v is None for v in args.values()):
        raise ValueError(f"{kind} takes parameters {names}, got {sorted(params)}")
    ports, labels, coords = builder(*(args[n] for n in names))
    if boundary_grover is None:
        boundary_grover = kind in ("line", "glued_tree") or (kind == "rect" and not args["toroidal"])
    mats = []
    for v, p in enumerate(ports):
        m = _default_scattering(default_coin, len(p), v, boundary_grover)
        if not is_unitary(m, 1e-12):
            raise ValueError(f"vertex {v}: scattering matrix is not unitary")
        m = m.copy()
        m.setflags(write=False)
        mats.append(m)
    return Graph(kind, args, tuple(tuple(int(u) for u in p) for p in ports), tuple(mats), tuple(labels), tuple(coords))


def mark_vertex(g: Graph, v: int, marked_coin) -> Graph:
    m = as_cmatrix(marked_coin)
    if not 0 <= v < g.n_vertices:
        raise ValueError(f"vertex {v} out of range")
    if m.shape != (g.degree(v), g.degree(v)):
        raise ValueError(f"vertex {v} has degree {g.degree(v)}, marked coin is {m.shape[0]}x{m.shape[1]}")
    if not is_unitary(m, 1e-10):
        raise ValueError("marked coin is not unitary")
    m.setflags(write=False)
    mats = list(g.scattering)
    mats[v] = m
    return replace(g, scattering=tuple(mats), marked=g.marked | {v})


def _reversal(labels: Sequence[str]) -> np.ndarray:
    d = len(labels)
    perm = np.zeros((d, d))
    for k, lab in enumerate(labels):
        perm[labels.index(OPPOSITE[lab]), k] = 1.0
    return perm


def scattering_from_coin(c, labels: Sequence[str] = ("L", "U", "R", "D")) -> np.ndarray:
    """Port-basis matrix equivalent to coin ``c`` under a moving shift.

    Light entering through the port labelled ``X`` travels in direction
    ``opposite(X)``; the coin acts on that direction, and the output direction
    names the output port.  Hence ``S = C @ P`` with ``P`` the port reversal.
    """
    return as_cmatrix(c) @ _reversal(labels)


def coin_from_scattering(s, labels: Sequence[str] = ("L", "U", "R", "D")) -> np.ndarray:
    return as_cmatrix(s) @ _reversal(labels).T


def graph_to_dict(g: Graph) -> dict:
    unique: list[np.ndarray] = []
    refs = []
    for m in g.scattering:
        for k, u in enumerate(unique):
            if u.shape == m.shape and np.array_equal(u, m):
                refs.append(k)
                break
        else:
            refs.append(len(unique))
            unique.append(m)
    return {
        "kind": g.kind,
        "params": dict(g.params),
        "vertices": g.n_vertices,
        "edges": [list(e) for e in g.edges()],
        "coins": refs,
        "coin_table": [[[[float(z.real), float(z.imag)] for z in row] for row in m] for m in unique],
        "marked": sorted(g.marked),
    }
