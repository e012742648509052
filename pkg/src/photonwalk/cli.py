"""Command-line front end.

Every subcommand validates its inputs, computes, and only then writes the
result (JSON by default, CSV with ``--format csv``) to ``--out`` or stdout.
Files are written to a temporary name and renamed, so a failed run never
leaves a partial file.  ``--config FILE`` supplies the same options as a JSON
object; flags given on the command line win.

Exit codes: 0 success, 2 usage or configuration error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from dataclasses import replace
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import coins, decompose, devices, graphs, walk
from .linalg import SingularMatrixError, aligned_residual, max_norm

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3
DECOMPOSE_TOL = 1e-8


class UsageError(ValueError):
    pass


class NumericalFailure(ArithmeticError):
    def __init__(self, message: str, payload: dict | None = None):
        super().__init__(message)
        self.payload = payload


# --------------------------------------------------------------------------
# Parsing helpers
# --------------------------------------------------------------------------


def _floats(value, what: str) -> list[float]:
    if value is None:
        return []
    items = value.split(",") if isinstance(value, str) else list(value)
    try:
        out = [float(x) for x in items if not (isinstance(x, str) and not x.strip())]
    except (TypeError, ValueError):
        raise UsageError(f"{what}: expected comma-separated numbers, got {value!r}") from None
    if not all(math.isfinite(x) for x in out):
        raise UsageError(f"{what}: values must be finite")
    return out


def _complex_entry(x) -> complex:
    if isinstance(x, (list, tuple)):
        if len(x) != 2:
            raise UsageError(f"complex entries are [re, im] pairs, got {x!r}")
        return complex(float(x[0]), float(x[1]))
    if isinstance(x, str):
        return complex(x.replace(" ", ""))
    return complex(float(x))


def _complex_vector(value, what: str) -> np.ndarray:
    items = value.split(",") if isinstance(value, str) else list(value)
    try:
        return np.array([_complex_entry(x) for x in items], dtype=np.complex128)
    except (TypeError, ValueError):
        raise UsageError(f"{what}: cannot parse {value!r} as complex numbers") from None


def load_matrix(path: str) -> np.ndarray:
    """Read ``{"matrix": [[[re, im], ...], ...]}`` or the bare nested list."""
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path} is not valid JSON: {exc}") from None
    rows = data.get("matrix") if isinstance(data, dict) else data
    if not isinstance(rows, list) or not rows or not all(isinstance(r, list) for r in rows):
        raise UsageError(f"{path}: expected a matrix as a list of rows")
    try:
        m = np.array([[_complex_entry(x) for x in row] for row in rows], dtype=np.complex128)
    except (TypeError, ValueError):
        raise UsageError(f"{path}: matrix entries must be numbers or [re, im] pairs") from None
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise UsageError(f"{path}: expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise UsageError(f"{path}: matrix entries must be finite")
    return m


def _standard_coin(name: str, d: int) -> np.ndarray:
    conj = name == "dft_conj"
    kind = "dft" if conj else name
    try:
        return coins.coin(coins.CoinSpec(coins.CoinKind(kind), d, conjugate=conj))
    except ValueError as exc:
        raise UsageError(str(exc)) from None


_COIN_NAMES = ("hadamard", "grover", "dft", "dft_conj")


def _coin_matches(m: np.ndarray, tol: float) -> tuple[dict, list]:
    d = m.shape[0]
    residuals = {}
    for name in _COIN_NAMES:
        if name == "hadamard" and d != 2:
            continue
        residuals[name] = aligned_residual(m, _standard_coin(name, d))
    return residuals, [k for k, r in residuals.items() if r <= tol]


# --------------------------------------------------------------------------
# Output
# --------------------------------------------------------------------------


def _csv_text(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _json_text(payload: dict) -> str:
    try:
        return json.dumps(payload, indent=2, allow_nan=False) + "\n"
    except ValueError:
        raise NumericalFailure("result contains non-finite numbers") from None


def _write(text: str, out: str | None) -> None:
    if not out:
        sys.stdout.write(text)
        return
    target = Path(out)
    fd, tmp = tempfile.mkstemp(dir=target.parent if str(target.parent) else ".", prefix=f".{target.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# --------------------------------------------------------------------------
# Commands.  Each returns (payload, csv_header, csv_rows).
# --------------------------------------------------------------------------

DEVICE_KINDS = (
    "bs",
    "mz",
    "michelson",
    "coupler2",
    "tritter",
    "quarter",
    "reversible_tritter",
    "reversible_quarter",
    "unbiased3",
    "unbiased4",
)


def _bs_spec(args) -> devices.BeamSplitterSpec:
    t = args.t_mag
    if args.bs_type == "real":
        return devices.BeamSplitterSpec.real_type(t)
    return devices.BeamSplitterSpec.symmetric(t)


def cmd_device(args):
    kind = args.kind
    params: dict[str, Any] = {}
    if kind == "bs":
        if args.phases is not None:
            ph = _floats(args.phases, "--phases")
            if len(ph) != 4:
                raise UsageError("bs --phases takes phi13,phi24,phi14,phi23")
            spec = devices.BeamSplitterSpec(args.t_mag, *ph)
        else:
            spec = _bs_spec(args)
        params = {"t_mag": spec.t_mag, "phi13": spec.phi13, "phi24": spec.phi24, "phi14": spec.phi14, "phi23": spec.phi23}
        m = devices.beam_splitter(spec)
    elif kind == "mz":
        params = {"phi": args.phi}
        m = devices.mach_zehnder(args.phi)
    elif kind == "michelson":
        mirror = _floats(args.mirror if args.mirror is not None else "0,0", "--mirror")
        params = {"mirror": mirror, "bs_type": args.bs_type}
        m = devices.michelson(mirror, _bs_spec(args))
    elif kind in ("coupler2", "tritter", "quarter"):
        params = {"kz": args.kz, "bz": args.bz}
        if kind == "quarter":
            params["kz2"] = args.kz2 if args.kz2 is not None else args.kz
        spec = devices.CouplerSpec.from_kz(args.kz, params.get("kz2"), args.bz)
        m = {"coupler2": devices.coupler2, "tritter": devices.tritter, "quarter": devices.quarter}[kind](spec)
    else:
        family = coins.Family(kind)
        if args.phases is None:
            raise UsageError(f"{kind} needs --phases ({', '.join(family.param_names)})")
        ph = _floats(args.phases, "--phases")
        params = coins._record(family, ph)
        m = coins.device_matrix(family, ph)
    rec = devices.device_record(kind, params, m)
    rec["probabilities"] = (np.abs(m) ** 2).tolist()
    if m.shape[0] in (2, 3, 4):
        residuals, matched = _coin_matches(m, args.match_tol)
        rec["coin_residuals"] = residuals
        rec["matches"] = matched
    rows = [[j, k, m[j, k].real + 0.0, m[j, k].imag + 0.0, float(abs(m[j, k]) ** 2)] for j in range(m.shape[0]) for k in range(m.shape[1])]
    return rec, ["row", "col", "re", "im", "prob"], rows


def cmd_decompose(args):
    if not args.input:
        raise UsageError("decompose needs an input matrix file")
    u = load_matrix(args.input)
    fn = decompose.reck_decompose if args.model == "reck" else decompose.clements_decompose
    plan = fn(u)
    residual = max_norm(decompose.reconstruct(plan) - u)
    payload = {
        "plan": decompose.plan_to_dict(plan),
        "report": decompose.mesh_report(plan),
        "residual": residual,
    }
    print(f"round-trip residual {residual:.3e}", file=sys.stderr)
    if residual > DECOMPOSE_TOL:
        raise NumericalFailure(f"round-trip residual {residual:.3e} exceeds {DECOMPOSE_TOL:g}")
    rows = [[n, s.i, s.j, s.theta, s.phi] for n, s in enumerate(plan.steps)]
    return payload, ["step", "i", "j", "theta", "phi"], rows


def cmd_fit(args):
    if args.family is None:
        raise UsageError("fit needs --family")
    family = coins.Family(args.family)
    if args.target in _COIN_NAMES:
        target, kind = _standard_coin(args.target, family.ports), args.target
    else:
        target, kind = load_matrix(args.target), "custom"
    free = None
    if args.free:
        free = tuple(x.strip() for x in (args.free.split(",") if isinstance(args.free, str) else args.free))
    fixed = {}
    if args.fixed:
        items = args.fixed.split(",") if isinstance(args.fixed, str) else args.fixed
        for item in items:
            name, sep, value = str(item).partition("=")
            if not sep:
                raise UsageError(f"--fixed entries look like name=value, got {item!r}")
            fixed[name.strip()] = _floats(value, f"--fixed {name}")[0]
    problem = coins.RealizationProblem(family, target, kind, free, fixed)
    result = coins.fit_phases(problem, restarts=args.restarts, budget=args.budget, seed=args.seed, tol=args.tol)
    payload = result.to_dict()
    payload["verification"] = coins.verify_realization(problem, result.phases, tol=args.tol).to_dict()
    rows = [[k, v] for k, v in result.phases.items()]
    if not result.converged:
        raise NumericalFailure(f"fit did not reach {args.tol:g} (best residual {result.residual:.3e})", (payload, ["name", "phase"], rows))
    return payload, ["name", "phase"], rows


def _graph_params(args) -> dict:
    names = {
        "line": ("n",),
        "cycle": ("n",),
        "rect": ("w", "h", "toroidal"),
        "hex": ("w", "h"),
        "hypercube": ("d",),
        "glued_tree": ("depth", "seed"),
    }[args.graph]
    out = {}
    for n in names:
        v = getattr(args, n)
        if v is None:
            raise UsageError(f"graph {args.graph} needs --{n}")
        out[n] = v
    return out


def _build(args, coin_name: str | None = None) -> graphs.Graph:
    coin_name = coin_name or args.coin or "grover"
    params = _graph_params(args)
    if coin_name in ("dft_conj", "hadamard"):
        kinds = {len(p) for p in graphs.build_graph(args.graph, **params).ports}
        d = max(kinds)
        g = graphs.build_graph(args.graph, default_coin=_standard_coin(coin_name, d), **params)
    else:
        g = graphs.build_graph(args.graph, default_coin=coin_name, **params)
    if getattr(args, "from_coin", False):
        if args.graph not in ("line", "cycle", "rect"):
            raise UsageError("--from-coin needs a substrate with direction labels (line, cycle, rect)")
        mats = []
        for v, s in enumerate(g.scattering):
            if len(g.labels[v]) == s.shape[0] and all(l in graphs.OPPOSITE for l in g.labels[v]) and s.shape[0] > 1 and all(
                graphs.OPPOSITE[l] in g.labels[v] for l in g.labels[v]
            ):
                s = graphs.scattering_from_coin(s, g.labels[v])
                s.setflags(write=False)
            mats.append(s)
        g = replace(g, scattering=tuple(mats))
    return g


def _walk_payload(substrate, model, steps, distributions=None, positions=None, sigma=None, search=None, hitting=None, **extra):
    payload = {
        "substrate": substrate,
        "model": model,
        "steps": steps,
        "positions": None if positions is None else [int(x) for x in positions],
        "distributions": None if distributions is None else [[float(p) for p in d] for d in distributions],
        "sigma_series": None if sigma is None else [float(x) for x in sigma],
        "search_series": None if search is None else [float(x) for x in search],
        "hitting": hitting,
    }
    payload.update(extra)
    return payload


def _check_steps(steps):
    if steps is None or steps < 0:
        raise UsageError("--steps must be a non-negative integer")


def cmd_walk(args):
    _check_steps(args.steps)
    if args.model not in ("coin", "edge"):
        raise UsageError("--model is coin or edge")
    if args.graph == "line" and args.model == "coin":
        coin_name = args.coin or "hadamard"
        c = _standard_coin(coin_name, 2)
        state = _complex_vector(args.coin_state or "1,0", "--coin-state")
        if state.size != 2:
            raise UsageError("--coin-state needs two amplitudes (R, L)")
        init = walk.line_state(args.steps, state, args.start or 0)
        run = walk.run_walk("line", "coin", init, args.steps, c)
        sigma = walk.spread_stddev(run)
        substrate = {"kind": "line", "params": {"sites": int(run.positions.size)}}
        payload = _walk_payload(substrate, "coin", args.steps, run.distributions, run.positions, sigma, coin=coin_name)
    else:
        g = _build(args)
        substrate = {"kind": g.kind, "params": dict(g.params)}
        start = args.start or 0
        if not 0 <= start < g.n_vertices:
            raise UsageError(f"--start must be a vertex of the {g.n_vertices}-vertex graph")
        if args.model == "coin":
            d = g.degree(0)
            c = _standard_coin(args.coin or ("hadamard" if d == 2 else "grover"), d)
            vec = _complex_vector(args.coin_state, "--coin-state") if args.coin_state else np.eye(d)[0]
            init = walk.lattice_coin_state(g, start, vec)
            run = walk.run_walk(g, "coin", init, args.steps, c)
        else:
            init = walk.uniform_edge_state(g) if args.initial == "uniform" else walk.edge_state_from_vertex(g, start)
            run = walk.run_walk(g, "edge", init, args.steps)
        payload = _walk_payload(substrate, args.model, args.steps, run.distributions, run.positions, coin=args.coin)
    rows = [
        [t, int(x), float(p)]
        for t, dist in enumerate(run.distributions)
        for x, p in zip(run.positions, dist)
    ]
    return payload, ["t", "site", "prob"], rows


def _marked_coin(name: str, d: int) -> np.ndarray:
    if name == "minus_identity":
        return -np.eye(d)
    if name == "identity":
        return np.eye(d)
    return _standard_coin(name, d)


def cmd_search(args):
    _check_steps(args.steps)
    g = _build(args)
    if args.marked is not None:
        if not 0 <= args.marked < g.n_vertices:
            raise UsageError(f"--marked must be a vertex of the {g.n_vertices}-vertex graph")
        g = graphs.mark_vertex(g, args.marked, _marked_coin(args.marked_coin, g.degree(args.marked)))
        res = walk.spatial_search(g, args.steps)
    else:
        res = walk.spatial_search(g, args.steps, vertex=args.vertex)
    substrate = {"kind": g.kind, "params": dict(g.params)}
    payload = _walk_payload(
        substrate,
        "edge",
        args.steps,
        search=res.series,
        vertex=res.vertex,
        marked=sorted(g.marked),
        baseline=res.baseline,
        peak=res.peak,
        peak_step=res.peak_step,
    )
    return payload, ["t", "p_marked"], [[t, float(p)] for t, p in enumerate(res.series)]


def cmd_hit(args):
    _check_steps(args.steps)
    if args.start is None or args.target is None:
        raise UsageError("hit needs --start and --target")
    if args.threshold is None:
        raise UsageError("hit needs --threshold")
    g = _build(args)
    for v in (args.start, args.target):
        if not 0 <= v < g.n_vertices:
            raise UsageError(f"vertex {v} is not in the {g.n_vertices}-vertex graph")
    res = walk.hitting_time(g, args.start, args.target, args.steps, args.threshold)
    substrate = {"kind": g.kind, "params": dict(g.params)}
    payload = _walk_payload(substrate, "edge", args.steps, hitting=res.to_dict(), start=args.start, target=args.target)
    rows = [[t, float(q), float(c)] for t, (q, c) in enumerate(zip(res.quantum_series, res.classical_series))]
    return payload, ["t", "quantum", "classical"], rows


def _setting_residual(name: str) -> tuple[float, float]:
    family, phases, spec = coins.PUBLISHED_SETTINGS[name]
    problem = coins.RealizationProblem(family, coins.coin(spec))
    published = coins.verify_realization(problem, phases).residual
    best = published
    if name in coins.ALTERNATIVE_SETTINGS:
        _, alt, _ = coins.ALTERNATIVE_SETTINGS[name]
        best = min(best, coins.verify_realization(problem, alt).residual)
    return published, best


def _mesh_residual(model: str, target: np.ndarray) -> float:
    fn = decompose.reck_decompose if model == "reck" else decompose.clements_decompose
    return max_norm(decompose.reconstruct(fn(target)) - target)


def cmd_report(args):
    designs = []
    for n, prefix, name in ((3, "unbiased3", "3-port"), (4, "unbiased4", "4-port")):
        designs.append((name, n, "unbiased", prefix, n, None, None))
    designs.append(("Rev Tritter", 3, "reversible", "tritter", None, None, None))
    designs.append(("Rev Quarter", 4, "reversible", "quarter", None, None, None))
    for name, n, model in (("3-Reck", 3, "reck"), ("4-Reck", 4, "reck"), ("4-Clements", 4, "clements")):
        designs.append((name, n, "mesh", model, n * (n + 1), n * (n - 1) // 2, n * (n - 1)))
    out = []
    for name, n, cls, key, bs, cells, tunable in designs:
        row = {
            "design": name,
            "ports": n,
            "bs_count": bs,
            "mz_cells": cells,
            "bs_count_tunable": tunable,
            "coherence_length": "long" if cls == "unbiased" else "short",
            "general_unitary": cls == "mesh",
            "self_transpose_only": cls != "mesh",
        }
        for coin_name, kind in (("grover", coins.CoinKind.GROVER), ("fourier", coins.CoinKind.DFT)):
            if cls == "mesh":
                r = _mesh_residual(key, coins.coin(coins.CoinSpec(kind, n)))
                row[f"{coin_name}_residual"] = r
                row[f"{coin_name}_published_residual"] = None
            else:
                published, best = _setting_residual(f"{key}_{coin_name}")
                row[f"{coin_name}_residual"] = best
                row[f"{coin_name}_published_residual"] = published
            row[coin_name] = row[f"{coin_name}_residual"] <= 1e-9
        out.append(row)
    header = list(out[0])
    rows = [[r[h] for h in header] for r in out]
    return {"designs": out}, header, rows


# --------------------------------------------------------------------------
# Parser
# --------------------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser, seed: bool = False) -> None:
    p.add_argument("--out", help="output file (default: stdout)")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--config", help="JSON file with option values")
    if seed:
        p.add_argument("--seed", type=int, default=0, help="RNG seed")


def _add_graph(p: argparse.ArgumentParser) -> None:
    p.add_argument("--graph", choices=("line", "cycle", "rect", "hex", "hypercube", "glued_tree"), default="rect")
    p.add_argument("--n", type=int, help="line/cycle length")
    p.add_argument("--w", type=int, help="lattice width")
    p.add_argument("--h", type=int, help="lattice height")
    p.add_argument("--toroidal", action="store_true", default=None)
    p.add_argument("--d", type=int, help="hypercube dimension")
    p.add_argument("--depth", type=int, help="glued-tree depth")
    p.add_argument("--coin", choices=_COIN_NAMES, help="vertex coin (default grover)")
    p.add_argument("--from-coin", action="store_true", default=False, help="use S = C P (moving-shift equivalent) on labelled lattices")


COMMANDS: dict[str, Callable] = {}


def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    parser = argparse.ArgumentParser(prog="photonwalk", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    subs = {}

    p = sub.add_parser("device", help="transfer matrix of an optical device")
    p.add_argument("kind", choices=DEVICE_KINDS)
    p.add_argument("--phi", type=float, default=0.0, help="Mach-Zehnder internal phase")
    p.add_argument("--mirror", help="Michelson mirror phases a,b")
    p.add_argument("--bs-type", choices=("real", "symmetric"), default="symmetric")
    p.add_argument("--t-mag", type=float, default=1 / math.sqrt(2))
    p.add_argument("--kz", type=float, default=0.0)
    p.add_argument("--kz2", type=float)
    p.add_argument("--bz", type=float, default=0.0)
    p.add_argument("--phases", help="comma-separated phases, in the family's parameter order")
    p.add_argument("--match-tol", type=float, default=1e-3, help="tolerance for flagging standard coins")
    _add_common(p)
    subs["device"] = p
    COMMANDS["device"] = cmd_device

    p = sub.add_parser("decompose", help="factor a unitary into a mesh of two-mode cells")
    p.add_argument("input", nargs="?", help="JSON matrix file")
    p.add_argument("--model", choices=("reck", "clements"), default="clements")
    _add_common(p)
    subs["decompose"] = p
    COMMANDS["decompose"] = cmd_decompose

    p = sub.add_parser("fit", help="search device phases that realise a coin")
    p.add_argument("--family", choices=[f.value for f in coins.Family])
    p.add_argument("--target", default="grover", help=f"{', '.join(_COIN_NAMES)} or a JSON matrix file")
    p.add_argument("--free", help="comma-separated parameter names to vary (default all)")
    p.add_argument("--fixed", help="comma-separated name=value for the other parameters")
    p.add_argument("--restarts", type=int, default=32)
    p.add_argument("--budget", type=int, default=20000)
    p.add_argument("--tol", type=float, default=1e-6)
    _add_common(p, seed=True)
    subs["fit"] = p
    COMMANDS["fit"] = cmd_fit

    p = sub.add_parser("walk", help="run a quantum walk and record distributions")
    _add_graph(p)
    p.add_argument("--model", choices=("coin", "edge"), default="coin")
    p.add_argument("--steps", type=int, default=10)
    p.add_argument("--start", type=int, help="start position (line) or vertex")
    p.add_argument("--coin-state", help="initial coin amplitudes, e.g. 1,0 or 0.7071067811865476,0.7071067811865476j")
    p.add_argument("--initial", choices=("vertex", "uniform"), default="vertex", help="edge-model initial state")
    _add_common(p, seed=True)
    subs["walk"] = p
    COMMANDS["walk"] = cmd_walk

    p = sub.add_parser("search", help="spatial search on a graph with a marked vertex")
    _add_graph(p)
    p.add_argument("--marked", type=int, help="marked vertex (omit for an unmarked control)")
    p.add_argument("--marked-coin", choices=("minus_identity", "identity") + _COIN_NAMES, default="minus_identity")
    p.add_argument("--vertex", type=int, default=0, help="vertex to watch when nothing is marked")
    p.add_argument("--steps", type=int, default=64)
    _add_common(p, seed=True)
    subs["search"] = p
    COMMANDS["search"] = cmd_search

    p = sub.add_parser("hit", help="quantum and classical hitting times")
    _add_graph(p)
    p.add_argument("--start", type=int)
    p.add_argument("--target", type=int)
    p.add_argument("--threshold", type=float)
    p.add_argument("--steps", type=int, default=100)
    _add_common(p, seed=True)
    subs["hit"] = p
    COMMANDS["hit"] = cmd_hit

    p = sub.add_parser("report", help="compare device families")
    _add_common(p)
    subs["report"] = p
    COMMANDS["report"] = cmd_report
    return parser, subs


_META = {"command", "config"}


def _parse(argv: list[str]):
    parser, subs = build_parser()
    args = parser.parse_args(argv)
    if not args.config:
        return args
    try:
        config = json.loads(Path(args.config).read_text())
    except OSError as exc:
        raise UsageError(f"cannot read config {args.config}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {args.config} is not valid JSON: {exc}") from None
    if not isinstance(config, dict):
        raise UsageError("config must be a JSON object")
    sub = subs[args.command]
    actions = {a.dest: a for a in sub._actions if a.dest not in _META and a.dest != "help"}
    config = {k.replace("-", "_"): v for k, v in config.items()}
    unknown = sorted(set(config) - set(actions))
    if unknown:
        raise UsageError(f"unknown config keys for {args.command}: {', '.join(unknown)}")
    for key, value in config.items():
        act = actions[key]
        if act.choices is not None and value not in act.choices:
            raise UsageError(f"config {key}: {value!r} is not one of {list(act.choices)}")
        if act.type in (int, float) and (isinstance(value, bool) or not isinstance(value, (int, float))):
            raise UsageError(f"config {key}: expected a number, got {value!r}")
        if act.type is int and not isinstance(value, int):
            raise UsageError(f"config {key}: expected an integer, got {value!r}")
        if isinstance(act, (argparse._StoreTrueAction,)) and not isinstance(value, bool):
            raise UsageError(f"config {key}: expected true or false")
    sub.set_defaults(**config)
    # positional arguments cannot take defaults from a config when omitted
    args = parser.parse_args(argv)
    for key, value in config.items():
        if getattr(args, key, None) is None:
            setattr(args, key, value)
    return args


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = _parse(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    code = EXIT_OK
    try:
        try:
            payload, header, rows = COMMANDS[args.command](args)
        except NumericalFailure as exc:
            if exc.payload is None:
                raise
            payload, header, rows = exc.payload
            print(f"error: {exc}", file=sys.stderr)
            code = EXIT_NUMERIC
        text = _csv_text(header, rows) if args.format == "csv" else _json_text(payload)
        _write(text, args.out)
    except (
        decompose.NotUnitaryError,
        coins.NotSelfTransposeError,
        ArithmeticError,
        SingularMatrixError,
        np.linalg.LinAlgError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return code
