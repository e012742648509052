"""Transfer matrices of the optical building blocks.

Conventions
-----------
* Matrices act on column vectors of mode amplitudes: ``out = M @ in``.
* ``M[j, k]`` is the amplitude to leave through port ``j`` after entering
  through port ``k``.
* Reversible devices (Michelson, reversible tritter/quarter, multiports) are
  self-transpose, ``M == M.T``.

The unbiased multiports are modelled as a ring of 50/50 beam splitters with
``i`` on reflection.  Splitter ``X`` carries external port ``X`` and the mirror
unit ``X`` on one side, and the links to its ring neighbours ``X+1`` and
``X-1`` on the other.  Transmission pairs external <-> link(X+1) and
mirror <-> link(X-1); reflection pairs external <-> link(X-1) and
mirror <-> link(X+1).  Each mirror unit contributes a pure ``exp(i*phi_X)``.
This wiring reproduces the printed multi-path series term by term.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .linalg import MAX_CONDITION, SingularMatrixError, as_cmatrix, solve, transpose_residual, unitarity_residual

__all__ = [
    "BeamSplitterSpec",
    "CouplerSpec",
    "PhaseConstraintError",
    "BS1",
    "BS2",
    "beam_splitter",
    "mach_zehnder",
    "michelson",
    "coupler2",
    "tritter",
    "quarter",
    "reversible_tritter",
    "reversible_quarter",
    "apply_port_phases",
    "LoopNetwork",
    "PathTerm",
    "PathSum",
    "multiport_network",
    "two_port_network",
    "loop_closed_form",
    "unbiased_multiport_path_sum",
    "unbiased_multiport_closed_form",
    "unbiased_multiport_closed_form_batch",
    "unbiased_multiport_path_sum_batch",
    "NonDecayingLoopError",
    "device_record",
    "PORT_LABELS",
]

PORT_LABELS = "ABCD"
_SQRT1_2 = 1.0 / math.sqrt(2.0)


class PhaseConstraintError(ValueError):
    pass


class NonDecayingLoopError(ArithmeticError):
    pass


def _phases(values: Sequence[float], n: int, what: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float).reshape(-1)
    if arr.size != n:
        raise ValueError(f"{what} needs {n} phases, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{what} must be finite")
    return arr


# --------------------------------------------------------------------------
# Beam splitters and two-mode interferometers
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class BeamSplitterSpec:
    """Lossless two-port splitter ``[[T13, R23], [R14, T24]]``.

    ``t_mag`` is |T|; |R| follows from energy conservation.  When both
    |T| and |R| are non-zero the phases must satisfy
    ``phi14 + phi23 - phi24 - phi13 = +-pi``.
    """

    t_mag: float = _SQRT1_2
    phi13: float = 0.0
    phi24: float = 0.0
    phi14: float = math.pi / 2
    phi23: float = math.pi / 2

    def __post_init__(self):
        if not 0.0 <= self.t_mag <= 1.0:
            raise ValueError(f"t_mag must lie in [0, 1], got {self.t_mag}")
        if 0.0 < self.t_mag < 1.0:
            mismatch = self.phi14 + self.phi23 - self.phi24 - self.phi13
            wrapped = math.remainder(mismatch, 2 * math.pi)
            if abs(abs(wrapped) - math.pi) > 1e-12:
                raise PhaseConstraintError(
                    "beam splitter phases violate phi14 + phi23 - phi24 - phi13 = +-pi "
                    f"(got {mismatch:.15g})"
                )

    @property
    def r_mag(self) -> float:
        return math.sqrt(max(0.0, 1.0 - self.t_mag**2))

    @classmethod
    def real_type(cls, t_mag: float = _SQRT1_2) -> "BeamSplitterSpec":
        """Real convention, ``(1/sqrt2)[[1, 1], [1, -1]]`` at 50/50."""
        return cls(t_mag, 0.0, math.pi, 0.0, 0.0)

    @classmethod
    def symmetric(cls, t_mag: float = _SQRT1_2) -> "BeamSplitterSpec":
        """``i`` on reflection, ``(1/sqrt2)[[1, i], [i, 1]]`` at 50/50."""
        return cls(t_mag, 0.0, 0.0, math.pi / 2, math.pi / 2)


BS1 = BeamSplitterSpec.real_type()
BS2 = BeamSplitterSpec.symmetric()


def beam_splitter(spec: BeamSplitterSpec = BS2) -> np.ndarray:
    t, r = spec.t_mag, spec.r_mag
    return np.array(
        [
            [t * np.exp(1j * spec.phi13), r * np.exp(1j * spec.phi23)],
            [r * np.exp(1j * spec.phi14), t * np.exp(1j * spec.phi24)],
        ],
        dtype=np.complex128,
    )


def mach_zehnder(phi: float) -> np.ndarray:
    """Two symmetric 50/50 splitters around a phase ``phi`` on the upper arm."""
    bs = beam_splitter(BS2)
    return bs @ np.diag([np.exp(1j * phi), 1.0]) @ bs


def michelson(mirror: Sequence[float], bs: BeamSplitterSpec = BS2) -> np.ndarray:
    """``BS^T diag(exp(i phi)) BS``: split, reflect off two mirrors, recombine."""
    phases = _phases(mirror, 2, "michelson mirror")
    u = beam_splitter(bs)
    return u.T @ np.diag(np.exp(1j * phases)) @ u


# --------------------------------------------------------------------------
# Coupled-mode integrated couplers
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class CouplerSpec:
    """Uniform coupling region of length ``z``.

    ``kappa2`` is the diagonal coupling of the four-mode quarter; the other
    devices ignore it.
    """

    kappa: float
    z: float = 1.0
    beta: float = 0.0
    kappa2: float | None = None

    def __post_init__(self):
        if not self.z >= 0:
            raise ValueError(f"coupler length must be non-negative, got {self.z}")
        for name in ("kappa", "beta", "kappa2"):
            value = getattr(self, name)
            if value is not None and not math.isfinite(value):
                raise ValueError(f"{name} must be finite")

    @classmethod
    def from_kz(cls, kz: float, kz2: float | None = None, beta_z: float = 0.0) -> "CouplerSpec":
        """Unit-length coupler with the given coupling phases."""
        return cls(kappa=kz, z=1.0, beta=beta_z, kappa2=kz2)

    @property
    def kz(self) -> float:
        return self.kappa * self.z

    @property
    def kz2(self) -> float:
        if self.kappa2 is None:
            raise ValueError("quarter coupler needs kappa2")
        return self.kappa2 * self.z

    @property
    def bz(self) -> float:
        return self.beta * self.z


def coupler2(spec: CouplerSpec) -> np.ndarray:
    c, s = math.cos(spec.kz), math.sin(spec.kz)
    return np.exp(-1j * spec.bz) * np.array([[c, -1j * s], [-1j * s, c]], dtype=np.complex128)


def tritter(spec: CouplerSpec) -> np.ndarray:
    """Three waveguides, each coupled to the other two with strength kappa."""
    kz = spec.kz
    a = 2 * np.exp(1j * kz) + np.exp(-2j * kz)
    b = -np.exp(1j * kz) + np.exp(-2j * kz)
    m = np.full((3, 3), b, dtype=np.complex128)
    np.fill_diagonal(m, a)
    return np.exp(-1j * spec.bz) / 3 * m


def quarter(spec: CouplerSpec) -> np.ndarray:
    """Four waveguides on a square: kappa to neighbours, kappa2 across diagonals.

    The entries follow the printed pattern ``[[A,B,C,B],[B,C,B,A],[C,B,A,B],
    [B,A,B,C]]``, which is the coupled-mode propagator ``expm(+i(beta+H)z)``
    followed by exchanging output modes 2 and 4.  At zero coupling it is that
    exchange, not the identity.
    """
    k1, k2 = spec.kz, spec.kz2
    e0 = np.exp(-1j * k2)
    em = np.exp(1j * (-2 * k1 + k2))
    ep = np.exp(1j * (2 * k1 + k2))
    a = 2 * e0 + em + ep
    b = -em + ep
    c = -2 * e0 + em + ep
    m = np.array([[a, b, c, b], [b, c, b, a], [c, b, a, b], [b, a, b, c]], dtype=np.complex128)
    return np.exp(1j * spec.bz) / 4 * m


def _transpose_sandwich(u: np.ndarray, mirror: np.ndarray) -> np.ndarray:
    return u.T @ np.diag(np.exp(1j * mirror)) @ u


def reversible_tritter(spec: CouplerSpec, mirror: Sequence[float]) -> np.ndarray:
    return _transpose_sandwich(tritter(spec), _phases(mirror, 3, "tritter mirror"))


def reversible_quarter(spec: CouplerSpec, mirror: Sequence[float]) -> np.ndarray:
    return _transpose_sandwich(quarter(spec), _phases(mirror, 4, "quarter mirror"))


def apply_port_phases(core, ports: Sequence[float]) -> np.ndarray:
    """``D core D`` with ``D = diag(exp(i phi))``; light crosses each port shifter twice."""
    core = as_cmatrix(core)
    n = core.shape[0]
    if core.shape != (n, n):
        raise ValueError(f"core must be square, got {core.shape}")
    d = np.exp(1j * _phases(ports, n, "port phases"))
    return d[:, None] * core * d[None, :]


# --------------------------------------------------------------------------
# Directionally-unbiased multiports
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class LoopNetwork:
    """Internal scattering step of a device with feedback loops.

    ``a0`` maps internal modes to internal modes with all mirror phases at
    zero; the mirror phase of internal mode ``m`` (``mirror_of[m] >= 0``) is
    picked up when light leaves it, so ``A = a0 @ diag(phase)``.
    """

    a0: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: np.ndarray
    mirror_of: np.ndarray
    mode_names: tuple = field(default=())

    def phase_vector(self, mirror: np.ndarray) -> np.ndarray:
        out = np.ones(len(self.mirror_of), dtype=np.complex128)
        hit = self.mirror_of >= 0
        out[hit] = np.exp(1j * mirror[self.mirror_of[hit]])
        return out

    def a(self, mirror: np.ndarray) -> np.ndarray:
        return self.a0 * self.phase_vector(mirror)[None, :]


def multiport_network(n_ports: int) -> LoopNetwork:
    if n_ports not in (3, 4):
        raise ValueError(f"unbiased multiports exist here for 3 or 4 ports, got {n_ports}")
    n = n_ports
    t, r = _SQRT1_2, 1j * _SQRT1_2
    names: list[tuple] = []
    for x in range(n):
        names += [("link", x, (x + 1) % n), ("link", x, (x - 1) % n), ("mirror", x)]
    idx = {name: k for k, name in enumerate(names)}
    m = len(names)
    a0 = np.zeros((m, m), dtype=np.complex128)
    b = np.zeros((m, n), dtype=np.complex128)
    c = np.zeros((n, m), dtype=np.complex128)
    mirror_of = np.full(m, -1)
    for x in range(n):
        nxt, prv = (x + 1) % n, (x - 1) % n
        mx = idx[("mirror", x)]
        mirror_of[mx] = x
        b[idx[("link", x, nxt)], x] += t
        b[idx[("link", x, prv)], x] += r
        a0[idx[("link", x, prv)], mx] += t
        a0[idx[("link", x, nxt)], mx] += r
        # light arriving at splitter x from a neighbour
        for y, (to_ext, to_mirror) in ((nxt, (t, r)), (prv, (r, t))):
            arriving = idx[("link", y, x)]
            c[x, arriving] += to_ext
            a0[mx, arriving] += to_mirror
    return LoopNetwork(a0, b, c, np.zeros((n, n), dtype=np.complex128), mirror_of, tuple(names))


def two_port_network(bs: BeamSplitterSpec = BS2) -> LoopNetwork:
    """One splitter with a mirror on each output arm (no internal loop)."""
    u = beam_splitter(bs)
    # internal modes: 0,1 travel toward mirrors; 2,3 travel back
    a0 = np.zeros((4, 4), dtype=np.complex128)
    a0[2, 0] = a0[3, 1] = 1.0
    b = np.zeros((4, 2), dtype=np.complex128)
    b[:2, :] = u
    c = np.zeros((2, 4), dtype=np.complex128)
    c[:, 2:] = u.T
    return LoopNetwork(a0, b, c, np.zeros((2, 2), dtype=np.complex128), np.array([0, 1, -1, -1]))


def _reachable_basis(a: np.ndarray, b: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Orthonormal basis of the Krylov space span{b, a b, a^2 b, ...}."""

    def orth(w: np.ndarray) -> np.ndarray:
        if w.size == 0:
            return w
        u, s, _ = np.linalg.svd(w, full_matrices=False)
        return u[:, s > tol]

    q = orth(b)
    new = q
    while new.shape[1] and q.shape[1] < a.shape[0]:
        w = a @ new
        for _ in range(2):
            w = w - q @ (q.conj().T @ w)
        new = orth(w)
        q = np.hstack([q, new])
    return q


def _spectral_radius(a: np.ndarray, iters: int = 400) -> float:
    """Power-iteration estimate of the spectral radius."""
    if a.size == 0:
        return 0.0
    x = np.ones(a.shape[0], dtype=np.complex128) + 0.1j * np.arange(a.shape[0])
    x /= np.linalg.norm(x)
    log_growth = 0.0
    half = iters // 2
    for k in range(iters):
        x = a @ x
        nrm = np.linalg.norm(x)
        if nrm == 0.0:
            return 0.0
        x /= nrm
        if k >= half:
            log_growth += math.log(nrm)
    return math.exp(log_growth / (iters - half))


def loop_closed_form(net: LoopNetwork, mirror: np.ndarray) -> np.ndarray:
    """``D + C (I - A)^-1 B`` on the part of the network reachable from the inputs.

    Modes that no input can excite (and that therefore cannot reach an output)
    are projected out first; such trapped modes can sit exactly on the unit
    circle, e.g. at the Grover setting of the three-port.
    """
    a = net.a(mirror)
    q = _reachable_basis(a, net.b)
    a_r = q.conj().T @ a @ q
    rho = _spectral_radius(a_r)
    # A is a contraction, so the estimate only reaches 1 on a reachable
    # unimodular mode; near-resonant settings are left to the conditioning gate.
    if rho >= 1.0 - 1e-15:
        raise NonDecayingLoopError(f"non-decaying internal loop (spectral radius estimate {rho:.12f})")
    try:
        x = solve(np.eye(a_r.shape[0]) - a_r, q.conj().T @ net.b)
    except SingularMatrixError as exc:
        raise NonDecayingLoopError(f"non-decaying internal loop ({exc})") from exc
    return net.d + net.c @ q @ x


def unbiased_multiport_closed_form(n_ports: int, mirror: Sequence[float]) -> np.ndarray:
    net = multiport_network(n_ports)
    return loop_closed_form(net, _phases(mirror, n_ports, "multiport mirror"))



def _batch_mirrors(n_ports: int, mirrors) -> np.ndarray:
    arr = np.asarray(mirrors, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != n_ports:
        raise ValueError(f"expected an array of shape (K, {n_ports}), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("mirror phases must be finite")
    return arr


def _batch_a(net: LoopNetwork, mirrors: np.ndarray) -> np.ndarray:
    phase = np.ones((mirrors.shape[0], len(net.mirror_of)), dtype=np.complex128)
    hit = net.mirror_of >= 0
    phase[:, hit] = np.exp(1j * mirrors[:, net.mirror_of[hit]])
    return net.a0[None, :, :] * phase[:, None, :]


def unbiased_multiport_closed_form_batch(n_ports: int, mirrors) -> np.ndarray:
    """Closed form for many mirror settings at once, shape ``(K, n, n)``.

    Settings where ``I - A`` is ill-conditioned on the full internal space
    (trapped modes on the unit circle) go through the single-setting path,
    which removes those modes first.
    """
    net = multiport_network(n_ports)
    mirrors = _batch_mirrors(n_ports, mirrors)
    m = np.eye(net.a0.shape[0]) - _batch_a(net, mirrors)
    sv = np.linalg.svd(m, compute_uv=False)
    good = sv[:, -1] > sv[:, 0] / MAX_CONDITION
    out = np.empty((mirrors.shape[0], n_ports, n_ports), dtype=np.complex128)
    if np.any(good):
        x = np.linalg.solve(m[good], np.broadcast_to(net.b, (int(good.sum()),) + net.b.shape))
        out[good] = net.d + net.c @ x
    for k in np.flatnonzero(~good):
        out[k] = loop_closed_form(net, mirrors[k])
    return out


def unbiased_multiport_path_sum_batch(n_ports: int, mirrors, max_bounces: int = 64) -> np.ndarray:
    """Truncated path sums for many mirror settings, shape ``(K, n, n)``."""
    if int(max_bounces) < 1:
        raise ValueError("max_bounces must be at least 1")
    net = multiport_network(n_ports)
    mirrors = _batch_mirrors(n_ports, mirrors)
    a = _batch_a(net, mirrors)
    total = np.broadcast_to(net.d, (mirrors.shape[0], n_ports, n_ports)).copy()
    x = np.broadcast_to(net.b, (mirrors.shape[0],) + net.b.shape).copy()
    for _ in range(int(max_bounces)):
        total += net.c @ x
        x = a @ x
    return total

@dataclass(frozen=True)
class PathTerm:
    """One optical path: ``coefficient * exp(i * sum(phi[m] for m in mirrors))``."""

    source: int
    dest: int
    coefficient: complex
    mirrors: tuple[int, ...]

    @property
    def label(self) -> str:
        return "".join(PORT_LABELS[m] for m in self.mirrors)

    def amplitude(self, mirror: Sequence[float]) -> complex:
        return self.coefficient * np.exp(1j * sum(mirror[m] for m in self.mirrors))


@dataclass(frozen=True)
class PathSum:
    matrix: np.ndarray
    terms: tuple[PathTerm, ...]
    max_bounces: int

    def terms_for(self, source: int, dest: int) -> list[PathTerm]:
        return [t for t in self.terms if t.source == source and t.dest == dest]


def _trace_paths(net: LoopNetwork, max_segments: int, max_mirrors: int) -> list[PathTerm]:
    terms: list[PathTerm] = []
    n_in = net.b.shape[1]
    for src in range(n_in):
        frontier = [(int(k), net.b[k, src], ()) for k in np.flatnonzero(net.b[:, src])]
        segments = 1
        while frontier and segments <= max_segments:
            nxt = []
            for mode, coef, mirrors in frontier:
                for out in np.flatnonzero(net.c[:, mode]):
                    terms.append(PathTerm(src, int(out), complex(coef * net.c[out, mode]), mirrors))
                label = int(net.mirror_of[mode])
                seq = mirrors + (label,) if label >= 0 else mirrors
                if len(seq) > max_mirrors:
                    continue
                for to in np.flatnonzero(net.a0[:, mode]):
                    nxt.append((int(to), coef * net.a0[to, mode], seq))
            frontier = nxt
            segments += 1
    return terms


def unbiased_multiport_path_sum(
    n_ports: int, mirror: Sequence[float], max_bounces: int = 64, trace_mirrors: int = 3
) -> PathSum:
    """Sum over paths with at most ``max_bounces`` internal segments.

    Also lists every individual path with up to ``trace_mirrors`` mirror
    reflections (and within ``max_bounces`` segments) so the series can be
    compared term by term.
    """
    if int(max_bounces) < 1:
        raise ValueError("max_bounces must be at least 1")
    net = multiport_network(n_ports)
    phases = _phases(mirror, n_ports, "multiport mirror")
    a = net.a(phases)
    total = net.d.copy()
    x = net.b.copy()
    for _ in range(int(max_bounces)):
        total += net.c @ x
        x = a @ x
    terms = _trace_paths(net, int(max_bounces), int(trace_mirrors)) if trace_mirrors >= 0 else []
    return PathSum(total, tuple(terms), int(max_bounces))


# --------------------------------------------------------------------------
# Catalog records
# --------------------------------------------------------------------------


def device_record(kind: str, parameters: dict, matrix) -> dict:
    m = as_cmatrix(matrix)
    square = m.shape[0] == m.shape[1]
    return {
        "kind": kind,
        "parameters": parameters,
        "matrix": [[[float(z.real), float(z.imag)] for z in row] for row in m],
        "unitarity_residual": unitarity_residual(m) if square else None,
        "transpose_residual": transpose_residual(m) if square else None,
    }
