"""Finite truncations of the square-lattice cochain complex and the Dirac-type operator.

Vertices of an ``L x L`` box are indexed ``x + L*y``.  Edges are stored only in
their canonical orientation (pointing in ``+delta_1`` or ``+delta_2``); the value
of a 1-cochain on a reversed edge is the negative of the stored value.  With
that convention the weighted inner product on cochains (vertex sum plus one
half of the sum over both orientations) is the plain Euclidean product of the
stored vectors, so ``H0 = [[m, d^T], [d, -m]]`` is a real symmetric matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Callable, Mapping, Optional, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import DomainError, InvalidSizeError, LengthMismatchError, OutOfDomainError

PERIODIC = "periodic"
OPEN = "open"
HORIZONTAL = 0
VERTICAL = 1


@dataclass(eq=False)
class LatticeBox:
    L: int
    boundary: str
    edge_tail: np.ndarray = field(repr=False)
    edge_head: np.ndarray = field(repr=False)
    edge_dir: np.ndarray = field(repr=False)

    @property
    def n_vertices(self) -> int:
        return self.L * self.L

    @property
    def n_edges(self) -> int:
        return len(self.edge_tail)

    @property
    def total_dim(self) -> int:
        return self.n_vertices + self.n_edges

    @property
    def center(self) -> tuple[int, int]:
        return (self.L // 2, self.L // 2)

    def vertex_index(self, x: int, y: int) -> int:
        if self.boundary == PERIODIC:
            x, y = x % self.L, y % self.L
        elif not (0 <= x < self.L and 0 <= y < self.L):
            raise OutOfDomainError(f"vertex ({x}, {y}) outside open box of side {self.L}")
        return x + self.L * y

    def vertex_coords(self) -> tuple[np.ndarray, np.ndarray]:
        idx = np.arange(self.n_vertices)
        return idx % self.L, idx // self.L

    def edge_index(self, x: int, y: int, direction: int) -> int:
        """Global index (offset by ``L**2``) of the canonical edge leaving ``(x, y)``."""
        L = self.L
        if self.boundary == PERIODIC:
            x, y = x % L, y % L
            return L * L + direction * L * L + x + L * y
        if direction == HORIZONTAL:
            if not (0 <= x < L - 1 and 0 <= y < L):
                raise OutOfDomainError(f"horizontal edge at ({x}, {y}) leaves the open box")
            return L * L + x + (L - 1) * y
        if not (0 <= x < L and 0 <= y < L - 1):
            raise OutOfDomainError(f"vertical edge at ({x}, {y}) leaves the open box")
        return L * L + L * (L - 1) + x + L * y

    def edge_tail_coords(self) -> tuple[np.ndarray, np.ndarray]:
        return self.edge_tail % self.L, self.edge_tail // self.L

    @cached_property
    def coboundary_matrix(self) -> sp.csr_matrix:
        """Sparse ``E x L^2`` incidence matrix of ``d``: -1 at the tail, +1 at the head."""
        E = self.n_edges
        rows = np.repeat(np.arange(E), 2)
        cols = np.column_stack([self.edge_tail, self.edge_head]).ravel()
        vals = np.tile([-1.0, 1.0], E)
        return sp.csr_matrix((vals, (rows, cols)), shape=(E, self.n_vertices))


def build_lattice(L: int, boundary: str = PERIODIC) -> LatticeBox:
    if int(L) != L or L < 2:
        raise InvalidSizeError(f"side length must be an integer >= 2, got {L}")
    L = int(L)
    if boundary not in (PERIODIC, OPEN):
        raise InvalidSizeError(f"unknown boundary {boundary!r}")
    y, x = np.divmod(np.arange(L * L), L)
    if boundary == PERIODIC:
        hx, hy = x, y
        vx, vy = x, y
        h_head = (hx + 1) % L + L * hy
        v_head = vx + L * ((vy + 1) % L)
    else:
        keep_h = x < L - 1
        keep_v = y < L - 1
        hx, hy = x[keep_h], y[keep_h]
        vx, vy = x[keep_v], y[keep_v]
        h_head = hx + 1 + L * hy
        v_head = vx + L * (vy + 1)
    tail = np.concatenate([hx + L * hy, vx + L * vy])
    head = np.concatenate([h_head, v_head])
    direction = np.concatenate([np.zeros(len(hx), dtype=np.int8), np.ones(len(vx), dtype=np.int8)])
    return LatticeBox(L, boundary, tail.astype(np.int64), head.astype(np.int64), direction)


@dataclass
class Cochain:
    vertex_values: np.ndarray
    edge_values: np.ndarray

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.vertex_values, self.edge_values])

    def inner(self, other: "Cochain") -> complex:
        # stored A+ values: the 1/2 over both orientations collapses to a plain sum
        return np.vdot(other.vertex_values, self.vertex_values) + np.vdot(
            other.edge_values, self.edge_values
        )


# --- potentials -------------------------------------------------------------


@dataclass(frozen=True)
class PowerDecay:
    """``Gamma * <mu>^{-gamma}`` with ``<mu> = sqrt(1 + |mu|^2)``."""

    Gamma: float
    gamma: float

    def __call__(self, mu1: np.ndarray, mu2: np.ndarray) -> np.ndarray:
        return self.Gamma * (1.0 + mu1**2 + mu2**2) ** (-self.gamma / 2)

    def describe(self) -> dict:
        return {"kind": "power_decay", "Gamma": self.Gamma, "gamma": self.gamma}


@dataclass(frozen=True)
class TableComponent:
    values: Mapping[tuple[int, int], float]

    def __call__(self, mu1: np.ndarray, mu2: np.ndarray) -> np.ndarray:
        out = np.zeros(np.broadcast(mu1, mu2).shape)
        flat1, flat2 = np.broadcast_arrays(mu1, mu2)
        for (a, b), val in self.values.items():
            out[(flat1 == a) & (flat2 == b)] = val
        return out

    def describe(self) -> dict:
        return {"kind": "table", "entries": [[a, b, v] for (a, b), v in sorted(self.values.items())]}


ZERO = TableComponent({})

Component = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class Potential:
    """The triple (v1, v2, v3): vertex values and values on horizontal/vertical edges.

    ``v2(mu)`` is the value on the edge ``(mu, mu + delta_1)`` and ``v3(mu)`` on
    ``(mu, mu + delta_2)``, with ``mu`` measured from ``center`` (defaults to
    ``(L//2, L//2)`` of the box the potential is evaluated on).
    """

    v1: Component = ZERO
    v2: Component = ZERO
    v3: Component = ZERO
    family: str = "custom"
    center: Optional[tuple[int, int]] = None

    @classmethod
    def power_decay(cls, Gamma2: float, Gamma3: float, gamma: float, v1: Component = ZERO,
                    gamma2: Optional[float] = None, gamma3: Optional[float] = None) -> "Potential":
        return cls(v1, PowerDecay(Gamma2, gamma if gamma2 is None else gamma2),
                   PowerDecay(Gamma3, gamma if gamma3 is None else gamma3), "power_decay")

    @classmethod
    def from_table(cls, entries: Mapping[str, Mapping[tuple[int, int], float]],
                   family: str = "compact_support") -> "Potential":
        comps = {k: TableComponent(dict(entries.get(k, {}))) for k in ("v1", "v2", "v3")}
        return cls(comps["v1"], comps["v2"], comps["v3"], family)

    @classmethod
    def vertex_impulse(cls, value: float, at: tuple[int, int] = (0, 0)) -> "Potential":
        return cls.from_table({"v1": {at: value}})

    def on_box(self, box: LatticeBox) -> tuple[np.ndarray, np.ndarray]:
        cx, cy = self.center if self.center is not None else box.center
        x, y = box.vertex_coords()
        vertex = np.asarray(self.v1(x - cx, y - cy), dtype=float)
        ex, ey = box.edge_tail_coords()
        horiz = box.edge_dir == HORIZONTAL
        edge = np.where(horiz, self.v2(ex - cx, ey - cy), self.v3(ex - cx, ey - cy)).astype(float)
        return vertex, edge

    def support_size(self, box: LatticeBox) -> int:
        vertex, edge = self.on_box(box)
        return int(np.count_nonzero(vertex) + np.count_nonzero(edge))

    def describe(self) -> dict:
        def comp(c):
            return c.describe() if hasattr(c, "describe") else {"kind": "callable"}

        return {"family": self.family, "center": self.center,
                "v1": comp(self.v1), "v2": comp(self.v2), "v3": comp(self.v3)}


def load_potential(path: str | Path) -> Potential:
    """Read a potential from a text file.

    Each non-comment line is either ``kind mu1 mu2 value`` with ``kind`` in
    ``{v1, v2, v3}``, or ``power Gamma2 Gamma3 gamma`` which makes v2 and v3
    power-decay families (table lines for v1 still apply).
    """
    tables: dict[str, dict[tuple[int, int], float]] = {"v1": {}, "v2": {}, "v3": {}}
    power = None
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] == "power":
            if len(parts) != 4:
                raise DomainError(f"line {lineno}: expected 'power Gamma2 Gamma3 gamma'")
            power = tuple(float(p) for p in parts[1:])
            continue
        if parts[0] not in tables or len(parts) != 4:
            raise DomainError(f"line {lineno}: expected 'v1|v2|v3 mu1 mu2 value', got {raw!r}")
        tables[parts[0]][(int(parts[1]), int(parts[2]))] = float(parts[3])
    if power is not None:
        if tables["v2"] or tables["v3"]:
            raise DomainError("power family and explicit v2/v3 entries are mutually exclusive")
        return Potential.power_decay(*power, v1=TableComponent(tables["v1"]))
    return Potential.from_table(tables, family="compact_support")


# --- operators ----------------------------------------------------------------


@dataclass
class SymmetricSparseMatrix:
    """Real symmetric sparse matrix plus an optional independent index set.

    ``independent`` lists indices whose mutual couplings vanish (the edge block
    of the Hamiltonian is diagonal); inertia counting eliminates them first.
    """

    matrix: sp.csr_matrix
    independent: Optional[np.ndarray] = None

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def nnz(self) -> int:
        return self.matrix.nnz

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()

    def is_symmetric(self, tol: float = 0.0) -> bool:
        diff = self.matrix - self.matrix.T
        return diff.nnz == 0 or float(abs(diff).max()) <= tol

    def max_row_nnz(self) -> int:
        return int(np.diff(self.matrix.indptr).max())


def _check_len(vec: np.ndarray, n: int, what: str) -> np.ndarray:
    vec = np.asarray(vec)
    if vec.shape != (n,):
        raise LengthMismatchError(f"{what} must have length {n}, got shape {vec.shape}")
    return vec


def apply_coboundary(box: LatticeBox, f: np.ndarray) -> np.ndarray:
    f = _check_len(f, box.n_vertices, "vertex vector")
    return box.coboundary_matrix @ f


def apply_coboundary_adjoint(box: LatticeBox, g: np.ndarray) -> np.ndarray:
    g = _check_len(g, box.n_edges, "edge vector")
    return box.coboundary_matrix.T @ g


def assemble_hamiltonian(box: LatticeBox, m: float, potential: Optional[Potential] = None,
                         sign: int = 1) -> SymmetricSparseMatrix:
    """Sparse ``H0 + sign * V`` on the stored (vertex, A+ edge) representation."""
    if m < 0:
        raise DomainError(f"mass must be nonnegative, got {m}")
    if sign not in (1, -1):
        raise DomainError(f"sign must be +1 or -1, got {sign}")
    nv, ne = box.n_vertices, box.n_edges
    vdiag = np.full(nv, float(m))
    ediag = np.full(ne, -float(m))
    if potential is not None:
        vv, ev = potential.on_box(box)
        if (vv < 0).any() or (ev < 0).any():
            raise DomainError("potential must be nonnegative")
        vdiag += sign * vv
        ediag += sign * ev
    d = box.coboundary_matrix
    H = sp.bmat([[sp.diags(vdiag), d.T], [d, sp.diags(ediag)]], format="csr")
    H.sort_indices()
    return SymmetricSparseMatrix(H, independent=np.arange(nv, nv + ne))


def loop_state(box: LatticeBox, x: int, y: int) -> Cochain:
    """Plaquette cochain circulating around the unit square with lower-left corner (x, y)."""
    L = box.L
    if box.boundary == OPEN and not (0 <= x < L - 1 and 0 <= y < L - 1):
        raise OutOfDomainError(f"plaquette at ({x}, {y}) crosses the open boundary")
    edges = np.zeros(box.n_edges)
    nv = box.n_vertices
    edges[box.edge_index(x, y, HORIZONTAL) - nv] += 1.0
    edges[box.edge_index(x + 1, y, VERTICAL) - nv] += 1.0
    edges[box.edge_index(x, y + 1, HORIZONTAL) - nv] -= 1.0
    edges[box.edge_index(x, y, VERTICAL) - nv] -= 1.0
    return Cochain(np.zeros(nv), edges)


def potential_trace_norm(box: LatticeBox, potential: Potential) -> float:
    vertex, edge = potential.on_box(box)
    return float(np.abs(vertex).sum() + np.abs(edge).sum())


def momentum_grid(L: int) -> np.ndarray:
    k = np.arange(L) / L
    k1, k2 = np.meshgrid(k, k, indexing="ij")
    return np.column_stack([k1.ravel(), k2.ravel()])


def hamiltonian_bound(m: float, potential_sup: float = 0.0) -> float:
    """Upper bound on the spectral radius of ``H0 +/- V``."""
    return math.sqrt(m * m + 8.0) + potential_sup


__all__: Sequence[str] = [
    "LatticeBox", "Cochain", "Potential", "PowerDecay", "TableComponent", "SymmetricSparseMatrix",
    "build_lattice", "apply_coboundary", "apply_coboundary_adjoint", "assemble_hamiltonian",
    "loop_state", "potential_trace_norm", "load_potential", "momentum_grid", "PERIODIC", "OPEN",
]
