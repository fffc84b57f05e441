"""Toroidal-kernel operators realized on a momentum box of Z^d, and their eigenvalue counts.

An operator ``Psi = sum_k B_k F v_k F^* conj(B_k)`` acts on l^2(Z^d) as

    Psi_{mu nu} = sum_k sum_alpha Bhat_k(mu - alpha) v_k(alpha) conj(Bhat_k(nu - alpha)),

with ``Bhat(mu) = int exp(-2 pi i xi.mu) B(xi) d xi``, so ``B(xi) = sum Bhat(mu) exp(2 pi i xi.mu)``.
Truncating ``alpha, mu, nu`` to ``[-M, M]^d`` gives ``Psi_M = sum_k T_k D_k T_k^*``, a
compression of a positive operator when all ``v_k >= 0``.
"""

from __future__ import annotations

import functools
import itertools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np
from scipy.linalg import blas, eigvalsh
from scipy.special import comb, gamma as gamma_fn

from .errors import BudgetError, DomainError, LengthMismatchError, ResolutionError
from .level_sets import asymptotic_constant_CB

ENUMERATION_BUDGET = 10**8
TAIL_RADIUS = 2048


def japanese(mu: np.ndarray) -> np.ndarray:
    """<mu> = sqrt(1 + |mu|^2) over the last axis."""
    mu = np.asarray(mu, dtype=float)
    return np.sqrt(1.0 + np.sum(mu * mu, axis=-1))


@dataclass(frozen=True)
class DiscreteSymbol:
    """A real function on Z^d.  ``kind`` is one of power_decay, constant, table."""

    d: int
    kind: str
    Gamma: float = 1.0
    gamma: float = 0.0
    rho: float = 1.0
    entries: Optional[Mapping[tuple, float]] = None

    @classmethod
    def power_decay(cls, Gamma: float, gamma: float, d: int = 2) -> "DiscreteSymbol":
        return cls(d, "power_decay", float(Gamma), float(gamma), 1.0)

    @classmethod
    def constant(cls, value: float, d: int = 2) -> "DiscreteSymbol":
        return cls(d, "constant", float(value), 0.0, 1.0)

    @classmethod
    def table(cls, entries: Mapping[tuple, float], d: int = 2, gamma: float = float("inf")) -> "DiscreteSymbol":
        entries = {tuple(int(c) for c in k): float(v) for k, v in entries.items()}
        if any(len(k) != d for k in entries):
            raise LengthMismatchError(f"table keys must have {d} components")
        return cls(d, "table", 1.0, gamma, 1.0, entries)

    @classmethod
    def origin_indicator(cls, d: int = 2) -> "DiscreteSymbol":
        return cls.table({(0,) * d: 1.0}, d)

    def __call__(self, mu: np.ndarray) -> np.ndarray:
        mu = np.asarray(mu)
        if mu.shape[-1] != self.d:
            raise LengthMismatchError(f"expected points in Z^{self.d}")
        if self.kind == "power_decay":
            return self.Gamma * japanese(mu) ** (-self.gamma)
        if self.kind == "constant":
            return np.full(mu.shape[:-1], self.Gamma)
        out = np.zeros(mu.shape[:-1])
        for key, val in (self.entries or {}).items():
            out[np.all(mu == np.array(key), axis=-1)] = val
        return out

    def decay_bound_holds(self, samples: np.ndarray) -> bool:
        """|v(mu)| <= 2|Gamma| <mu>^{-gamma} on the given sample points."""
        if self.kind != "power_decay":
            return True
        return bool(np.all(np.abs(self(samples)) <= 2 * abs(self.Gamma) * japanese(samples) ** (-self.gamma)))

    def describe(self) -> dict:
        out = {"kind": self.kind, "d": self.d, "Gamma": self.Gamma, "gamma": self.gamma, "rho": self.rho}
        if self.entries is not None:
            out["entries"] = [[list(k), v] for k, v in self.entries.items()]
        return out


def box_points(M: int, d: int) -> np.ndarray:
    """Points of [-M, M]^d, last coordinate fastest."""
    axes = [np.arange(-M, M + 1)] * d
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)


def multi_indices(d: int, order_max: int) -> list[tuple[int, ...]]:
    return [a for a in itertools.product(range(order_max + 1), repeat=d) if sum(a) <= order_max]


def forward_difference(v: DiscreteSymbol, mu: np.ndarray, alpha: Sequence[int]) -> np.ndarray:
    """D^alpha v(mu) with D_j v(mu) = v(mu + delta_j) - v(mu)."""
    out = np.zeros(mu.shape[:-1])
    for beta in itertools.product(*[range(a + 1) for a in alpha]):
        coef = np.prod([(-1) ** (a - b) * comb(a, b, exact=True) for a, b in zip(alpha, beta)])
        out += coef * v(mu + np.array(beta))
    return out


@dataclass
class SymbolClassReport:
    gamma: float
    rho: float
    radius: int
    constants: dict
    half_radius_constants: dict
    growth_flags: dict

    @property
    def in_class(self) -> bool:
        return not any(self.growth_flags.values())


def _sample_ball(radius: int, d: int, max_points: int = 2_000_000) -> np.ndarray:
    side = 2 * radius + 1
    stride = max(1, math.ceil((side**d / max_points) ** (1.0 / d)))
    axis = np.unique(np.concatenate([np.arange(-radius, radius + 1, stride), np.arange(-8, 9), [-radius, radius]]))
    axis = axis[np.abs(axis) <= radius]
    pts = np.stack(np.meshgrid(*[axis] * d, indexing="ij"), axis=-1).reshape(-1, d)
    return pts


def check_symbol_class(v: DiscreteSymbol, gamma: float, rho: float, alpha_max: int, radius: int,
                       growth_ratio: float = 1.25) -> SymbolClassReport:
    """Smallest C_alpha with |D^alpha v| <= C_alpha <mu>^{-gamma - rho|alpha|} on the ball.

    The same constants are computed on the half-radius ball; a ratio above
    ``growth_ratio`` flags a bound that keeps growing with the radius.
    """
    if alpha_max > 4 or radius > 10**4:
        raise DomainError("alpha_max <= 4 and radius <= 1e4 are required")
    consts, half, flags = {}, {}, {}
    for R, target in ((radius, consts), (max(1, radius // 2), half)):
        pts = _sample_ball(R, v.d)
        weight = japanese(pts)
        for alpha in multi_indices(v.d, alpha_max):
            vals = np.abs(forward_difference(v, pts, alpha)) * weight ** (gamma + rho * sum(alpha))
            target[alpha] = float(vals.max())
    for alpha, c in consts.items():
        h = half[alpha]
        flags[alpha] = bool(c > growth_ratio * h) if h > 0 else bool(c > 0)
    return SymbolClassReport(gamma, rho, radius, consts, half, flags)


def fourier_coefficients(B: np.ndarray, cutoff: int) -> np.ndarray:
    """Table of Bhat on [-cutoff, cutoff]^d from N^d grid samples at xi = j/N."""
    B = np.asarray(B)
    N = B.shape[0]
    if any(s != N for s in B.shape):
        raise ResolutionError("grid must have the same size along every axis")
    if N < 4 * cutoff + 4:
        raise ResolutionError(f"grid size {N} below 4*cutoff + 4 = {4 * cutoff + 4}")
    coef = np.fft.fftn(B) / B.size
    idx = np.arange(-cutoff, cutoff + 1) % N
    return coef[np.ix_(*[idx] * B.ndim)]


def step_coefficients(lower: Sequence[float], width: float, cutoff: int) -> np.ndarray:
    """Exact Fourier coefficients of the indicator of the cube prod [lower_i, lower_i + width)."""
    k = np.arange(-cutoff, cutoff + 1)
    factors = []
    for a in lower:
        with np.errstate(divide="ignore", invalid="ignore"):
            f = np.exp(-2j * np.pi * k * a) * (1 - np.exp(-2j * np.pi * k * width)) / (2j * np.pi * k)
        f[cutoff] = width
        factors.append(f)
    out = factors[0]
    for f in factors[1:]:
        out = np.multiply.outer(out, f)
    return out


def torus_grid(N: int, d: int = 2) -> np.ndarray:
    axes = [np.arange(N) / N] * d
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)


def dirac_model_B(N: int) -> tuple[np.ndarray, np.ndarray]:
    """Samples of conj(b)/sqrt(r) and conj(a)/sqrt(r), r = |a|^2 + |b|^2; 0 at the origin."""
    xi = torus_grid(N)
    a = -1.0 + np.exp(-2j * np.pi * xi[..., 0])
    b = -1.0 + np.exp(-2j * np.pi * xi[..., 1])
    r = np.abs(a) ** 2 + np.abs(b) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        B1 = np.where(r > 0, np.conj(b) / np.sqrt(r), 0.0)
        B2 = np.where(r > 0, np.conj(a) / np.sqrt(r), 0.0)
    return B1, B2


@dataclass
class ToroidalComponent:
    v: DiscreteSymbol
    B: Optional[np.ndarray] = None
    coefficients: Optional[np.ndarray] = None  # table on [-2M, 2M]^d, overrides B

    @property
    def B_norm2(self) -> float:
        if self.B is not None:
            return float(np.mean(np.abs(self.B) ** 2))
        return float(np.sum(np.abs(self.coefficients) ** 2))


@dataclass
class ToroidalOperator:
    M: int
    d: int
    matrix: Optional[np.ndarray]
    tail_bound: float
    hermiticity_residual: float
    sectors: Optional[list[str]] = None
    _eigenvalues: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def dimension(self) -> int:
        return (2 * self.M + 1) ** self.d

    def eigenvalues(self) -> np.ndarray:
        if self._eigenvalues is None:
            self._eigenvalues = eigvalsh(self.matrix, check_finite=False)
        return self._eigenvalues


def _difference_table(table: np.ndarray, M: int, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
    """T[i, j] = table[p_i - q_j] for box points p = rows, q = cols, table on [-2M, 2M]^d."""
    d = rows.shape[1]
    side = 4 * M + 1
    strides = side ** np.arange(d - 1, -1, -1)
    offset = int(np.sum(2 * M * strides))
    lin = (rows @ strides)[:, None] - (cols @ strides)[None, :] + offset
    return table.ravel()[lin]


def _box_abs_sum(v: DiscreteSymbol, R: int) -> float:
    """sum over |alpha|_inf <= R of |v(alpha)|, one hyperplane slice at a time."""
    rest = box_points(R, v.d - 1) if v.d > 1 else np.zeros((1, 0), dtype=int)
    total = 0.0
    for x in range(-R, R + 1):
        pts = np.concatenate([np.full((len(rest), 1), x), rest], axis=1)
        total += float(np.abs(v(pts)).sum())
    return total


@functools.lru_cache(maxsize=256)
def _power_tail(Gamma: float, gamma: float, d: int, M: int) -> float:
    v = DiscreteSymbol.power_decay(Gamma, gamma, d)
    if gamma <= d:
        return math.inf
    R = max(TAIL_RADIUS if d <= 2 else 128, 4 * M)
    total = _box_abs_sum(v, R) - _box_abs_sum(v, M)
    # remaining lattice points lie outside the ball of radius R
    area = d * math.pi ** (d / 2) / gamma_fn(d / 2 + 1)
    return total + abs(Gamma) * area * R ** (d - gamma) / (gamma - d)


def _symbol_tail(v: DiscreteSymbol, M: int) -> float:
    """sum over |alpha|_inf > M of |v(alpha)|."""
    if v.kind == "table":
        return float(sum(abs(x) for k, x in (v.entries or {}).items() if max(map(abs, k)) > M))
    if v.kind == "constant":
        return math.inf if v.Gamma != 0 else 0.0
    return _power_tail(v.Gamma, v.gamma, v.d, M)


def _component_tables(components: Sequence[ToroidalComponent], M: int) -> list[np.ndarray]:
    tables = []
    for c in components:
        tab = c.coefficients if c.coefficients is not None else fourier_coefficients(c.B, 2 * M)
        if tab.shape != (4 * M + 1,) * c.v.d:
            raise LengthMismatchError(f"coefficient table has shape {tab.shape}, need side {4 * M + 1}")
        tables.append(tab)
    return tables


def _is_delta(table: np.ndarray, centre: tuple) -> bool:
    off = np.abs(table).copy()
    off[centre] = 0.0
    return bool(off.max() <= 1e-14 * max(1.0, abs(table[centre])))


def _swap_symmetric(components: Sequence[ToroidalComponent], tables: list[np.ndarray], pts: np.ndarray) -> bool:
    if len(components) != 2 or components[0].v.d != 2:
        return False
    v1, v2 = components[0].v, components[1].v
    a, b = v1(pts), v2(pts)
    if not (np.allclose(a, b, rtol=0, atol=1e-15) and np.allclose(a, v1(pts[:, ::-1]), rtol=0, atol=1e-15)):
        return False
    t1, t2 = tables
    scale = max(1.0, float(np.abs(t1).max()))
    real = np.abs(t1.imag).max() <= 1e-13 * scale and np.abs(t2.imag).max() <= 1e-13 * scale
    return bool(real and np.abs(t1.T - t2).max() <= 1e-13 * scale)


def _sector_eigenvalues(table: np.ndarray, weights: np.ndarray, pts: np.ndarray, M: int,
                        chunk: int = 512) -> np.ndarray:
    """Eigenvalues of X + P X P, X = T D T^T, split by the swap parity P.

    On the even and odd subspaces the operator is 2 Q^T X Q, a Gram matrix of
    the rows (T[mu] +/- T[P mu]) sqrt(D) / sqrt(2); the diagonal mu = P mu only
    enters the even sector.
    """
    side = 2 * M + 1
    idx = np.arange(len(pts))
    i1, i2 = pts[:, 0] + M, pts[:, 1] + M
    swapped = i2 * side + i1
    upper = idx[i1 < i2]
    diag = idx[i1 == i2]
    sqrt_w = np.sqrt(weights)
    tab = table.real
    eigs = []
    for parity in (1.0, -1.0):
        reps = np.concatenate([upper, diag]) if parity > 0 else upper
        E = np.empty((len(reps), len(pts)))
        for s in range(0, len(reps), chunk):
            r = reps[s:s + chunk]
            rows = _difference_table(tab, M, pts[r], pts)
            partner = _difference_table(tab, M, pts[swapped[r]], pts)
            on_diag = (swapped[r] == r)[:, None]
            block = np.where(on_diag, rows, (rows + parity * partner) / math.sqrt(2.0))
            E[s:s + chunk] = block * sqrt_w
        G = blas.dsyrk(2.0, E, lower=0)
        del E
        eigs.append(eigvalsh(G, lower=False, overwrite_a=True, check_finite=False))
        del G
    return np.sort(np.concatenate(eigs))


def assemble_toroidal(components: Sequence[ToroidalComponent], M: int, symmetry: str = "auto") -> ToroidalOperator:
    """Psi_M on [-M, M]^d.

    With ``symmetry='auto'`` a pair of real components exchanged by mu1 <-> mu2
    (the Dirac model) is reduced to its two parity sectors and only the
    eigenvalues are kept; otherwise the dense matrix is formed.
    """
    if M < 4:
        raise DomainError("M must be at least 4")
    if not components:
        raise DomainError("need at least one component")
    d = components[0].v.d
    if any(c.v.d != d for c in components) or any(c.B is not None and c.B.ndim != d for c in components):
        raise LengthMismatchError("components disagree on the dimension")
    for c in components:
        if c.v.kind == "power_decay" and c.v.gamma <= d:
            raise DomainError(f"power-decay symbols need gamma > d = {d}")
    tables = _component_tables(components, M)
    pts = box_points(M, d)
    tail = sum(_symbol_tail(c.v, M) * c.B_norm2 for c in components)

    centre = (2 * M,) * d
    if all(_is_delta(t, centre) for t in tables):
        # constant B: convolution by a delta, so Psi_M is diagonal
        diag = sum(abs(t[centre]) ** 2 * c.v(pts) for c, t in zip(components, tables))
        return ToroidalOperator(M, d, None, tail, 0.0, ["diagonal"], np.sort(np.real(diag)))

    if symmetry == "auto" and _swap_symmetric(components, tables, pts):
        eig = _sector_eigenvalues(tables[0], components[0].v(pts), pts, M)
        return ToroidalOperator(M, d, None, tail, 0.0, ["even", "odd"], eig)

    n = len(pts)
    real = all(np.abs(np.imag(t)).max() <= 1e-14 * max(1.0, float(np.abs(t).max())) for t in tables)
    dtype = float if real else complex
    psi = np.zeros((n, n), dtype=dtype)
    for c, tab in zip(components, tables):
        T = _difference_table(tab.real if dtype is float else tab, M, pts, pts)
        psi += (T * c.v(pts)) @ T.conj().T
    resid = float(np.abs(psi - psi.conj().T).max())
    psi = (psi + psi.conj().T) / 2
    return ToroidalOperator(M, d, psi, tail, resid)


def _check_power(l: int, d: int) -> int:
    s = round(l ** (1.0 / d))
    for cand in (s - 1, s, s + 1):
        if cand >= 1 and cand**d == l:
            return cand
    raise DomainError(f"l = {l} is not a {d}-th power of an integer")


def assemble_toroidal_diag(l: int, B_const: np.ndarray, symbols: Sequence[DiscreteSymbol], M: int,
                           cubes: Optional[Sequence[int]] = None) -> ToroidalOperator:
    """Operator sum_j 1_j (sum_k |B_kj|^2 F v_k F^*) 1_j for the partition of the torus into l cubes.

    ``B_const[k, j]`` is the constant value of component k on cube j (cubes in
    row-major order of their lower corners); ``cubes`` restricts to a subset.
    """
    d = symbols[0].d
    s = _check_power(l, d)
    B_const = np.asarray(B_const)
    if B_const.shape != (len(symbols), l):
        raise LengthMismatchError(f"B_const must have shape ({len(symbols)}, {l})")
    width = 1.0 / s
    corners = list(itertools.product(range(s), repeat=d))
    chosen = range(l) if cubes is None else cubes
    pts = box_points(M, d)
    n = len(pts)
    psi = np.zeros((n, n), dtype=complex)
    tail = 0.0
    for j in chosen:
        lower = [c * width for c in corners[j]]
        T = _difference_table(step_coefficients(lower, width, 2 * M), M, pts, pts)
        weight = sum(abs(B_const[k, j]) ** 2 * v(pts) for k, v in enumerate(symbols))
        psi += (T * weight) @ T.conj().T
        tail += sum(abs(B_const[k, j]) ** 2 * width**d * _symbol_tail(v, M) for k, v in enumerate(symbols))
    resid = float(np.abs(psi - psi.conj().T).max())
    psi = (psi + psi.conj().T) / 2
    return ToroidalOperator(M, d, psi, tail, resid)


def eigen_counting(op: ToroidalOperator, lam: float) -> tuple[int, int]:
    """(n_+, n_-): eigenvalues above lam and below -lam."""
    if lam <= 1e-12:
        raise DomainError("lambda must exceed 1e-12")
    eig = op.eigenvalues()
    return int((eig > lam).sum()), int((eig < -lam).sum())


def lattice_count_scalar(gamma: float, lam: float, budget: int = ENUMERATION_BUDGET) -> int:
    """#{mu in Z^2 : <mu>^{-gamma} > lam}, counted row by row."""
    if lam >= 1.0:
        return 0
    if lam <= 0:
        raise DomainError("lambda must be positive")
    R = lam ** (-1.0 / gamma)
    if (2 * math.floor(R) + 1) ** 2 > budget:
        raise BudgetError(f"enumeration over |mu| <= {R:.0f} exceeds the budget of {budget} points")
    rows = np.arange(-math.floor(R) - 1, math.floor(R) + 2).astype(float)

    def inside(q):
        return (1.0 + rows**2 + q**2) ** (-gamma / 2) > lam

    # largest q >= 0 per row with (row, q) inside, -1 if none; settle the guess with the test itself
    q = np.floor(np.sqrt(np.maximum(lam ** (-2.0 / gamma) - 1.0 - rows**2, 0.0)))
    for _ in range(3):
        q = np.where(inside(q + 1), q + 1, q)
    for _ in range(3):
        q = np.where((q >= 0) & ~inside(q), q - 1, q)
    return int(np.sum(np.maximum(2 * q + 1, 0)))


def smallest_feasible_lambda(gamma: float, budget: int = ENUMERATION_BUDGET) -> float:
    """Smallest lambda whose enumeration box fits in the budget."""
    R = (math.isqrt(budget) - 1) // 2
    return float(R) ** (-gamma) * (1 + 1e-12)


@dataclass
class WeakSchattenEstimate:
    p: float
    quasi_norm: float
    argmax_n: int
    n_range: tuple[int, int]


def weak_schatten(singular_values: Sequence[float], p: float) -> WeakSchattenEstimate:
    """sup_n n^{1/p} s_n over the given nonincreasing singular values."""
    s = np.asarray(singular_values, dtype=float)
    if s.size == 0:
        raise DomainError("empty singular value list")
    if p <= 0:
        raise DomainError("p must be positive")
    if np.any(np.diff(s) > 1e-12 * max(1.0, float(s[0]))):
        raise DomainError("singular values must be nonincreasing")
    n = np.arange(1, s.size + 1)
    vals = n ** (1.0 / p) * s
    k = int(np.argmax(vals))
    return WeakSchattenEstimate(p, float(vals[k]), k + 1, (1, int(s.size)))


def n_star(values: np.ndarray, r: float) -> int:
    """Number of singular values above r."""
    return int((np.asarray(values) > r).sum())


def unit_ball_volume(d: int) -> float:
    return math.pi ** (d / 2) / gamma_fn(d / 2 + 1)


def default_window(eig: np.ndarray, dim: int, n_min: int = 30, frac: float = 0.05) -> tuple[float, float]:
    """From the largest lambda with n_+ >= n_min down to where n_+ reaches frac * dim."""
    pos = np.sort(eig[eig > 0])[::-1]
    n_hi = int(math.ceil(frac * dim))
    if len(pos) < max(n_min, n_hi):
        raise DomainError("too few positive eigenvalues for the default window")
    return float(pos[n_hi - 1]), float(pos[n_min - 1])


@dataclass
class ScaledCountReport:
    gamma: float
    d: int
    target_plus: float
    target_minus: float
    window: tuple[float, float]
    per_M: dict
    deviations: dict
    trend_nonincreasing: bool

    def to_json(self) -> dict:
        return {
            "gamma": self.gamma,
            "d": self.d,
            "target_plus": self.target_plus,
            "target_minus": self.target_minus,
            "window": list(self.window),
            "per_M": {str(k): v for k, v in self.per_M.items()},
            "deviations": {str(k): v for k, v in self.deviations.items()},
            "trend_nonincreasing": self.trend_nonincreasing,
        }

    def write(self, path: str | Path) -> Path:
        path = Path(path)
        path.write_text(json.dumps(self.to_json(), indent=2))
        return path


def verify_scaled_counts(components: Sequence[ToroidalComponent], M_list: Sequence[int],
                         lambda_window: Optional[tuple[float, float]] = None, gamma: Optional[float] = None,
                         d: int = 2, n_lambda: int = 40,
                         operators: Optional[Mapping[int, ToroidalOperator]] = None) -> ScaledCountReport:
    """Scaled counts lambda^{d/gamma} n_+(lambda; Psi_M) against the constant C_{B+}.

    The window defaults to the rule in ``default_window`` applied at the smallest
    M and is then shared by every M so that the trend compares like with like.
    Symbols must be power_decay with a common gamma > d; c_+ is the volume of the
    unit ball and c_- = 0, which belong to v_0 = <mu>^{-gamma}.
    """
    gammas = {c.v.gamma for c in components if c.v.kind == "power_decay"}
    if any(c.v.kind != "power_decay" for c in components) or len(gammas) != 1:
        raise DomainError("all symbols must be power_decay with a common gamma")
    g = gammas.pop() if gamma is None else gamma
    if g <= d:
        raise DomainError(f"need gamma > d = {d}")
    Bs = [c.B for c in components]
    target_p, target_m = asymptotic_constant_CB(g, d, unit_ball_volume(d), 0.0, Bs, [c.v.Gamma for c in components])
    ops = dict(operators or {})
    M_sorted = sorted(M_list)
    for M in M_sorted:
        if M not in ops:
            ops[M] = assemble_toroidal(components, M)
    if lambda_window is None:
        M0 = M_sorted[0]
        lambda_window = default_window(ops[M0].eigenvalues(), ops[M0].dimension)
    lo, hi = lambda_window
    lams = np.geomspace(lo, hi, n_lambda)
    per_M, dev = {}, {}
    for M in M_sorted:
        eig = ops[M].eigenvalues()
        counts = np.array([int((eig > x).sum()) for x in lams])
        scaled = lams ** (d / g) * counts
        med = float(np.median(scaled))
        per_M[M] = {"lambda": lams.tolist(), "n_plus": counts.tolist(), "scaled": scaled.tolist(),
                    "median_scaled": med, "tail_bound": ops[M].tail_bound}
        dev[M] = abs(med - target_p) / target_p if target_p else abs(med)
    devs = [dev[M] for M in M_sorted]
    trend = all(b <= a for a, b in zip(devs, devs[1:]))
    return ScaledCountReport(g, d, target_p, target_m, (lo, hi), per_M, dev, trend)


def export_coefficients(path: str | Path, table: np.ndarray) -> Path:
    """CSV of (mu1, mu2, Re, Im) for a d = 2 coefficient table."""
    path = Path(path)
    K = (table.shape[0] - 1) // 2
    with path.open("w") as fh:
        fh.write("mu1,mu2,re,im\n")
        for i in range(table.shape[0]):
            for j in range(table.shape[1]):
                c = complex(table[i, j])
                fh.write(f"{i - K},{j - K},{c.real!r},{c.imag!r}\n")
    return path
