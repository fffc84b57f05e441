"""Level curves of r_m on the torus, the coarea density and the asymptotic constants.

Write ``rho = u^2 - m^2`` for the level of ``r = |a|^2 + |b|^2``.  In the
quadrant ``[0, 1/2]^2`` a level curve is parametrized by ``t = |a(xi)|^2``:

    xi_1 = arcsin(sqrt(t)/2) / pi,     xi_2 = arcsin(sqrt(rho - t)/2) / pi,

with ``t`` between ``max(0, rho-4)`` and ``min(4, rho)``.  For ``rho < 4`` this
is the graph ``xi_2 = f(xi_1)`` around the origin, for ``rho > 4`` the curve
around ``(1/2, 1/2)``.  The four quadrants follow by the reflections
``xi_j -> -xi_j``.  Along the curve

    d(gamma) / |grad r| = dt / (4 pi^2 sqrt(t (4-t) (rho-t) (4-rho+t))),

whose two inner roots are the endpoints.  The substitution
``t = t_lo + (t_hi - t_lo)(1 - cos theta)/2`` cancels them exactly; the two
outer roots sit at distance ``|rho - 4|`` and produce the logarithmic growth
at the hyperbolic level, which is resolved by geometric panels in ``theta``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DomainError, OutOfTheoremRangeError, ResolutionError, ThresholdLevelError

DEFAULT_NODES = 24
RHO_PANELS = 44


def _gauss(n: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(n)


def _panel_rule(breaks: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = _gauss(n)
    lo, hi = breaks[:-1, None], breaks[1:, None]
    half = (hi - lo) / 2
    nodes = (lo + hi) / 2 + half * x
    weights = half * w
    return nodes.ravel(), weights.ravel()


def _theta_breaks(scale: float) -> np.ndarray:
    """Panel breaks on [0, pi], geometric toward both ends down to ``scale``."""
    left = [0.0]
    if scale < 0.5:
        k = scale / 4
        while k < 0.5:
            left.append(k)
            k *= 2
    left.append(math.pi / 2)
    left = np.array(left)
    right = math.pi - left[::-1]
    return np.concatenate([left, right[1:]])


@dataclass
class LevelCurve:
    """Quadrature nodes on one quadrant arc of ``r_m = u^2``.

    ``coarea_weights`` carry ``d(gamma)/|grad r_m|`` and ``arc_weights`` carry
    ``d(gamma)``; both refer to the arc in ``[0, 1/2]^2`` only.
    """

    m: float
    u: float
    level: float
    t: np.ndarray
    xi: np.ndarray
    arc_weights: np.ndarray
    coarea_weights: np.ndarray

    @property
    def arc_length(self) -> float:
        return 4.0 * float(self.arc_weights.sum())

    @property
    def rho(self) -> float:
        return self.level - self.m * self.m

    @property
    def t_range(self) -> tuple[float, float]:
        return max(0.0, self.rho - 4.0), min(4.0, self.rho)

    def point(self, t) -> np.ndarray:
        """Quadrant point with |a|^2 = t; the ends of ``t_range`` are the axis crossings."""
        t = np.asarray(t, dtype=float)
        lo, hi = self.t_range
        if np.any(t < lo) or np.any(t > hi):
            raise DomainError(f"t must lie in [{lo}, {hi}]")
        x1 = np.arctan2(np.sqrt(t), np.sqrt(4.0 - t)) / np.pi
        x2 = np.arctan2(np.sqrt(self.rho - t), np.sqrt(4.0 - self.rho + t)) / np.pi
        return np.stack([x1, x2], axis=-1)

    def full_nodes(self) -> tuple[np.ndarray, np.ndarray]:
        """All four reflected copies of the nodes (mod 1) with their coarea weights."""
        pts = [np.column_stack([s1 * self.xi[:, 0], s2 * self.xi[:, 1]]) % 1.0
               for s1 in (1, -1) for s2 in (1, -1)]
        return np.concatenate(pts), np.tile(self.coarea_weights, 4)


def _check_level(m: float, u: float) -> float:
    if m < 0:
        raise DomainError("mass must be nonnegative")
    rho = u * u - m * m
    if not 0.0 < rho < 8.0:
        raise DomainError(f"u^2 = {u * u} must lie strictly between m^2 and m^2 + 8")
    if abs(rho - 4.0) <= 4e-15:
        raise ThresholdLevelError(f"u = {u} sits on the hyperbolic threshold sqrt(m^2 + 4)")
    return rho


def _quadrant_curve(rho: float, n: int) -> tuple[np.ndarray, ...]:
    t_lo, t_hi = max(0.0, rho - 4.0), min(4.0, rho)
    span = t_hi - t_lo
    gap = abs(rho - 4.0)
    theta, w = _panel_rule(_theta_breaks(2.0 * math.sqrt(gap / span)), n)
    s2, c2 = np.sin(theta / 2) ** 2, np.cos(theta / 2) ** 2
    # distances of t to the four roots, computed without cancellation
    to_r2, to_r3 = span * s2, span * c2
    to_r1, to_r4 = gap + span * s2, gap + span * c2
    t = t_lo + to_r2
    if rho < 4.0:
        f_t, f_4mt, f_rmt, f_4mrpt = to_r2, to_r4, to_r3, to_r1
    else:
        f_t, f_4mt, f_rmt, f_4mrpt = to_r1, to_r3, to_r4, to_r2
    dt = span * np.sqrt(s2 * c2)  # dt/dtheta = (span/2) sin(theta)
    coarea = w / (4 * np.pi**2 * np.sqrt(to_r1 * to_r4))
    dx1 = dt / (2 * np.pi * np.sqrt(f_t * f_4mt))
    dx2 = dt / (2 * np.pi * np.sqrt(f_rmt * f_4mrpt))
    arc = w * np.hypot(dx1, dx2)
    xi = np.column_stack([np.arctan2(np.sqrt(f_t), np.sqrt(f_4mt)),
                          np.arctan2(np.sqrt(f_rmt), np.sqrt(f_4mrpt))]) / np.pi
    return t, xi, arc, coarea


def level_curve(m: float, u: float, n_nodes: int = DEFAULT_NODES) -> LevelCurve:
    if n_nodes < 16:
        raise DomainError("n_nodes must be at least 16")
    rho = _check_level(m, u)
    t, xi, arc, coarea = _quadrant_curve(rho, n_nodes)
    return LevelCurve(m, u, rho + m * m, t, xi, arc, coarea)


def coarea_density(m: float, u: float, n_nodes: int = DEFAULT_NODES) -> float:
    """R(u): integral of 1/|grad r_m| over the level curve r_m = u^2."""
    rho = _check_level(m, u)
    return 4.0 * float(_quadrant_curve(rho, n_nodes)[3].sum())


def density_closed_form(m: float, u: float) -> float:
    """Elliptic-integral value K(k)/(2 pi^2), k^2 = rho(8 - rho)/16; used as a test oracle."""
    from scipy.special import ellipk

    rho = _check_level(m, u)
    return float(ellipk(rho * (8 - rho) / 16) / (2 * np.pi**2))


class QuadratureValue(float):
    """A float carrying quadrature diagnostics."""

    error_estimate: float
    n_evaluations: int

    def __new__(cls, value: float, error_estimate: float, n_evaluations: int):
        obj = super().__new__(cls, value)
        obj.error_estimate = error_estimate
        obj.n_evaluations = n_evaluations
        return obj


def _rho_breaks(panels: int) -> np.ndarray:
    # geometric toward 0, 4 and 8 on each half
    k = 2.0 ** -np.arange(1, panels // 2 + 1)
    half = np.unique(np.concatenate([[0.0, 4.0], 2.0 * k, 4.0 - 2.0 * k]))
    return np.concatenate([half, 8.0 - half[::-1][1:]])


@lru_cache(maxsize=4)
def _torus_nodes(n: int, panels: int) -> tuple[np.ndarray, np.ndarray]:
    """Flattened torus nodes and weights of the level-by-level rule (read-only)."""
    rho_nodes, rho_w = _panel_rule(_rho_breaks(panels), n)
    pts, wts = [], []
    for rho, wr in zip(rho_nodes, rho_w):
        _, xi, _, cw = _quadrant_curve(float(rho), n)
        for s1 in (1, -1):
            for s2 in (1, -1):
                pts.append(np.column_stack([s1 * xi[:, 0], s2 * xi[:, 1]]) % 1.0)
                wts.append(wr * cw)
    pts_arr, w_arr = np.concatenate(pts), np.concatenate(wts)
    pts_arr.flags.writeable = False
    w_arr.flags.writeable = False
    return pts_arr, w_arr


def _coarea_sum(g: Callable[[np.ndarray], np.ndarray], n: int, panels: int) -> tuple[float, int]:
    pts, w = _torus_nodes(n, panels)
    vals = np.asarray(g(pts), dtype=float)
    return float(vals @ w), len(w)


def coarea_integral(m: float, g: Callable[[np.ndarray], np.ndarray], n_nodes: int = DEFAULT_NODES,
                    panels: int = RHO_PANELS) -> QuadratureValue:
    """Integral of ``g`` over the torus, done level by level of r_m.

    ``g`` maps an ``(N, 2)`` array of torus points to ``N`` values.  The error
    estimate compares against a rule with 8 fewer nodes per panel.
    """
    # r_m - m^2 does not depend on m, so the decomposition is the same for every mass
    del m
    fine, evals = _coarea_sum(g, n_nodes, panels)
    coarse, _ = _coarea_sum(g, max(8, n_nodes - 8), panels)
    return QuadratureValue(fine, abs(fine - coarse), evals)


def torus_trapezoid(g: Callable[[np.ndarray], np.ndarray], n: int = 256) -> float:
    """Uniform-grid torus average; spectrally accurate for smooth periodic ``g``."""
    k = (np.arange(n) + 0.5) / n
    g1, g2 = np.meshgrid(k, k, indexing="ij")
    return float(np.mean(g(np.column_stack([g1.ravel(), g2.ravel()]))))


def _check_gamma(gamma: float) -> None:
    if gamma <= 2:
        raise OutOfTheoremRangeError(
            f"gamma = {gamma}: the flat-band asymptotics require gamma > 2")


def flat_band_weight(xi: np.ndarray, gamma: float, Gamma2: float, Gamma3: float) -> np.ndarray:
    """((Gamma2 |b|^2 + Gamma3 |a|^2) / r)^{2/gamma}, undefined only at xi = 0."""
    s1 = np.sin(np.pi * xi[:, 0]) ** 2
    s2 = np.sin(np.pi * xi[:, 1]) ** 2
    return ((Gamma2 * s2 + Gamma3 * s1) / (s1 + s2)) ** (2.0 / gamma)


def asymptotic_constant_C(gamma: float, Gamma2: float, Gamma3: float,
                          n_nodes: int = DEFAULT_NODES, panels: int = RHO_PANELS) -> QuadratureValue:
    """pi * integral over T^2 of Tr((A* Gamma A)^{2/gamma}).

    ``A`` has a single nonzero column (b, a)/sqrt(r), so the trace reduces to the
    scalar ``((Gamma2 |b|^2 + Gamma3 |a|^2)/r)^{2/gamma}``.  That scalar is
    discontinuous only at the origin; integrating level by level of r never
    samples the origin and the innermost levels see its angular average.
    """
    _check_gamma(gamma)
    if Gamma2 < 0 or Gamma3 < 0:
        raise DomainError("Gamma entries must be nonnegative")
    val = coarea_integral(0.0, lambda xi: flat_band_weight(xi, gamma, Gamma2, Gamma3), n_nodes, panels)
    return QuadratureValue(math.pi * val, math.pi * val.error_estimate, val.n_evaluations)


def asymptotic_constant_CB(gamma: float, d: int, c_plus: float, c_minus: float,
                           B_samples: Sequence[np.ndarray], Gammas: Sequence[float]) -> tuple[float, float]:
    """c_+/- times the grid mean of (sum_k Gamma_k |B_k|^2)^{d/gamma}."""
    if len(B_samples) != len(Gammas):
        raise DomainError(f"{len(B_samples)} B samples but {len(Gammas)} Gamma values")
    if not B_samples:
        return 0.0, 0.0
    shape = np.shape(B_samples[0])
    if len(shape) != d or min(shape) < 64:
        raise ResolutionError(f"need a d={d} grid with at least 64 points per axis, got {shape}")
    acc = np.zeros(shape)
    for B, G in zip(B_samples, Gammas):
        if np.shape(B) != shape:
            raise DomainError("all B samples must share one grid")
        acc += G * np.abs(B) ** 2
    integral = float(np.mean(acc ** (d / gamma)))
    return c_plus * integral, c_minus * integral


def export_density(path: str | Path, m: float, us: Sequence[float], n_nodes: int = DEFAULT_NODES) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["u", "R"])
        for u in us:
            writer.writerow([repr(float(u)), repr(coarea_density(m, u, n_nodes))])
    return path


def constant_convergence(gamma: float, Gamma2: float, Gamma3: float,
                         orders: Sequence[int] = (16, 24, 32, 48)) -> list[tuple[int, float, Optional[float]]]:
    """Rows (nodes per panel, value of the constant C, change from previous row)."""
    rows: list[tuple[int, float, Optional[float]]] = []
    prev = None
    for n in orders:
        val = float(asymptotic_constant_C(gamma, Gamma2, Gamma3, n_nodes=n))
        rows.append((n, val, None if prev is None else val - prev))
        prev = val
    return rows


def export_convergence(path: str | Path, rows: Sequence[tuple[int, float, Optional[float]]]) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["grid", "value", "delta"])
        for n, val, delta in rows:
            writer.writerow([n, repr(val), "" if delta is None else repr(delta)])
    return path
