"""The 3x3 Bloch symbol of H0 on the dual torus and its band structure.

Torus points are taken modulo 1 in each coordinate.  With
``a(xi) = -1 + exp(-2 pi i xi_1)`` and ``b(xi) = -1 + exp(-2 pi i xi_2)`` the
symbol is ``[[m, a, b], [conj a, -m, 0], [conj b, 0, -m]]`` and the bands are
``-sqrt(r_m)``, ``-m`` and ``+sqrt(r_m)`` with ``r_m = m^2 + |a|^2 + |b|^2``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import NonDifferentiablePointError, SingularResolventError

RESOLVENT_TOL = 1e-12
ELLIPTIC = "elliptic"
HYPERBOLIC = "hyperbolic"
FLAT_BAND = "flat_band"
DIRAC_POINT = "dirac_point"

CRITICAL_MOMENTA = ((0.0, 0.0), (0.5, 0.0), (0.0, 0.5), (0.5, 0.5))


def _reduce(xi) -> np.ndarray:
    return np.mod(np.asarray(xi, dtype=float), 1.0)


def a_of(xi) -> np.ndarray:
    xi = _reduce(xi)
    return -1.0 + np.exp(-2j * np.pi * xi[..., 0])


def b_of(xi) -> np.ndarray:
    xi = _reduce(xi)
    return -1.0 + np.exp(-2j * np.pi * xi[..., 1])


def abs_a2(xi) -> np.ndarray:
    """|a|^2 = 4 sin^2(pi xi_1)."""
    return 4.0 * np.sin(np.pi * _reduce(xi)[..., 0]) ** 2


def abs_b2(xi) -> np.ndarray:
    return 4.0 * np.sin(np.pi * _reduce(xi)[..., 1]) ** 2


def r_m(xi, m: float) -> np.ndarray:
    return m * m + abs_a2(xi) + abs_b2(xi)


def eval_symbol(xi, m: float) -> np.ndarray:
    """Hermitian symbol h0(xi); vectorized over leading axes of ``xi``."""
    xi = _reduce(xi)
    a, b = a_of(xi), b_of(xi)
    h = np.zeros(xi.shape[:-1] + (3, 3), dtype=complex)
    h[..., 0, 0] = m
    h[..., 1, 1] = -m
    h[..., 2, 2] = -m
    h[..., 0, 1] = a
    h[..., 0, 2] = b
    h[..., 1, 0] = np.conj(a)
    h[..., 2, 0] = np.conj(b)
    return h


class BandTriple(NamedTuple):
    z_minus: np.ndarray
    z_zero: np.ndarray
    z_plus: np.ndarray


def band_values(xi, m: float) -> BandTriple:
    # hypot keeps z_+ >= m even when m*m underflows
    root = np.hypot(m, np.sqrt(abs_a2(xi) + abs_b2(xi)))
    return BandTriple(-root, np.full_like(root, -float(m)), root)


def band_gradient(xi, m: float) -> np.ndarray:
    """Gradient of the upper band z_+; the lower band has the opposite sign."""
    xi = _reduce(xi)
    r = r_m(xi, m)
    if np.any(r == 0.0):
        raise NonDifferentiablePointError("z_+ is not differentiable at the Dirac point (m=0, xi=0)")
    s = np.stack([np.sin(2 * np.pi * xi[..., 0]), np.sin(2 * np.pi * xi[..., 1])], axis=-1)
    return 2 * np.pi / np.sqrt(r)[..., None] * s


def grad_r_norm2(xi) -> np.ndarray:
    """|grad r_m|^2 = 16 pi^2 (sin^2 2 pi xi_1 + sin^2 2 pi xi_2); independent of m."""
    xi = _reduce(xi)
    return 16 * np.pi**2 * (np.sin(2 * np.pi * xi[..., 0]) ** 2 + np.sin(2 * np.pi * xi[..., 1]) ** 2)


def characteristic_poly(xi, m: float, z):
    s = abs_a2(xi) + abs_b2(xi)
    return (m - z) * (m + z) ** 2 + (m + z) * s


def resolvent_fiber(xi, m: float, z: complex) -> np.ndarray:
    """Closed-form (h0(xi) - z)^{-1} at a single torus point."""
    xi = _reduce(xi)
    a, b = complex(a_of(xi)), complex(b_of(xi))
    aa, bb = abs(a) ** 2, abs(b) ** 2
    p = (m - z) * (m + z) ** 2 + (m + z) * (aa + bb)
    if abs(p) <= RESOLVENT_TOL:
        raise SingularResolventError(f"|p_xi(z)| = {abs(p):.3e} at the pole", abs(p))
    mz = m + z
    adj = np.array(
        [
            [mz * mz, mz * a, mz * b],
            [mz * a.conjugate(), z * z - m * m - bb, a.conjugate() * b],
            [mz * b.conjugate(), a * b.conjugate(), z * z - m * m - aa],
        ],
        dtype=complex,
    )
    return adj / p


def hessian_z_plus(xi, m: float) -> np.ndarray:
    """Hessian of z_+ at a critical momentum, where the gradient of r_m vanishes."""
    xi = _reduce(xi)
    r = float(r_m(xi, m))
    if r == 0.0:
        raise NonDifferentiablePointError("no Hessian at the Dirac point")
    d11 = 8 * np.pi**2 * math.cos(2 * np.pi * xi[0])
    d22 = 8 * np.pi**2 * math.cos(2 * np.pi * xi[1])
    return np.diag([d11, d22]) / (2 * math.sqrt(r))


@dataclass(frozen=True)
class Threshold:
    value: float
    kind: str


def classify_thresholds(m: float) -> list[Threshold]:
    """Critical values of the bands with their type, sorted by value.

    Kinds come from the Hessian signature of z_+ at the four critical momenta:
    definite means a band extremum (elliptic), indefinite a saddle (hyperbolic).
    The mirror value of z_- = -z_+ inherits the same kind, except that -m, where
    the maximum of z_- touches the flat band, is labelled ``flat_band``.
    """
    if m < 0:
        raise ValueError("mass must be nonnegative")
    found: dict[float, str] = {}
    for xi in CRITICAL_MOMENTA:
        value = math.sqrt(float(r_m(np.array(xi), m)))
        if value == 0.0:
            found[0.0] = DIRAC_POINT
            continue
        eig = np.linalg.eigvalsh(hessian_z_plus(np.array(xi), m))
        kind = ELLIPTIC if (eig > 0).all() or (eig < 0).all() else HYPERBOLIC
        found[value] = kind
        found[-value] = FLAT_BAND if abs(value - m) < 1e-15 and m > 0 else kind
    return [Threshold(v, k) for v, k in sorted(found.items())]


def band_table(m: float, n: int) -> np.ndarray:
    """Rows (xi1, xi2, z_-, z_0, z_+) on the uniform n x n torus grid."""
    k = np.arange(n) / n
    g1, g2 = np.meshgrid(k, k, indexing="ij")
    xi = np.stack([g1.ravel(), g2.ravel()], axis=-1)
    z = band_values(xi, m)
    return np.column_stack([xi, z.z_minus, z.z_zero, z.z_plus])


def export_bands(path: str | Path, m: float, n: int) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["xi1", "xi2", "z_minus", "z_zero", "z_plus"])
        for row in band_table(m, n):
            writer.writerow([repr(float(v)) for v in row])
    return path
