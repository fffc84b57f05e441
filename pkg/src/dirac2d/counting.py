"""Gap counting for H+/-, the finite-volume spectral shift and power-law fits."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DomainError, FitWindowError, ShiftCollisionError
from .inertia import inertia_count
from .lattice import LatticeBox, Potential, SymmetricSparseMatrix, assemble_hamiltonian

# lower side first, so that a collision is resolved toward "strictly below"
NUDGES = (-1e-9, 1e-9, -2e-9)
EDGE_EPS = 1e-8
FLAT_BAND_DELTA = 1e-6

OPERATOR_TAGS = {0: "H0", 1: "Hplus", -1: "Hminus"}


def robust_count(M: SymmetricSparseMatrix, lam: float) -> int:
    """Eigenvalues of ``M`` below ``lam``, retrying with small nudges on a shift collision."""
    try:
        return inertia_count(M, lam)
    except ShiftCollisionError:
        pass
    for d in NUDGES:
        try:
            return inertia_count(M, lam + d)
        except ShiftCollisionError:
            continue
    raise ShiftCollisionError(f"shift {lam!r} still singular after {len(NUDGES)} nudges", lam)


@dataclass
class CountingSeries:
    lambda_grid: np.ndarray
    counts: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.lambda_grid = np.asarray(self.lambda_grid, dtype=float)
        counts = np.asarray(self.counts)
        # integer counts stay integral; real-valued series are allowed for synthetic fits
        self.counts = counts.astype(np.int64) if counts.dtype.kind in "iub" or counts.size == 0 else counts.astype(float)
        if self.lambda_grid.shape != self.counts.shape:
            raise DomainError("lambda grid and counts differ in length")
        d = np.diff(self.lambda_grid)
        if len(d) and not ((d > 0).all() or (d < 0).all()):
            raise DomainError("lambda grid must be strictly monotone")

    @property
    def operator(self) -> str:
        return self.meta.get("operator", "")

    def restrict(self, mask: np.ndarray) -> "CountingSeries":
        return CountingSeries(self.lambda_grid[mask], self.counts[mask], dict(self.meta))


def gap_grid(m: float, lam0: float = 0.1, floor: float = 1e-8, reference: Optional[float] = None) -> np.ndarray:
    """lambda_j = ref + lam0 * 2^{-j/2} while the offset stays >= floor (ref defaults to -m)."""
    ref = -m if reference is None else reference
    if lam0 <= 0 or floor <= 0:
        raise DomainError("lam0 and floor must be positive")
    n = int(math.floor(2 * math.log2(lam0 / floor))) + 1
    return ref + lam0 * 2.0 ** (-np.arange(max(n, 1)) / 2)


def _meta(box: LatticeBox, m: float, potential: Optional[Potential], sign: int, operator: str) -> dict:
    meta = {"L": box.L, "boundary": box.boundary, "m": m, "sign": sign, "operator": operator}
    if potential is not None:
        meta["potential"] = potential.describe()
    return meta


def counting_series(box: LatticeBox, m: float, potential: Optional[Potential], sign: int,
                    lambda_grid: Sequence[float], H: Optional[SymmetricSparseMatrix] = None) -> CountingSeries:
    """N(lambda) = count(H, m - eps) - count(H, lambda): eigenvalues in (lambda, m)."""
    if sign not in OPERATOR_TAGS:
        raise DomainError("sign must be -1, 0 or +1")
    if H is None:
        H = assemble_hamiltonian(box, m, potential if sign else None, sign or 1)
    top = robust_count(H, m - EDGE_EPS)
    counts = [top - robust_count(H, float(lam)) for lam in lambda_grid]
    return CountingSeries(np.asarray(lambda_grid, float), np.array(counts),
                          _meta(box, m, potential, sign, OPERATOR_TAGS[sign]))


def finite_volume_ssf(box: LatticeBox, m: float, potential: Potential, sign: int,
                      lambda_grid: Sequence[float],
                      H0: Optional[SymmetricSparseMatrix] = None,
                      H: Optional[SymmetricSparseMatrix] = None) -> CountingSeries:
    """eta_L(lambda) = count(H0, lambda) - count(H_sign, lambda).

    This is the finite-box trace of E_0(lambda) - E(lambda), so for sign=+1 and
    V >= 0 it lies in [0, rank V].
    """
    if sign not in (1, -1):
        raise DomainError("sign must be +1 or -1")
    H0 = H0 if H0 is not None else assemble_hamiltonian(box, m)
    H = H if H is not None else assemble_hamiltonian(box, m, potential, sign)
    eta = [robust_count(H0, float(lam)) - robust_count(H, float(lam)) for lam in lambda_grid]
    return CountingSeries(np.asarray(lambda_grid, float), np.array(eta),
                          _meta(box, m, potential, sign, "ssf"))


def flat_band_multiplicity(box: LatticeBox, m: float) -> int:
    """Multiplicity of the eigenvalue -m of H0, from counts at -m +/- 1e-6."""
    H0 = assemble_hamiltonian(box, m)
    return robust_count(H0, -m + FLAT_BAND_DELTA) - robust_count(H0, -m - FLAT_BAND_DELTA)


def momentum_floor(L: int) -> float:
    """(2 pi / L)^2 * 8: below this the finite box no longer resolves momenta."""
    return (2 * math.pi / L) ** 2 * 8


def localization_floor(L: int, Gamma_max: float, gamma: float) -> float:
    """Gamma_max * (L/4)^{-gamma}.

    A flat-band state centred at distance R is lifted by about Gamma R^{-gamma};
    offsets below this floor are carried by states that do not fit in the box.
    """
    return Gamma_max * (L / 4.0) ** (-gamma)


def validity_floor(L: int, rule: str = "localization", Gamma_max: float = 1.0, gamma: float = 4.0) -> float:
    if rule == "localization":
        return localization_floor(L, Gamma_max, gamma)
    if rule == "momentum":
        return momentum_floor(L)
    raise DomainError(f"unknown floor rule {rule!r}")


@dataclass
class PowerLawFit:
    exponent: float
    constant: float
    residual: float
    window: tuple[float, float]
    n_points: int
    floor: Optional[float] = None
    floor_rule: Optional[str] = None

    def report(self, predicted_exponent: Optional[float] = None,
               predicted_constant: Optional[float] = None) -> dict:
        out = {
            "exponent": self.exponent,
            "constant": self.constant,
            "residual": self.residual,
            "window": list(self.window),
            "n_points": self.n_points,
            "floor": self.floor,
            "floor_rule": self.floor_rule,
        }
        if predicted_exponent is not None:
            out["predicted_exponent"] = predicted_exponent
        if predicted_constant is not None:
            out["predicted_constant"] = predicted_constant
        return out


def fit_power_law(series: CountingSeries, reference_point: float, floor: float = 0.0,
                  floor_rule: Optional[str] = None) -> PowerLawFit:
    """Least squares of ln N against ln|lambda - ref| over points with |lambda - ref| >= floor."""
    dist = np.abs(series.lambda_grid - reference_point)
    mask = dist >= floor
    x, n = dist[mask], series.counts[mask]
    if len(x) < 5:
        raise FitWindowError(f"only {len(x)} points in the fit window (need 5)")
    if (n < 1).any():
        raise FitWindowError("all counts in the fit window must be >= 1")
    if x.max() / x.min() < 10.0:
        raise FitWindowError("the fit window spans less than one decade")
    lx, ly = np.log(x), np.log(n.astype(float))
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = float(np.sqrt(np.mean((ly - (slope * lx + intercept)) ** 2)))
    return PowerLawFit(float(-slope), float(math.exp(intercept)), resid,
                       (float(x.min()), float(x.max())), int(len(x)), floor, floor_rule)
