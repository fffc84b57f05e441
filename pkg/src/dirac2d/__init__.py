"""Flat-band Dirac-type operators on Z^2: lattice assembly, band structure,
coarea quadrature, inertia-based eigenvalue counting and toroidal-kernel spectra."""

__version__ = "0.1.0"

from .errors import DiracError  # noqa: E402
from .fiber import band_values, classify_thresholds, eval_symbol  # noqa: E402
from .lattice import (  # noqa: E402
    LatticeBox,
    Potential,
    assemble_hamiltonian,
    build_lattice,
    loop_state,
)
from .inertia import inertia_count  # noqa: E402
from .level_sets import asymptotic_constant_C, coarea_density, coarea_integral, level_curve  # noqa: E402
from .counting import (  # noqa: E402
    counting_series,
    finite_volume_ssf,
    fit_power_law,
    flat_band_multiplicity,
)
from .toroidal import (  # noqa: E402
    assemble_toroidal,
    eigen_counting,
    lattice_count_scalar,
    verify_scaled_counts,
    weak_schatten,
)

__all__ = [
    "DiracError",
    "LatticeBox",
    "Potential",
    "asymptotic_constant_C",
    "assemble_hamiltonian",
    "assemble_toroidal",
    "band_values",
    "build_lattice",
    "classify_thresholds",
    "coarea_density",
    "coarea_integral",
    "counting_series",
    "eigen_counting",
    "eval_symbol",
    "finite_volume_ssf",
    "fit_power_law",
    "flat_band_multiplicity",
    "inertia_count",
    "lattice_count_scalar",
    "level_curve",
    "loop_state",
    "verify_scaled_counts",
    "weak_schatten",
]
