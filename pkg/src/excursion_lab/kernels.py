"""Convolution kernels and covariances for the sampled fields.

Three families are supported.  The Gaussian-squared-exponential family
("bargmann_fock") and the polynomially decaying family ("rational") have
closed forms; the Matern family is realised directly on the sampling
lattice as the inverse DFT of the square root of its spectral density,
which avoids Bessel evaluations and is exact for the lattice model that
is actually sampled.

All kernels are truncated at a radius R chosen so the discarded q^2 mass
is below ``tail_tolerance`` of the total, and rescaled by ``c_norm`` so
the lattice variance h^d * sum((c_norm * q)^2) is exactly one.  The
normalization is recomputed for every lattice spacing h.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ResourceError, UnsupportedEvaluationError

FAMILIES = ("bargmann_fock", "matern", "rational")

_TAIL_TOLERANCE = 1e-8
# Relative mass allowed in the outermost shell of the reference lattice;
# guarantees the "total" used for the tail criterion is trustworthy.
_REFERENCE_TOLERANCE = 1e-12
_MATERN_ELEMENT_BUDGET = 40_000_000


@dataclass(frozen=True, eq=False)
class KernelSpec:
    """A normalized, truncated convolution kernel bound to a lattice spacing."""

    family: str
    dimension: int
    spacing: float
    truncation_radius: float
    c_norm: float
    nu: float | None = None
    beta: float | None = None
    smoothness_k: int = 4
    table: np.ndarray | None = field(default=None, repr=False)

    @property
    def half_width(self) -> int:
        """Kernel support half-width in lattice sites."""
        return int(math.floor(self.truncation_radius / self.spacing + 1e-9))

    def describe(self) -> str:
        extra = ""
        if self.family == "matern":
            extra = f", nu={self.nu}"
        elif self.family == "rational":
            extra = f", beta={self.beta}"
        return f"{self.family}(d={self.dimension}, h={self.spacing}{extra})"


def _check_family(family: str, dimension: int, nu, beta) -> None:
    problems = []
    if family not in FAMILIES:
        problems.append(f"kernel.family: unknown family {family!r}, expected one of {FAMILIES}")
    if dimension not in (2, 3):
        problems.append(f"kernel.dimension: must be 2 or 3, got {dimension}")
    if family == "matern" and (nu is None or nu <= 0):
        problems.append("kernel.nu: matern requires nu > 0")
    if family == "rational":
        if beta is None or beta <= dimension:
            problems.append(f"kernel.beta: rational requires beta > dimension ({dimension})")
    if problems:
        raise ConfigError(problems)


def _check_spacing(spacing: float) -> int:
    if spacing <= 0:
        raise ConfigError("kernel.spacing: must be positive")
    per_unit = round(1.0 / spacing)
    if per_unit < 1 or abs(per_unit * spacing - 1.0) > 1e-9:
        raise ConfigError(f"kernel.spacing: {spacing} does not divide 1")
    return per_unit


def _raw_q(family: str, dimension: int, nu, beta, radius_sq: np.ndarray) -> np.ndarray:
    """Unnormalized closed-form kernel on squared radii."""
    if family == "bargmann_fock":
        return (2.0 / math.pi) ** (dimension / 4.0) * np.exp(-radius_sq)
    if family == "rational":
        return (1.0 + radius_sq) ** (-beta / 2.0)
    raise UnsupportedEvaluationError(f"no closed form for family {family!r}")


def _offset_grids(half_width: int, dimension: int) -> tuple[np.ndarray, ...]:
    axis = np.arange(-half_width, half_width + 1)
    return tuple(np.meshgrid(*([axis] * dimension), indexing="ij"))


def _matern_lattice_table(nu: float, dimension: int, spacing: float) -> np.ndarray:
    """Kernel values on a centered odd lattice, from the spectral density.

    The table is enlarged until the outermost radial shell carries a
    negligible share of the q^2 mass, so truncation-radius selection on
    it is reliable.
    """
    extent = 48.0 if dimension == 2 else 24.0
    while True:
        size = int(round(extent / spacing))
        size += 1 - size % 2  # odd, so every +k frequency has a -k partner
        if size**dimension > _MATERN_ELEMENT_BUDGET:
            raise ResourceError(
                f"matern kernel table for nu={nu}, h={spacing}, d={dimension} "
                "is too large; coarsen the spacing",
                size**dimension * 16,
                _MATERN_ELEMENT_BUDGET * 16,
            )
        freq = 2.0 * math.pi * np.fft.fftfreq(size, d=spacing)
        grids = np.meshgrid(*([freq] * dimension), indexing="ij")
        t_sq = sum(g * g for g in grids)
        sqrt_rho = (1.0 + t_sq) ** (-(nu + dimension / 2.0) / 2.0)
        table = np.fft.fftshift(np.fft.ifftn(sqrt_rho).real)

        half = size // 2
        offsets = _offset_grids(half, dimension)
        radius = spacing * np.sqrt(sum(o.astype(float) ** 2 for o in offsets))
        mass = table**2
        total = float(mass.sum())
        outer = float(mass[radius > 0.45 * extent].sum())
        if outer < _REFERENCE_TOLERANCE * total:
            return table
        extent *= 2.0


def _closed_form_reference(family, dimension, nu, beta, spacing):
    """Reference lattice of raw kernel values, wide enough that the total
    q^2 mass is essentially complete."""
    extent = 8.0
    while True:
        half = int(math.ceil(extent / spacing))
        offsets = _offset_grids(half, dimension)
        radius_sq = sum(o.astype(float) ** 2 for o in offsets) * spacing**2
        values = _raw_q(family, dimension, nu, beta, radius_sq)
        radius = np.sqrt(radius_sq)
        mass = values**2
        total = float(mass.sum())
        outer = float(mass[radius > 0.45 * extent].sum())
        if outer < _REFERENCE_TOLERANCE * total:
            return values, radius
        extent *= 2.0
        if extent > 4096:
            raise ConfigError(
                f"kernel.family: {family} tail mass does not settle; check parameters"
            )


def _choose_truncation(values: np.ndarray, radius: np.ndarray, tol: float) -> float:
    """Smallest lattice radius whose relative q^2 tail mass is below tol."""
    flat_r = radius.ravel()
    flat_m = (values**2).ravel()
    order = np.argsort(flat_r, kind="stable")
    sorted_r = flat_r[order]
    cum = np.cumsum(flat_m[order])
    total = cum[-1]
    tail = total - cum
    ok = tail < tol * total
    idx = int(np.argmax(ok))
    if not ok[idx]:
        raise ConfigError("kernel truncation: tail tolerance unreachable on reference lattice")
    # Include every site at the same radius as the chosen one.
    r = sorted_r[idx]
    while idx + 1 < len(sorted_r) and sorted_r[idx + 1] <= r + 1e-12:
        idx += 1
    return float(sorted_r[idx])


def make_kernel(
    family: str,
    dimension: int = 2,
    spacing: float = 0.25,
    nu: float | None = None,
    beta: float | None = None,
    smoothness_k: int = 4,
    tail_tolerance: float = _TAIL_TOLERANCE,
) -> KernelSpec:
    """Build a normalized, truncated kernel for one lattice spacing."""
    _check_family(family, dimension, nu, beta)
    _check_spacing(spacing)

    if family == "matern":
        table = _matern_lattice_table(nu, dimension, spacing)
        half = table.shape[0] // 2
        offsets = _offset_grids(half, dimension)
        radius = spacing * np.sqrt(sum(o.astype(float) ** 2 for o in offsets))
        values = table
    else:
        values, radius = _closed_form_reference(family, dimension, nu, beta, spacing)

    cutoff = _choose_truncation(values, radius, tail_tolerance)
    inside = radius <= cutoff + 1e-12
    lattice_mass = float((values[inside] ** 2).sum()) * spacing**dimension
    c_norm = 1.0 / math.sqrt(lattice_mass)

    stored = None
    if family == "matern":
        p = int(math.floor(cutoff / spacing + 1e-9))
        half = values.shape[0] // 2
        sl = slice(half - p, half + p + 1)
        stored = values[(sl,) * dimension].copy()

    return KernelSpec(
        family=family,
        dimension=dimension,
        spacing=spacing,
        truncation_radius=cutoff,
        c_norm=c_norm,
        nu=nu,
        beta=beta,
        smoothness_k=smoothness_k,
        table=stored,
    )


def kernel_taps(spec: KernelSpec) -> np.ndarray:
    """Normalized truncated kernel on its support lattice, shape (2P+1)^d."""
    p = spec.half_width
    offsets = _offset_grids(p, spec.dimension)
    radius = spec.spacing * np.sqrt(sum(o.astype(float) ** 2 for o in offsets))
    if spec.family == "matern":
        values = spec.table.copy()
    else:
        radius_sq = sum(o.astype(float) ** 2 for o in offsets) * spec.spacing**2
        values = _raw_q(spec.family, spec.dimension, spec.nu, spec.beta, radius_sq)
    values = np.where(radius <= spec.truncation_radius + 1e-12, values, 0.0)
    return spec.c_norm * values


def evaluate_q(spec: KernelSpec, x) -> float:
    """Normalized kernel value at a point of R^d.

    Matern kernels exist only on the sampling lattice, so off-lattice
    points raise UnsupportedEvaluationError for that family.
    """
    pt = np.asarray(x, dtype=float).reshape(-1)
    if pt.size != spec.dimension:
        raise ValueError(f"point has {pt.size} coordinates, kernel has d={spec.dimension}")
    if not np.all(np.isfinite(pt)):
        raise ValueError("point must be finite")
    if spec.family == "matern":
        steps = pt / spec.spacing
        idx = np.rint(steps)
        if np.max(np.abs(steps - idx)) > 1e-9:
            raise UnsupportedEvaluationError(
                "unsupported evaluation: matern kernel is defined only on lattice points"
            )
        p = spec.half_width
        idx = idx.astype(int) + p
        if np.any(idx < 0) or np.any(idx > 2 * p):
            return 0.0
        return float(spec.c_norm * spec.table[tuple(idx)])
    r_sq = float(np.dot(pt, pt))
    return float(spec.c_norm * _raw_q(spec.family, spec.dimension, spec.nu, spec.beta, r_sq))


def covariance_K(spec: KernelSpec, x) -> float:
    """Covariance at lag x of the unit-variance sampled field.

    Closed form for the bargmann_fock family; the lattice autoconvolution
    h^d * sum_y q(y) q(y - x) for the others.
    """
    pt = np.asarray(x, dtype=float).reshape(-1)
    if pt.size != spec.dimension:
        raise ValueError(f"point has {pt.size} coordinates, kernel has d={spec.dimension}")
    if spec.family == "bargmann_fock":
        return float(np.exp(-0.5 * np.dot(pt, pt)))

    taps = kernel_taps(spec)
    p = spec.half_width
    if spec.family == "matern":
        steps = pt / spec.spacing
        shift = np.rint(steps)
        if np.max(np.abs(steps - shift)) > 1e-9:
            raise UnsupportedEvaluationError(
                "unsupported evaluation: matern covariance is defined only on lattice lags"
            )
        shift = shift.astype(int)
        # Overlap of the tap table with itself shifted by the lag.
        src = []
        dst = []
        for s in shift:
            lo, hi = max(0, s), min(2 * p + 1, 2 * p + 1 + s)
            if lo >= hi:
                return 0.0
            src.append(slice(lo, hi))
            dst.append(slice(lo - s, hi - s))
        overlap = taps[tuple(src)] * taps[tuple(dst)]
        return float(overlap.sum() * spec.spacing**spec.dimension)

    offsets = _offset_grids(p, spec.dimension)
    shifted_sq = sum(
        (o.astype(float) * spec.spacing - c) ** 2 for o, c in zip(offsets, pt)
    )
    radius_shifted = np.sqrt(shifted_sq)
    q_shifted = _raw_q(spec.family, spec.dimension, spec.nu, spec.beta, shifted_sq)
    q_shifted = np.where(radius_shifted <= spec.truncation_radius + 1e-12, q_shifted, 0.0)
    q_shifted *= spec.c_norm
    return float((taps * q_shifted).sum() * spec.spacing**spec.dimension)


def beta_thresholds(k: int, d: int) -> tuple[float, float, float]:
    """Decay exponents required for the CLT of each functional, by
    smoothness order k >= 4: (volume, Euler characteristic, surface area)."""
    if int(k) != k or k < 4:
        raise ValueError(f"smoothness order k must be an integer >= 4, got {k}")
    if d < 1:
        raise ValueError(f"dimension must be positive, got {d}")
    k = int(k)
    b_vol = 3.0 * d
    b_ec = (k - 1) / (k - 3) * 3.0 * d
    b_sa = (9.0 * k * (k + 1) - 42.0) / (k * (k + 1) - 8.0) * d
    return (b_vol, b_ec, b_sa)


def effective_beta(spec: KernelSpec) -> float:
    """Decay exponent available for threshold warnings.

    The gaussian-type and matern kernels decay faster than any power, so
    they satisfy every threshold; only the rational family has a finite
    exponent.
    """
    if spec.family == "rational":
        return float(spec.beta)
    return math.inf
