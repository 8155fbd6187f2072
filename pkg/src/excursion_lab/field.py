"""Field sampling by white-noise convolution, with local resampling.

The field f = q * W is realised on a lattice of spacing h covering the
box Lambda_{(1+eps)n}.  The white noise lives on a torus padded by the
kernel truncation radius, so the circular FFT convolution restricted to
the field grid equals the exact linear convolution with the truncated
kernel; the only synthesis bias is the documented q^2 tail mass.

Noise values are counter-based: each site draws a deterministic Gaussian
from (stream seed, absolute site coordinates), which makes replicates,
threads and local resampling order-independent.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.signal import convolve as _signal_convolve

from .errors import ConfigError, ResourceError
from .kernels import KernelSpec, kernel_taps
from .rng import STREAM_W, STREAM_WPRIME, derive_seed, site_gaussians

DEFAULT_MEMORY_BUDGET = 4 << 30  # bytes


@dataclass
class NoiseLattice:
    """Scaled white noise on the padded sampling torus.

    ``origin`` is the absolute integer coordinate (in units of h) of the
    first site along each axis; site values are sigma_h * g where g is
    the counter-based standard normal for (seed_w, site coordinate) and
    sigma_h = h^(d/2).
    """

    spacing: float
    origin: tuple[int, ...]
    shape: tuple[int, ...]
    master_seed: int
    replicate: int
    seed_w: int
    seed_wprime: int
    values: np.ndarray = field(repr=False)

    @property
    def dimension(self) -> int:
        return len(self.shape)

    def coordinate_grids(self, slices: tuple[slice, ...] | None = None):
        """Absolute integer coordinates (units of h), broadcastable per axis."""
        dims = self.dimension
        grids = []
        for axis in range(dims):
            sl = slices[axis] if slices is not None else slice(0, self.shape[axis])
            coords = np.arange(sl.start, sl.stop, dtype=np.int64) + self.origin[axis]
            shape = [1] * dims
            shape[axis] = coords.size
            grids.append(coords.reshape(shape))
        return tuple(grids)

    def wprime_block(self, slices: tuple[slice, ...]) -> np.ndarray:
        """Values of the independent resampling stream W' on a sub-block."""
        sigma = self.spacing ** (self.dimension / 2.0)
        return sigma * site_gaussians(self.seed_wprime, self.coordinate_grids(slices))


def white_noise(
    spacing: float,
    origin: tuple[int, ...],
    shape: tuple[int, ...],
    master_seed: int,
    replicate: int,
) -> NoiseLattice:
    seed_w = derive_seed(master_seed, replicate, STREAM_W)
    seed_wprime = derive_seed(master_seed, replicate, STREAM_WPRIME)
    dims = len(shape)
    grids = []
    for axis in range(dims):
        coords = np.arange(shape[axis], dtype=np.int64) + origin[axis]
        view = [1] * dims
        view[axis] = shape[axis]
        grids.append(coords.reshape(view))
    sigma = spacing ** (dims / 2.0)
    values = sigma * site_gaussians(seed_w, tuple(grids))
    return NoiseLattice(
        spacing=spacing,
        origin=tuple(origin),
        shape=tuple(shape),
        master_seed=master_seed,
        replicate=replicate,
        seed_w=seed_w,
        seed_wprime=seed_wprime,
        values=values,
    )


@dataclass
class FieldSample:
    """Sampled field values on the grid covering Lambda_{(1+eps)n}."""

    values: np.ndarray = field(repr=False)
    spacing: float = 0.25
    n: float = 16.0
    epsilon: float = 0.25
    kernel: KernelSpec | None = None
    master_seed: int = 0
    replicate: int = 0
    noise: NoiseLattice | None = field(default=None, repr=False)
    origin: tuple[int, ...] = (0, 0)
    resampled: tuple[tuple[int, ...], ...] = ()

    @property
    def dimension(self) -> int:
        return self.values.ndim

    @property
    def sites_per_unit(self) -> int:
        return round(1.0 / self.spacing)

    def axis_coordinates(self, axis: int = 0) -> np.ndarray:
        return (np.arange(self.values.shape[axis]) + self.origin[axis]) * self.spacing

    def index_of(self, coordinate: float, axis: int = 0) -> int:
        """Grid index of a lattice-aligned coordinate along one axis."""
        steps = coordinate / self.spacing
        idx = round(steps)
        if abs(steps - idx) > 1e-9:
            raise ValueError(f"coordinate {coordinate} is not on the lattice")
        return idx - self.origin[axis]

    def inner_window(self) -> tuple[slice, ...]:
        """Half-open index window of sites whose cells tile Lambda_n."""
        w = round(self.n * self.sites_per_unit)
        return tuple(
            slice(-w - self.origin[a], w - self.origin[a]) for a in range(self.dimension)
        )


def _grid_counts(spec: KernelSpec, n: float, epsilon: float) -> tuple[int, int]:
    h = spec.spacing
    half_steps = (1.0 + epsilon) * n / h
    big_k = round(half_steps)
    if abs(half_steps - big_k) > 1e-9:
        raise ConfigError(
            f"field.n: (1+epsilon)*n = {(1.0 + epsilon) * n} is not a multiple of spacing {h}"
        )
    inner_steps = n / h
    if abs(inner_steps - round(inner_steps)) > 1e-9:
        raise ConfigError(f"field.n: n = {n} is not a multiple of spacing {h}")
    return big_k, round(inner_steps)


def estimate_grid_bytes(spec: KernelSpec, n: float, epsilon: float) -> int:
    """Rough per-replicate memory footprint of sampling this grid."""
    big_k, _ = _grid_counts(spec, n, epsilon)
    torus = 2 * big_k + 1 + 2 * spec.half_width
    # noise + field + two complex spectra
    return int(torus**spec.dimension * 8 * 6)


def sample_field(
    spec: KernelSpec,
    n: float,
    epsilon: float = 0.25,
    spacing: float | None = None,
    seed: int = 0,
    replicate: int = 0,
    memory_budget: int = DEFAULT_MEMORY_BUDGET,
) -> FieldSample:
    """Draw one replicate of f = q * W on the grid covering Lambda_{(1+eps)n}."""
    if spacing is not None and abs(spacing - spec.spacing) > 1e-12:
        raise ConfigError(
            f"field.spacing: {spacing} does not match the kernel normalization "
            f"spacing {spec.spacing}; rebuild the kernel for this h"
        )
    if epsilon < 0:
        raise ConfigError(f"field.epsilon: must be >= 0, got {epsilon}")
    if n <= 0:
        raise ConfigError(f"field.n: must be positive, got {n}")
    estimate = estimate_grid_bytes(spec, n, epsilon)
    if estimate > memory_budget:
        raise ResourceError(
            f"grid for n={n}, epsilon={epsilon}, h={spec.spacing} exceeds the budget",
            estimate,
            memory_budget,
        )

    big_k, _ = _grid_counts(spec, n, epsilon)
    pad = spec.half_width
    length = 2 * big_k + 1
    torus = length + 2 * pad
    dims = spec.dimension

    noise = white_noise(
        spacing=spec.spacing,
        origin=(-(big_k + pad),) * dims,
        shape=(torus,) * dims,
        master_seed=seed,
        replicate=replicate,
    )

    taps = kernel_taps(spec)
    kernel_torus = np.zeros((torus,) * dims)
    # Embed the centered tap table at offset 0 with wraparound indexing.
    idx = np.arange(-pad, pad + 1) % torus
    kernel_torus[np.ix_(*([idx] * dims))] = taps
    spectrum = np.fft.rfftn(noise.values) * np.fft.rfftn(kernel_torus)
    convolved = np.fft.irfftn(spectrum, s=(torus,) * dims)
    core = convolved[(slice(pad, pad + length),) * dims].copy()

    return FieldSample(
        values=core,
        spacing=spec.spacing,
        n=float(n),
        epsilon=float(epsilon),
        kernel=spec,
        master_seed=seed,
        replicate=replicate,
        noise=noise,
        origin=(-big_k,) * dims,
    )


def _cube_slices(fieldsample: FieldSample, v: tuple[int, ...]) -> tuple[slice, ...]:
    """Torus index slices of the noise sites in the half-open unit cube B_v."""
    noise = fieldsample.noise
    if noise is None:
        raise ValueError("field sample carries no noise lattice; cannot resample")
    spu = fieldsample.sites_per_unit
    sl = []
    for axis, coord in enumerate(v):
        start = coord * spu - noise.origin[axis]
        stop = start + spu
        if start < 0 or stop > noise.shape[axis]:
            raise ValueError(f"cube at {tuple(v)} lies outside the noise lattice bounds")
        sl.append(slice(start, stop))
    return tuple(sl)


def perturbation(fieldsample: FieldSample, v) -> np.ndarray:
    """Field change p_v from redrawing the white noise on the unit cube B_v.

    Computed by direct truncated convolution of the noise difference on
    B_v with the kernel; the support is B_v padded by the truncation
    radius, and subtracting the result from the field reproduces the
    resampled field exactly.
    """
    v = tuple(int(c) for c in np.atleast_1d(v))
    spec = fieldsample.kernel
    if spec is None:
        raise ValueError("field sample carries no kernel; cannot resample")
    if len(v) != fieldsample.dimension:
        raise ValueError(f"cube index has {len(v)} coordinates, field has d={fieldsample.dimension}")
    noise = fieldsample.noise
    slices = _cube_slices(fieldsample, v)
    delta = noise.values[slices] - noise.wprime_block(slices)

    taps = kernel_taps(spec)
    block = _signal_convolve(delta, taps, mode="full", method="direct")

    out = np.zeros_like(fieldsample.values)
    pad = spec.half_width
    dst = []
    src = []
    for axis in range(fieldsample.dimension):
        # Absolute coordinate of the block's first sample, units of h.
        start_abs = noise.origin[axis] + slices[axis].start - pad
        lo = start_abs - fieldsample.origin[axis]
        hi = lo + block.shape[axis]
        cut_lo = max(lo, 0)
        cut_hi = min(hi, out.shape[axis])
        if cut_lo >= cut_hi:
            return out
        dst.append(slice(cut_lo, cut_hi))
        src.append(slice(cut_lo - lo, cut_hi - lo))
    out[tuple(dst)] = block[tuple(src)]
    return out


def resample_cube(fieldsample: FieldSample, v) -> FieldSample:
    """Field with the white noise on B_v redrawn from the independent stream."""
    v = tuple(int(c) for c in np.atleast_1d(v))
    p = perturbation(fieldsample, v)
    return replace(
        fieldsample,
        values=fieldsample.values - p,
        resampled=fieldsample.resampled + (v,),
    )
