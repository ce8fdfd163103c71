"""Spectral grids and instrument-resolution convolution.

Measured spectra are the physical lineshape blurred by the spectrometer
response, modeled here as a Gaussian of given FWHM.  Convolution is
performed with periodic (wrap-around) boundary handling so that a
unit-sum kernel conserves the discretely integrated power exactly; with
open boundaries the tails leaking off the grid edges would break power
bookkeeping at the 1e-4 level for typical windows.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.ndimage import convolve1d

#: Ratio between the FWHM and standard deviation of a Gaussian.
FWHM_PER_SIGMA = 2.0 * math.sqrt(2.0 * math.log(2.0))


def centered_grid(center_nm: float, span_nm: float, step_nm: float) -> np.ndarray:
    """Uniform wavelength grid of the given span centered on ``center_nm``.

    The number of points is ``round(span/step) + 1``, so the endpoints sit
    at ``center ± span/2`` up to rounding of the step count, and an odd
    count places a sample exactly at the center.
    """
    if step_nm <= 0.0:
        raise ValueError(f"step_nm must be positive, got {step_nm}")
    if span_nm <= 0.0:
        raise ValueError(f"span_nm must be positive, got {span_nm}")
    count = int(round(span_nm / step_nm)) + 1
    offsets = (np.arange(count) - (count - 1) / 2.0) * step_nm
    return center_nm + offsets


def range_grid(start_nm: float, stop_nm: float, step_nm: float) -> np.ndarray:
    """Uniform grid from ``start_nm`` to ``stop_nm`` inclusive (up to rounding)."""
    if step_nm <= 0.0:
        raise ValueError(f"step_nm must be positive, got {step_nm}")
    if stop_nm <= start_nm:
        raise ValueError(f"stop_nm must exceed start_nm, got [{start_nm}, {stop_nm}]")
    count = int(math.floor((stop_nm - start_nm) / step_nm + 1e-9)) + 1
    return start_nm + np.arange(count) * step_nm


def gaussian_kernel(step_nm: float, fwhm_nm: float, max_halfwidth: int | None = None) -> np.ndarray:
    """Discrete unit-sum Gaussian kernel for a grid of spacing ``step_nm``.

    Parameters
    ----------
    step_nm : float
        Grid spacing.
    fwhm_nm : float
        Full width at half maximum of the response.  Must be positive; a
        width much smaller than the grid step degenerates to the identity
        kernel.
    max_halfwidth : int, optional
        Cap on the kernel half-width in samples (e.g. to keep the kernel
        shorter than the data for wrap-around convolution).

    Returns
    -------
    ndarray
        Odd-length kernel normalized to unit sum.
    """
    if step_nm <= 0.0:
        raise ValueError(f"step_nm must be positive, got {step_nm}")
    if fwhm_nm <= 0.0:
        raise ValueError(f"fwhm_nm must be positive, got {fwhm_nm}")
    sigma_samples = fwhm_nm / FWHM_PER_SIGMA / step_nm
    if sigma_samples <= 0.1:
        # The nearest-neighbor weight exp(-1/(2*sigma^2)) is below 1e-21
        # here, so the kernel is the identity to machine precision.
        return np.array([1.0])
    halfwidth = int(math.ceil(4.0 * sigma_samples))
    if max_halfwidth is not None:
        halfwidth = min(halfwidth, max_halfwidth)
    if halfwidth == 0:
        return np.array([1.0])
    offsets = np.arange(-halfwidth, halfwidth + 1, dtype=float)
    kernel = np.exp(-0.5 * (offsets / sigma_samples) ** 2)
    return kernel / kernel.sum()


def convolve_conserving(values: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Convolve with wrap-around boundaries, conserving the sample sum.

    For a unit-sum kernel the output sum equals the input sum to machine
    precision, because every input sample is redistributed rather than
    partially lost off the edges.
    """
    values = np.asarray(values, dtype=float)
    if len(kernel) > values.size:
        raise ValueError(
            f"kernel of {len(kernel)} samples exceeds the {values.size}-sample grid"
        )
    if len(kernel) == 1:
        return values * kernel[0]
    return convolve1d(values, kernel, mode="wrap")


def apply_resolution(values: np.ndarray, step_nm: float, resolution_fwhm_nm: float) -> np.ndarray:
    """Blur a sampled spectrum by the instrument response.

    Parameters
    ----------
    values : ndarray
        Spectrum samples on a uniform grid.
    step_nm : float
        Grid spacing.
    resolution_fwhm_nm : float
        Instrument FWHM; must be positive.

    Returns
    -------
    ndarray
        Blurred spectrum with the same discrete integral.
    """
    values = np.asarray(values, dtype=float)
    kernel = gaussian_kernel(
        step_nm, resolution_fwhm_nm, max_halfwidth=(values.size - 1) // 2
    )
    return convolve_conserving(values, kernel)
