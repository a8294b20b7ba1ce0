"""Golden software convolution that every simulated architecture must match bit for bit.

Conventions shared with the pipelines:

* correlation orientation (the window is not flipped),
* zero padding outside the image, output the same size as the input,
* exact integer accumulation, one rounding step at the very end
  (:func:`normalize_and_clamp`).
"""

from __future__ import annotations

import numpy as np

from .pixelio import (
    MAXVAL, PIXEL_BITS, FixedFormat, Image, Kernel2D, SeparableKernel, div_round_half_away,
)

__all__ = [
    "accumulator_bits", "normalize_and_clamp", "convolve_direct",
    "convolve_separable", "COL_FIRST", "ROW_FIRST",
]

COL_FIRST = "col_first"
ROW_FIRST = "row_first"


def accumulator_bits(size: int, fmt: FixedFormat) -> int:
    """Signed width that holds any size x size window sum of 8-bit pixels."""
    return PIXEL_BITS + fmt.total_bits + (size * size - 1).bit_length()


def normalize_and_clamp(acc: int, coeff_sum: int, frac_bits: int = 0) -> int:
    """Scale an accumulator back to an 8-bit pixel.

    Non-zero ``coeff_sum`` divides by the coefficient sum. Zero-sum kernels
    (edge detectors) take the absolute value and drop ``frac_bits``.
    """
    if coeff_sum != 0:
        v = div_round_half_away(acc, coeff_sum)
    else:
        v = div_round_half_away(abs(acc), 1 << frac_bits)
    return 0 if v < 0 else MAXVAL if v > MAXVAL else v


def _normalize_array(acc: np.ndarray, coeff_sum: int, frac_bits: int) -> np.ndarray:
    flat = [normalize_and_clamp(int(v), coeff_sum, frac_bits) for v in acc.ravel().tolist()]
    return np.array(flat, dtype=np.uint8).reshape(acc.shape)


def _wide_dtype(bound: int):
    # int64 unless the worst-case magnitude could overflow it
    return np.int64 if bound < (1 << 62) else object


def _check_fit(image: Image, size: int):
    if size > min(image.width, image.height):
        raise ValueError(
            f"kernel size {size} exceeds image dimension {image.width}x{image.height}")


def convolve_direct(image: Image, kernel: Kernel2D) -> Image:
    """Zero-padded 2-D correlation followed by normalize-and-clamp."""
    n = kernel.size
    _check_fit(image, n)
    p = n // 2
    coeffs = kernel.coeffs.tolist()
    bound = MAXVAL * sum(abs(v) for row in coeffs for v in row)
    dt = _wide_dtype(bound)
    h, w = image.height, image.width
    padded = np.zeros((h + 2 * p, w + 2 * p), dtype=dt)
    padded[p:p + h, p:p + w] = image.pixels
    acc = np.zeros((h, w), dtype=dt)
    for a in range(n):
        for b in range(n):
            if coeffs[a][b]:
                acc += coeffs[a][b] * padded[a:a + h, b:b + w]
    return Image(_normalize_array(acc, kernel.coeff_sum, kernel.format.frac_bits))


def _pass_vertical(src: np.ndarray, taps: list[int]) -> np.ndarray:
    n = len(taps)
    p = n // 2
    h = src.shape[0]
    padded = np.zeros((h + 2 * p,) + src.shape[1:], dtype=src.dtype)
    padded[p:p + h] = src
    out = np.zeros_like(src)
    for a, t in enumerate(taps):
        if t:
            out += t * padded[a:a + h]
    return out


def convolve_separable(image: Image, sep: SeparableKernel, order: str = COL_FIRST) -> Image:
    """Two 1-D passes with unrounded wide intermediates, one final rounding.

    ``col_first`` applies the P x 1 column factor before the 1 x P row factor;
    ``row_first`` the reverse. Both yield the same exact integer sums.
    """
    if order not in (COL_FIRST, ROW_FIRST):
        raise ValueError(f"order must be {COL_FIRST!r} or {ROW_FIRST!r}")
    _check_fit(image, sep.size)
    bound = MAXVAL * sum(map(abs, sep.col)) * sum(map(abs, sep.row))
    x = image.pixels.astype(_wide_dtype(bound))
    if order == COL_FIRST:
        acc = _pass_vertical(_pass_vertical(x, list(sep.col)).T, list(sep.row)).T
    else:
        acc = _pass_vertical(_pass_vertical(x.T, list(sep.row)).T, list(sep.col))
    return Image(_normalize_array(acc, sep.coeff_sum, sep.format.frac_bits))
