"""Analytic resource counts and latency model, no simulation required."""

from __future__ import annotations

from collections import Counter

from ..pixelio import DEFAULT_FORMAT, PIXEL_BITS, FixedFormat, Kernel2D
from ..refconv import accumulator_bits
from .base import ArchKind, OpCount, clog2
from .separable import partial_word_bits
from .symmetry import check_symmetry_kernel, reference_kernel


def operation_counts(kind: ArchKind, size: int, image_width: int,
                     format: FixedFormat = DEFAULT_FORMAT, kernel: Kernel2D | None = None) -> OpCount:
    """Multipliers, adders (by arity), line buffers, register bits and ROM words.

    Only the symmetry architecture depends on coefficient values; without a
    ``kernel`` it is counted for :func:`reference_kernel` of that size.
    """
    if size < 1 or size % 2 == 0:
        raise ValueError(f"size must be odd and >= 1, got {size}")
    n = size
    acc = accumulator_bits(n, format)
    px = PIXEL_BITS

    if kind is ArchKind.FullyParallel:
        return OpCount(
            multipliers=n * n,
            adders={2: n * n - 1} if n > 1 else {},
            line_buffers=n - 1,
            line_buffer_bits=(px,) * (n - 1),
            register_bits=n * n * px + acc + px,
            rom_words=n * n,
        )
    if kind is ArchKind.MacFirIterating:
        engine = px + format.total_bits + clog2(n)
        adders = {2: n}
        if n > 1:
            adders[n] = adders.get(n, 0) + 1
        return OpCount(
            multipliers=n,
            adders=adders,
            line_buffers=n,
            line_buffer_bits=(px,) * n,
            register_bits=n * (n * px + px + 2 * engine) + acc + px,
            rom_words=n * n,
        )
    if kind in (ArchKind.SeparableColRow, ArchKind.SeparableRowCol):
        word = partial_word_bits(n, format.total_bits)
        lb_bits = px if kind is ArchKind.SeparableColRow else word
        taps = n * (word if kind is ArchKind.SeparableColRow else px)
        return OpCount(
            multipliers=2 * n,
            adders={2: 2 * (n - 1)} if n > 1 else {},
            line_buffers=n - 1,
            line_buffer_bits=(lb_bits,) * (n - 1),
            register_bits=taps + word + acc + px,
            rom_words=2 * n,
        )
    if kind is ArchKind.SymmetryOptimized:
        classes = check_symmetry_kernel(kernel if kernel is not None else reference_kernel(n, format))
        sizes = Counter(len(taps) for _, taps in classes if len(taps) > 1)
        if len(classes) > 1:
            sizes[len(classes)] += 1
        return OpCount(
            multipliers=len(classes),
            adders=dict(sizes),
            line_buffers=n - 1,
            line_buffer_bits=(px,) * (n - 1),
            register_bits=n * n * px + sum(px + 1 + clog2(len(t)) for _, t in classes) + acc + px,
            rom_words=len(classes),
        )
    raise ValueError(f"unknown kind {kind!r}")


def cycles_per_pixel(kind: ArchKind, size: int) -> int:
    return size if kind is ArchKind.MacFirIterating else 1


def predicted_latency(kind: ArchKind, size: int, image_width: int) -> int:
    """Cycles from the first input pixel to the first valid output pixel."""
    p = size // 2
    w = image_width
    if kind is ArchKind.FullyParallel:
        return p * w + p + 3
    if kind is ArchKind.MacFirIterating:
        return size * ((p + 1) * w + p + 2) + 4
    return p * w + p + 4


def latency_bound(kind: ArchKind, size: int, image_width: int) -> int:
    """Line-buffer fill plus a bounded pipeline depth, at the input sample rate.

    The iterating design buffers one extra row ahead of its engines.
    """
    cpp = cycles_per_pixel(kind, size)
    extra = image_width if kind is ArchKind.MacFirIterating else 0
    return cpp * ((size - 1) * (image_width + 1) + extra) + 16
