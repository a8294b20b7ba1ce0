"""Separable architectures: a column (P x 1) pass and a row (1 x P) pass.

``SeparableColRow`` runs the column pass on the line-buffered pixel stream
and the row pass on its wide results; ``SeparableRowCol`` runs the row pass
first and line-buffers the wide partial sums for the column pass. Partial
sums are never rounded, so both orders give identical pixels.
"""

from __future__ import annotations

from operator import mul

from ..clocksim import AddressableShiftRegister
from ..pixelio import PIXEL_BITS, decompose_separable
from ..refconv import accumulator_bits
from .base import ArchInstance, ArchKind, clog2, column_masks
from .fully_parallel import window_rows


def partial_word_bits(size: int, total_bits: int) -> int:
    return PIXEL_BITS + total_bits + clog2(size)


class _Separable(ArchInstance):
    def __init__(self, kernel, image_width, format, period_ns=10.0):
        self.sep = kernel if not hasattr(kernel, "coeffs") else decompose_separable(kernel)
        super().__init__(self.sep, image_width, format, period_ns)

    def _setup(self):
        n, w = self.size, self.image_width
        p = n // 2
        self.word_bits = partial_word_bits(n, self.format.total_bits)
        self.acc_bits = accumulator_bits(n, self.format)
        # tap i (0 = newest) pairs with factor entry 2p - i
        self.col_taps = [self.sep.col[2 * p - i] for i in range(n)]
        masks = column_masks(w, n)
        self.row_gated = [tuple(self.sep.row[2 * p - j] if masks[c][j] else 0 for j in range(n))
                          for c in range(w)]
        count = self._reg("sample_count")
        count.d = lambda: count.q + 1
        return count


class SeparableColRow(_Separable):
    kind = ArchKind.SeparableColRow

    def _build(self):
        count = self._setup()
        n, w = self.size, self.image_width
        p = n // 2
        feeds = window_rows(self, self._input)
        col_taps = self.col_taps

        column = self._reg("column_pass",
                           d=lambda: sum(c * f() for c, f in zip(col_taps, feeds)),
                           bits=self.word_bits)
        column_idx = self._reg("column_index", d=lambda: count.q, init=-1)
        shift = self.circuit.add(AddressableShiftRegister(
            "row_taps", n, d=lambda: column.q, word_bits=self.word_bits))
        shift_idx = self._reg("row_taps_index", d=lambda: column_idx.q, init=-1)
        offset = p * w + p
        gated = self.row_gated

        acc = self._reg("row_pass",
                        d=lambda: sum(map(mul, shift.taps, gated[(shift_idx.q - offset) % w])),
                        bits=self.acc_bits)
        tag = self._reg("row_pass_tag", d=lambda: shift_idx.q - offset, init=-1)
        self._attach_output(acc, tag)


class SeparableRowCol(_Separable):
    kind = ArchKind.SeparableRowCol

    def _build(self):
        count = self._setup()
        n, w = self.size, self.image_width
        p = n // 2
        shift = self.circuit.add(AddressableShiftRegister("row_taps", n, d=self._input))
        shift_idx = self._reg("row_taps_index", d=lambda: count.q, init=-1)
        gated = self.row_gated

        row = self._reg("row_pass",
                        d=lambda: sum(map(mul, shift.taps, gated[(shift_idx.q - p) % w])),
                        bits=self.word_bits)
        row_centre = self._reg("row_pass_centre", d=lambda: shift_idx.q - p, init=-p - 1)
        feeds = window_rows(self, lambda: row.q, word_bits=self.word_bits)
        col_taps = self.col_taps

        acc = self._reg("column_pass",
                        d=lambda: sum(c * f() for c, f in zip(col_taps, feeds)),
                        bits=self.acc_bits)
        tag = self._reg("column_pass_tag", d=lambda: row_centre.q - p * w, init=-1)
        self._attach_output(acc, tag)
