"""Fully parallel window architecture: line buffers, size x size window
registers, one multiplier per tap and an adder tree. One pixel per clock."""

from __future__ import annotations

from itertools import chain
from operator import mul

from ..clocksim import AddressableShiftRegister, LineBuffer
from ..refconv import accumulator_bits
from .base import PIXEL_WORD, ArchInstance, ArchKind, column_masks


def window_rows(inst: ArchInstance, src, word_bits=PIXEL_WORD, enable=None):
    """Chain ``size - 1`` line buffers behind ``src``; return the row feeds,
    newest row first."""
    feeds = [src]
    for i in range(inst.size - 1):
        prev = feeds[-1]
        lb = inst.circuit.add(LineBuffer(f"line_buffer{i}", inst.image_width, d=prev,
                                         word_bits=word_bits, enable=enable))
        feeds.append(lambda lb=lb: lb.q)
    return feeds


def window_registers(inst: ArchInstance, feeds):
    return [inst.circuit.add(AddressableShiftRegister(f"window_row{i}", inst.size, d=f,
                                                      word_bits=PIXEL_WORD))
            for i, f in enumerate(feeds)]


class FullyParallel(ArchInstance):
    kind = ArchKind.FullyParallel

    def _build(self):
        n, w = self.size, self.image_width
        p = n // 2
        k = self.kernel2d.rows()
        offset = p * w + p

        count = self._reg("sample_count")
        count.d = lambda: count.q + 1
        rows = window_registers(self, window_rows(self, self._input))
        newest = self._reg("window_index", d=lambda: count.q, init=-1)

        # tap (i, j) sees the pixel at (p - i, p - j) relative to the window centre
        masks = column_masks(w, n)
        gated = [tuple(k[2 * p - i][2 * p - j] if masks[c][j] else 0
                       for i in range(n) for j in range(n)) for c in range(w)]

        def products():
            taps = chain.from_iterable(r.taps for r in rows)
            return sum(map(mul, taps, gated[(newest.q - offset) % w]))

        acc = self._reg("adder_tree", d=products, bits=accumulator_bits(n, self.format))
        tag = self._reg("adder_tree_tag", d=lambda: newest.q - offset, init=-1)
        self._attach_output(acc, tag)
