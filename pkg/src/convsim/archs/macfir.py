"""Iterating architecture: one MAC FIR engine per kernel row.

The circuit runs on the fast clock. The pixel side (line buffers, the
engines' addressable shift registers, the sample counter) is clock-enabled
once every ``n`` cycles, when the tap counter wraps. In between, each
engine walks its ``n`` taps with one multiplier:

    r0: masked tap sample            (tap counter a)
    r1: accumulator, cleared at a=0  (a delayed 1)
    r2: capture / downsample by n    (phase: completed sum)

The ``n`` captured sums are added in one ``n``-input adder, then scaled.
"""

from __future__ import annotations

from ..clocksim import AddressableShiftRegister, CoefficientRom, Downsampler, LineBuffer, mac
from ..pixelio import PIXEL_BITS
from ..refconv import accumulator_bits
from .base import PIXEL_WORD, ArchInstance, ArchKind, clog2, column_masks


class MacFirIterating(ArchInstance):
    kind = ArchKind.MacFirIterating

    @property
    def cycles_per_sample(self):
        return self.size

    def _build(self):
        n, w = self.size, self.image_width
        p = n // 2
        k = self.kernel2d.rows()
        circuit = self.circuit
        engine_bits = PIXEL_BITS + self.format.total_bits + clog2(n)

        addr = self._reg("tap_counter")
        addr.d = lambda: 0 if addr.q == n - 1 else addr.q + 1
        self._ce = ce = lambda: addr.q == n - 1

        count = self._reg("sample_count", enable=ce)
        count.d = lambda: count.q + 1
        newest = self._reg("asr_index", d=lambda: count.q, enable=ce, init=-1)
        # engine i is fed by line buffer i: row delay (i + 1) * w
        offset = (p + 1) * w + p
        masks = column_masks(w, n)

        centre = self._reg("centre_index", d=lambda: newest.q - offset, init=-1)
        addr_d1 = self._reg("tap_counter_d1", d=lambda: addr.q)
        centre_d1 = self._reg("centre_index_d1", d=lambda: centre.q, init=-1)

        prev = self._input
        captures = []
        for i in range(n):
            lb = circuit.add(LineBuffer(f"line_buffer{i}", w, d=prev, word_bits=PIXEL_WORD, enable=ce))
            prev = lambda lb=lb: lb.q
            asr = circuit.add(AddressableShiftRegister(f"asr{i}", n, d=prev, enable=ce,
                                                       word_bits=PIXEL_WORD))
            # tap address a holds the pixel at (p - i, p - a) from the centre
            rom = circuit.add(CoefficientRom(f"rom{i}", [k[2 * p - i][2 * p - a] for a in range(n)]))

            def sample(asr=asr):
                a = addr.q
                return asr.taps[a] if masks[(newest.q - offset) % w][a] else 0

            r0 = self._reg(f"r0_engine{i}", d=sample, bits=PIXEL_WORD)
            r1 = self._reg(f"r1_engine{i}", bits=engine_bits)
            r1.d = (lambda r0=r0, r1=r1, rom=rom:
                    mac(0 if addr_d1.q == 0 else r1.q, r0.q, rom.read(addr_d1.q)))
            r2 = circuit.add(Downsampler(f"r2_engine{i}", n, phase=1, d=lambda r1=r1: r1.q))
            captures.append(r2)

        # the sum for tap counter value n-1 sits in r1 two cycles later
        tag_capture = circuit.add(Downsampler("capture_tag", n, phase=1,
                                              d=lambda: centre_d1.q, init=-1))
        combined = self._reg("engine_sum", d=lambda: sum(c.q for c in captures),
                             bits=accumulator_bits(n, self.format))
        combined_tag = self._reg("engine_sum_tag", d=lambda: tag_capture.q, init=-1)
        combined_strobe = self._reg("engine_sum_strobe", d=lambda: tag_capture.strobe, init=False)
        self._attach_output(combined, combined_tag, strobe=lambda: combined_strobe.q)

    def accepts_input(self) -> bool:
        return self._ce()
