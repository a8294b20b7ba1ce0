"""Symmetry-optimized architecture.

Window taps whose coefficients share a magnitude are pre-added (with sign)
in one multi-operand adder per group, so the kernel needs one multiplier
per distinct magnitude. For ``[1,2,1] x [1,2,1]`` that is three multipliers
and two 4-operand pre-adders; the 5x5 dyadic kernel from
:func:`reference_kernel` has five magnitudes (five multipliers) and two
4-operand groups.
"""

from __future__ import annotations

from ..pixelio import DEFAULT_FORMAT, FixedFormat, Kernel2D
from ..refconv import accumulator_bits
from .base import ArchInstance, ArchKind, SymmetryClassOverflowError, IncompatibleKernelError, clog2, column_masks
from .fully_parallel import window_registers, window_rows

MAX_CLASSES = 5


def coefficient_classes(kernel: Kernel2D) -> list[tuple[int, list[tuple[int, int, int]]]]:
    """Group nonzero taps by coefficient magnitude, largest first.

    Each entry is ``(magnitude, [(row, col, sign), ...])``.
    """
    groups: dict[int, list] = {}
    for a, row in enumerate(kernel.rows()):
        for b, v in enumerate(row):
            if v:
                groups.setdefault(abs(v), []).append((a, b, 1 if v > 0 else -1))
    return sorted(groups.items(), key=lambda g: -g[0])


def reference_kernel(size: int, format: FixedFormat = DEFAULT_FORMAT) -> Kernel2D:
    """Dyadic pyramid ``outer(v, v)`` with ``v = [1, 2, .., 2**p, .., 2, 1]``."""
    p = size // 2
    v = [1 << (p - abs(i)) for i in range(-p, p + 1)]
    return Kernel2D([[a * b for b in v] for a in v], format)


def check_symmetry_kernel(kernel: Kernel2D):
    if not kernel.is_mirror_symmetric():
        raise IncompatibleKernelError("symmetry architecture needs a mirror-symmetric kernel")
    classes = coefficient_classes(kernel)
    if len(classes) > MAX_CLASSES:
        raise SymmetryClassOverflowError(
            f"symmetry class overflow: {len(classes)} distinct coefficient magnitudes "
            f"(at most {MAX_CLASSES})")
    return classes


class SymmetryOptimized(ArchInstance):
    kind = ArchKind.SymmetryOptimized

    def _build(self):
        self.classes = check_symmetry_kernel(self.kernel2d)
        n, w = self.size, self.image_width
        p = n // 2
        offset = p * w + p
        masks = column_masks(w, n)

        count = self._reg("sample_count")
        count.d = lambda: count.q + 1
        rows = window_registers(self, window_rows(self, self._input))
        newest = self._reg("window_index", d=lambda: count.q, init=-1)

        pre_adders = []
        for g, (mag, taps) in enumerate(self.classes):
            # kernel entry (a, b) sits on window tap (2p - a, 2p - b)
            by_col = [tuple((rows[2 * p - a], 2 * p - b, s) for a, b, s in taps
                            if masks[c][2 * p - b]) for c in range(w)]

            def group_sum(by_col=by_col):
                return sum(s * r.taps[j] for r, j, s in by_col[(newest.q - offset) % w])

            pre_adders.append(self._reg(f"pre_add{g}", d=group_sum,
                                        bits=9 + clog2(len(taps))))
        mags = [mag for mag, _ in self.classes]
        tag_pre = self._reg("pre_add_tag", d=lambda: newest.q - offset, init=-1)

        acc = self._reg("multiply_add",
                        d=lambda: sum(m * r.q for m, r in zip(mags, pre_adders)),
                        bits=accumulator_bits(n, self.format))
        tag = self._reg("multiply_add_tag", d=lambda: tag_pre.q, init=-1)
        self._attach_output(acc, tag)
