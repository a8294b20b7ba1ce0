"""Shared plumbing for the streaming architectures: kinds, reports, the stream driver."""

from __future__ import annotations

import enum
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction

from ..clocksim import Circuit, Register
from ..pixelio import PIXEL_BITS, FixedFormat, Image, Kernel2D, SeparableKernel
from ..refconv import normalize_and_clamp

PIXEL_WORD = PIXEL_BITS + 1  # pixels travel as signed words with one spare sign bit


class ArchKind(enum.Enum):
    FullyParallel = "fully-parallel"
    MacFirIterating = "mac-fir"
    SeparableColRow = "separable-col-row"
    SeparableRowCol = "separable-row-col"
    SymmetryOptimized = "symmetry"

    @classmethod
    def parse(cls, text: str) -> "ArchKind":
        for k in cls:
            if text in (k.value, k.name):
                return k
        raise ValueError(f"unknown architecture {text!r}; choose from {[k.value for k in cls]}")

    @property
    def order(self) -> int:
        return list(ArchKind).index(self)


class IncompatibleKernelError(ValueError):
    pass


class SymmetryClassOverflowError(IncompatibleKernelError):
    pass


def clog2(n: int) -> int:
    return (n - 1).bit_length()


@dataclass(frozen=True)
class CycleReport:
    latency_cycles: int
    cycles_per_pixel_steady: Fraction
    total_cycles: int
    clock_period_ns: float
    pixels: int

    @property
    def fps_at_clock(self) -> float:
        return 1.0 / (self.total_cycles * self.clock_period_ns * 1e-9)

    def as_dict(self) -> dict:
        cpp = self.cycles_per_pixel_steady
        return {
            "latency_cycles": self.latency_cycles,
            "cycles_per_pixel_steady": str(cpp) if cpp.denominator != 1 else cpp.numerator,
            "total_cycles": self.total_cycles,
            "clock_period_ns": self.clock_period_ns,
            "pixels": self.pixels,
            "fps_at_clock": round(self.fps_at_clock, 3),
        }


@dataclass(frozen=True)
class OpCount:
    """Analytic resource tally; ``adders`` maps operand arity to adder count."""

    multipliers: int
    adders: dict = field(default_factory=dict)
    line_buffers: int = 0
    line_buffer_bits: tuple = ()
    register_bits: int = 0
    rom_words: int = 0

    @property
    def adder_count(self) -> int:
        return sum(self.adders.values())

    def as_dict(self) -> dict:
        return {
            "multipliers": self.multipliers,
            "adders": self.adder_count,
            "adders_by_arity": {str(k): v for k, v in sorted(self.adders.items())},
            "line_buffers": self.line_buffers,
            "line_buffer_bits": list(self.line_buffer_bits),
            "register_bits": self.register_bits,
            "rom_words": self.rom_words,
        }


def column_masks(width: int, size: int) -> list[tuple[bool, ...]]:
    """``masks[c][j]``: whether tap ``j`` (0 = newest column) is inside the row
    when the window is centred on column ``c``."""
    p = size // 2
    return [tuple(0 <= c + p - j < width for j in range(size)) for c in range(width)]


class ArchInstance:
    """A built streaming pipeline.

    Subclasses wire up ``self.circuit`` and the output registers
    ``_out`` (pixel), ``_out_tag`` (centre pixel index, negative when idle)
    and optionally ``_out_strobe``.
    """

    kind: ArchKind
    cycles_per_sample = 1

    def __init__(self, kernel: Kernel2D | SeparableKernel, image_width: int,
                 format: FixedFormat, period_ns: float = 10.0):
        self.kernel = kernel
        self.kernel2d = kernel.outer() if isinstance(kernel, SeparableKernel) else kernel
        self.format = format
        self.image_width = image_width
        self.size = self.kernel2d.size
        self.circuit = Circuit(period_ns)
        self.port_in = 0
        self.frame_pixels = 0
        self._out_strobe = None
        self._build()

    def _build(self):
        raise NotImplementedError

    # wiring helpers -------------------------------------------------------
    def _reg(self, *args, **kw) -> Register:
        return self.circuit.add(Register(*args, **kw))

    def _input(self) -> int:
        return self.port_in

    def _normalizer(self, src: Register):
        s = self.kernel2d.coeff_sum
        f = self.format.frac_bits
        return lambda: normalize_and_clamp(src.q, s, f)

    def _attach_output(self, acc: Register, tag: Register, strobe=None):
        self._out = self._reg("pixel_out", d=self._normalizer(acc), bits=PIXEL_WORD)
        self._out_tag = self._reg("pixel_out_tag", d=lambda: tag.q, init=-1)
        if strobe is not None:
            self._out_strobe = self._reg("pixel_out_strobe", d=strobe, init=False)

    # driver-facing signals ------------------------------------------------
    def accepts_input(self) -> bool:
        return True

    def out_valid(self) -> bool:
        if self._out_strobe is not None and not self._out_strobe.q:
            return False
        return 0 <= self._out_tag.q < self.frame_pixels

    def watch_defaults(self):
        tr = self.circuit.enable_trace()
        tr.watch("pixel_in", lambda: self.port_in)
        tr.watch("pixel_out", lambda: self._out.q)
        tr.watch("pixel_out_valid", lambda: int(self.out_valid()))
        return tr

    def __repr__(self):
        return f"{type(self).__name__}(size={self.size}, image_width={self.image_width})"


def _steady_interval(times: list[int], fallback: int) -> Fraction:
    gaps = Counter(b - a for a, b in zip(times, times[1:]))
    if not gaps:
        return Fraction(fallback)
    best = max(gaps.values())
    return Fraction(min(g for g, n in gaps.items() if n == best))


def run_stream(inst: ArchInstance, image: Image) -> tuple[Image, CycleReport]:
    """Stream ``image`` row-major through ``inst`` and collect the output frame.

    The first pixel is presented at cycle 0. After the last pixel the driver
    feeds zeros (the bottom padding rows) until every output has appeared.
    """
    if image.width != inst.image_width:
        raise ValueError(f"image width {image.width} != instance width {inst.image_width}")
    if image.height < inst.size:
        raise ValueError(f"image height {image.height} < kernel size {inst.size}")
    circuit = inst.circuit
    circuit.reset()
    pixels = image.flat()
    m = len(pixels)
    inst.frame_pixels = m
    inst.port_in = 0
    out = [0] * m
    times = []
    k = got = 0
    limit = inst.cycles_per_sample * (m + (inst.size + 1) * (inst.image_width + 1)) + 64
    accepts, step, valid = inst.accepts_input, circuit.step, inst.out_valid
    clock = circuit.clock
    while got < m:
        if clock.cycles > limit:
            raise RuntimeError(f"pipeline stalled: {got} of {m} outputs after {clock.cycles} cycles")
        take = accepts()
        inst.port_in = pixels[k] if k < m else 0
        step()
        if take:
            k += 1
        if valid():
            tag = inst._out_tag.q
            if tag != got:
                raise RuntimeError(f"output order broken: expected pixel {got}, got {tag}")
            out[got] = inst._out.q
            times.append(clock.cycles)
            got += 1
    report = CycleReport(
        latency_cycles=times[0],
        cycles_per_pixel_steady=_steady_interval(times, inst.cycles_per_sample),
        total_cycles=times[-1],
        clock_period_ns=clock.period_ns,
        pixels=m,
    )
    return Image.from_flat(image.width, image.height, out), report
