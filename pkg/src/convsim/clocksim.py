"""Two-phase clocked-element substrate.

A :class:`Circuit` is a flat list of state elements. Combinational logic is
expressed as the ``d`` callables of those elements, which may only read
committed (pre-edge) state. :meth:`Circuit.step` first lets every element
compute its next state, then commits all of them at once, so the evaluation
order inside a step is unobservable.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

__all__ = [
    "WidthOverflowError", "ClockCounter", "Element", "Register", "LineBuffer",
    "AddressableShiftRegister", "CoefficientRom", "Downsampler", "TraceRecorder",
    "Circuit", "mac", "downsample", "signed_range",
]


class WidthOverflowError(ArithmeticError):
    """A value left the configured signed word width."""


def signed_range(bits: int) -> tuple[int, int]:
    return -(1 << (bits - 1)), (1 << (bits - 1)) - 1


def _check(value: int, bits: int | None, name: str) -> int:
    if bits is not None:
        lim = 1 << (bits - 1)
        if value < -lim or value >= lim:
            raise WidthOverflowError(f"{name}: {value} does not fit in signed {bits} bits")
    return value


def _bounds(bits: int | None) -> tuple[float, float]:
    return signed_range(bits) if bits is not None else (float("-inf"), float("inf"))


def _overflow(name: str, value: int, bits: int):
    return WidthOverflowError(f"{name}: {value} does not fit in signed {bits} bits")


def mac(acc: int, sample: int, coeff: int, bits: int | None = None) -> int:
    """Multiply-accumulate ``acc + sample * coeff``; overflow of ``bits`` raises."""
    return _check(acc + sample * coeff, bits, "mac")


def downsample(stream: Iterable[tuple[int, bool]], factor: int, phase: int = 0) -> list[tuple[int, bool]]:
    """Keep every ``factor``-th valid sample, starting at valid sample ``phase``.

    ``stream`` is a sequence of ``(value, valid)`` pairs; the result keeps the
    selected samples (all valid).
    """
    if factor < 1:
        raise ValueError("factor must be >= 1")
    out = []
    k = 0
    for value, valid in stream:
        if not valid:
            continue
        if k % factor == phase % factor:
            out.append((value, True))
        k += 1
    return out


@dataclass
class ClockCounter:
    cycles: int = 0
    period_ns: float = 10.0

    def tick(self):
        self.cycles += 1

    @property
    def elapsed_ns(self) -> float:
        return self.cycles * self.period_ns


class Element:
    """Base class: ``evaluate`` reads pre-edge state, ``commit`` applies the edge."""

    name = "element"

    def evaluate(self):
        pass

    def commit(self):
        pass

    def reset(self):
        pass


class Register(Element):
    """Edge-triggered register with optional clock enable and width check."""

    def __init__(self, name: str, d: Callable[[], object] | None = None, bits: int | None = None,
                 enable: Callable[[], bool] | None = None, init=0):
        self.name = name
        self.d = d
        self.bits = bits
        self.enable = enable
        self.init = init
        self.q = init
        self._next = init
        self._lo, self._hi = _bounds(bits)

    def evaluate(self):
        if self.enable is None or self.enable():
            v = self.d()
            if self.bits is not None and not self._lo <= v <= self._hi:
                raise _overflow(self.name, v, self.bits)
            self._next = v
        else:
            self._next = self.q

    def commit(self):
        self.q = self._next

    def reset(self):
        self.q = self._next = self.init


class LineBuffer(Element):
    """Single-port RAM ring of ``depth`` words with a wrapping address counter.

    ``q`` is the word at the current address, read before the write, so a
    word written at step ``t`` reappears at step ``t + depth``.
    """

    def __init__(self, name: str, depth: int, d: Callable[[], int] | None = None,
                 word_bits: int | None = None, enable: Callable[[], bool] | None = None):
        if depth < 1:
            raise ValueError("line buffer depth must be >= 1")
        self.name = name
        self.depth = depth
        self.d = d
        self.word_bits = word_bits
        self.enable = enable
        self._lo, self._hi = _bounds(word_bits)
        self.reset()

    @property
    def q(self) -> int:
        return self.storage[self.write_index]

    def evaluate(self):
        if self.enable is None or self.enable():
            v = self.d()
            if self.word_bits is not None and not self._lo <= v <= self._hi:
                raise _overflow(self.name, v, self.word_bits)
            self._we = True
            self._next = v
        else:
            self._we = False

    def commit(self):
        if self._we:
            self.storage[self.write_index] = self._next
            self.write_index += 1
            if self.write_index == self.depth:
                self.write_index = 0

    def reset(self):
        self.storage = [0] * self.depth
        self.write_index = 0
        self._we = False
        self._next = 0


class AddressableShiftRegister(Element):
    """Shift register whose taps are readable by address (0 = newest)."""

    def __init__(self, name: str, depth: int, d: Callable[[], int] | None = None,
                 enable: Callable[[], bool] | None = None, word_bits: int | None = None):
        if depth < 1:
            raise ValueError("shift register depth must be >= 1")
        self.name = name
        self.depth = depth
        self.d = d
        self.enable = enable
        self.word_bits = word_bits
        self._lo, self._hi = _bounds(word_bits)
        self.reset()

    def read(self, address: int) -> int:
        return self.taps[address]

    def evaluate(self):
        if self.enable is None or self.enable():
            v = self.d()
            if self.word_bits is not None and not self._lo <= v <= self._hi:
                raise _overflow(self.name, v, self.word_bits)
            self._shift = True
            self._next = v
        else:
            self._shift = False

    def commit(self):
        if self._shift:
            self.taps = [self._next] + self.taps[:-1]

    def reset(self):
        self.taps = [0] * self.depth
        self._shift = False
        self._next = 0


class CoefficientRom(Element):
    """Read-only coefficient store with combinational read."""

    def __init__(self, name: str, words: Sequence[int]):
        self.name = name
        self.words = tuple(int(w) for w in words)

    def read(self, address: int) -> int:
        return self.words[address]

    def __len__(self):
        return len(self.words)


class Downsampler(Element):
    """Capture register that samples ``d`` once every ``factor`` cycles.

    An internal modulo-``factor`` counter starts at zero on reset; the capture
    happens on the edge where the counter equals ``phase``. ``strobe`` is high
    for the one cycle after a capture.
    """

    def __init__(self, name: str, factor: int, phase: int = 0, d: Callable[[], object] | None = None,
                 init=0):
        if factor < 1:
            raise ValueError("factor must be >= 1")
        self.name = name
        self.init = init
        self.factor = factor
        self.phase = phase % factor
        self.d = d
        self.reset()

    def evaluate(self):
        self._fire = self.count == self.phase
        if self._fire:
            self._next = self.d()

    def commit(self):
        if self._fire:
            self.q = self._next
        self.strobe = self._fire
        self.count += 1
        if self.count == self.factor:
            self.count = 0

    def reset(self):
        self.count = 0
        self.q = self.init
        self._next = self.init
        self._fire = False
        self.strobe = False


@dataclass
class TraceRecorder:
    """Per-cycle snapshots of named signals (one record per watched signal per edge)."""

    signals: dict = field(default_factory=dict)
    records: list = field(default_factory=list)

    def watch(self, name: str, probe: Callable[[], object]):
        self.signals[name] = probe

    def sample(self, cycle: int):
        for name, probe in self.signals.items():
            self.records.append((cycle, name, probe()))

    def clear(self):
        self.records.clear()

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("cycle", "signal_name", "value"))
        w.writerows(self.records)
        return buf.getvalue()


class Circuit:
    """A composed element graph advanced by :meth:`step`."""

    def __init__(self, period_ns: float = 10.0):
        self.elements: list[Element] = []
        self.clock = ClockCounter(period_ns=period_ns)
        self.trace: TraceRecorder | None = None
        self._bind()

    def add(self, element: Element) -> Element:
        self.elements.append(element)
        self._bind()
        return element

    def permute(self, order: Sequence[int]):
        """Reorder element evaluation; committed behaviour must not change."""
        if sorted(order) != list(range(len(self.elements))):
            raise ValueError("order must be a permutation of element indices")
        self.elements = [self.elements[i] for i in order]
        self._bind()

    def _bind(self):
        # stateless elements (ROMs) have nothing to do on an edge
        live = [e for e in self.elements if type(e).evaluate is not Element.evaluate]
        self._evals = [e.evaluate for e in live]
        self._commits = [e.commit for e in live]

    def enable_trace(self) -> TraceRecorder:
        if self.trace is None:
            self.trace = TraceRecorder()
        return self.trace

    def reset(self):
        for e in self.elements:
            e.reset()
        self.clock.cycles = 0
        if self.trace is not None:
            self.trace.clear()

    def step(self):
        for ev in self._evals:
            ev()
        for cm in self._commits:
            cm()
        self.clock.cycles += 1
        if self.trace is not None:
            self.trace.sample(self.clock.cycles)

    def run(self, cycles: int):
        for _ in range(cycles):
            self.step()
