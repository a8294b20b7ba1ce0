"""Frame-budget model, fps arithmetic, speedup and a design-space explorer.

The frame model counts clock cycles per frame as

    C = M * N / t_p + xi

(pixels times iterations over per-core pixel throughput, plus pipeline
latency) and divides by ``cores * f`` to get seconds per frame. Cycle
arithmetic is done in exact fractions; only the reported seconds are floats.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .archs import ArchKind, CycleReport, OpCount, latency_bound, operation_counts
from .pixelio import DEFAULT_FORMAT, FixedFormat

__all__ = [
    "DEFAULT_BUDGET_S", "REFERENCE_LATENCY_XI", "PerfParams", "PerfReport", "Candidate",
    "Constraints", "frame_time", "throughput_fps", "speedup", "explore",
    "analytic_candidate", "measured_candidate", "default_latency",
]

DEFAULT_BUDGET_S = 0.033
REFERENCE_LATENCY_XI = 350  # quoted for a 150x150 frame with a 5x5 window


@dataclass(frozen=True)
class PerfParams:
    pixels_M: int
    iterations_N: int = 1
    throughput_tp: Fraction = Fraction(1)
    latency_xi: int = 0
    clock_hz_f: float = 100e6
    cores_n: int = 1

    def __post_init__(self):
        tp = Fraction(self.throughput_tp)
        object.__setattr__(self, "throughput_tp", tp)
        if not (0 < tp <= 1):
            raise ValueError(f"throughput_tp must lie in (0, 1], got {tp}")
        if self.pixels_M < 1 or self.iterations_N < 1 or self.cores_n < 1:
            raise ValueError("pixels_M, iterations_N and cores_n must be positive")
        if self.latency_xi < 0:
            raise ValueError("latency_xi must be >= 0")
        if not self.clock_hz_f > 0:
            raise ValueError("clock_hz_f must be positive")


@dataclass(frozen=True)
class PerfReport:
    total_cycles_C: Fraction
    frame_time_s: float
    fps: float
    meets_budget: bool
    budget_s: float = DEFAULT_BUDGET_S

    def as_dict(self) -> dict:
        c = self.total_cycles_C
        return {
            "total_cycles_C": c.numerator if c.denominator == 1 else float(c),
            "frame_time_s": float(f"{self.frame_time_s:.9g}"),
            "fps": round(self.fps, 3),
            "meets_budget": self.meets_budget,
            "budget_s": self.budget_s,
        }


def frame_time(params: PerfParams, budget_s: float = DEFAULT_BUDGET_S) -> PerfReport:
    c = Fraction(params.pixels_M * params.iterations_N) / params.throughput_tp + params.latency_xi
    t = c / (params.cores_n * Fraction(params.clock_hz_f))
    return PerfReport(total_cycles_C=c, frame_time_s=float(t), fps=float(1 / t),
                      meets_budget=t <= Fraction(budget_s), budget_s=budget_s)


def throughput_fps(clock_hz: float, cycles_per_pixel, width: int, height: int) -> float:
    """Frames per second when every pixel costs ``cycles_per_pixel`` clocks."""
    if clock_hz <= 0 or cycles_per_pixel <= 0 or width < 1 or height < 1:
        raise ValueError("throughput_fps needs positive inputs")
    return float(Fraction(clock_hz) / Fraction(cycles_per_pixel) / (width * height))


def speedup(software_s: float, hardware_s: float) -> float:
    if software_s <= 0 or hardware_s <= 0:
        raise ValueError("speedup needs positive times")
    return software_s / hardware_s


# ---------------------------------------------------------------------------
# design-space exploration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Candidate:
    kind: ArchKind
    op_count: OpCount
    perf: PerfReport
    derived_from: str  # "analytic" or "measured"
    cycle_report: CycleReport | None = None

    def as_dict(self) -> dict:
        d = {
            "kind": self.kind.value,
            "derived_from": self.derived_from,
            "op_count": self.op_count.as_dict(),
            "perf": self.perf.as_dict(),
        }
        if self.cycle_report is not None:
            d["cycle_report"] = self.cycle_report.as_dict()
        return d


@dataclass(frozen=True)
class Constraints:
    budget_s: float = DEFAULT_BUDGET_S
    max_multipliers: int | None = None
    width: int = 150
    height: int = 150
    clock_hz: float = 100e6


def default_latency(kind: ArchKind, size: int, width: int, height: int) -> int:
    """Analytic latency: the quoted 350 cycles for 150x150 with a 5x5 window,
    otherwise the architecture's latency bound."""
    if (width, height, size) == (150, 150, 5):
        return REFERENCE_LATENCY_XI
    return latency_bound(kind, size, width)


def _cpp(kind: ArchKind, size: int) -> int:
    return size if kind is ArchKind.MacFirIterating else 1


def analytic_candidate(kind: ArchKind, size: int, constraints: Constraints,
                       format: FixedFormat = DEFAULT_FORMAT, kernel=None,
                       latency_xi: int | None = None) -> Candidate:
    w, h = constraints.width, constraints.height
    xi = default_latency(kind, size, w, h) if latency_xi is None else latency_xi
    params = PerfParams(pixels_M=w * h, throughput_tp=Fraction(1, _cpp(kind, size)),
                        latency_xi=xi, clock_hz_f=constraints.clock_hz)
    return Candidate(kind, operation_counts(kind, size, w, format, kernel),
                     frame_time(params, constraints.budget_s), "analytic")


def measured_candidate(kind: ArchKind, op_count: OpCount, report: CycleReport,
                       clock_hz: float, budget_s: float = DEFAULT_BUDGET_S) -> Candidate:
    """Candidate whose cycle count is the simulator's ``total_cycles``."""
    c = Fraction(report.total_cycles)
    t = c / Fraction(clock_hz)
    perf = PerfReport(total_cycles_C=c, frame_time_s=float(t), fps=float(1 / t),
                      meets_budget=t <= Fraction(budget_s), budget_s=budget_s)
    return Candidate(kind, op_count, perf, "measured", report)


def explore(candidates: list[Candidate], constraints: Constraints) -> list[Candidate]:
    """Keep candidates inside the budget and multiplier cap, cheapest first.

    Ranking: multipliers, then frame time, then architecture enumeration order.
    """
    if not candidates:
        raise ValueError("explore needs at least one candidate")
    cap = constraints.max_multipliers
    kept = [c for c in candidates
            if c.perf.frame_time_s <= constraints.budget_s
            and (cap is None or c.op_count.multipliers <= cap)]
    return sorted(kept, key=lambda c: (c.op_count.multipliers, c.perf.frame_time_s, c.kind.order))
