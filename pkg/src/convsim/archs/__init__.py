"""Streaming convolution architectures built from :mod:`convsim.clocksim` elements."""

from __future__ import annotations

from ..pixelio import (
    FixedFormat, Image, Kernel2D, NotSeparableError, SeparableKernel, decompose_separable,
)
from .base import (
    ArchInstance, ArchKind, CycleReport, IncompatibleKernelError, OpCount,
    SymmetryClassOverflowError, run_stream,
)
from .fully_parallel import FullyParallel
from .macfir import MacFirIterating
from .opcount import latency_bound, operation_counts, predicted_latency
from .separable import SeparableColRow, SeparableRowCol
from .symmetry import SymmetryOptimized, check_symmetry_kernel, coefficient_classes, reference_kernel

__all__ = [
    "ArchKind", "ArchInstance", "CycleReport", "OpCount", "IncompatibleKernelError",
    "SymmetryClassOverflowError", "build", "process_image", "operation_counts",
    "compatible_kinds", "latency_bound", "predicted_latency", "reference_kernel",
    "coefficient_classes",
]

_CLASSES = {
    ArchKind.FullyParallel: FullyParallel,
    ArchKind.MacFirIterating: MacFirIterating,
    ArchKind.SeparableColRow: SeparableColRow,
    ArchKind.SeparableRowCol: SeparableRowCol,
    ArchKind.SymmetryOptimized: SymmetryOptimized,
}


def build(kind: ArchKind, kernel: Kernel2D | SeparableKernel, image_width: int,
          format: FixedFormat | None = None, period_ns: float = 10.0) -> ArchInstance:
    """Construct a reset pipeline for ``kind`` and ``kernel`` at ``image_width``."""
    kind = ArchKind.parse(kind) if isinstance(kind, str) else kind
    format = format or kernel.format
    if format != kernel.format:
        raise IncompatibleKernelError(f"kernel format {kernel.format} != requested {format}")
    if image_width < kernel.size:
        raise ValueError(f"image width {image_width} < kernel size {kernel.size}")
    try:
        inst = _CLASSES[kind](kernel, image_width, format, period_ns)
    except NotSeparableError as exc:
        raise IncompatibleKernelError(str(exc)) from exc
    inst.circuit.reset()
    return inst


def process_image(inst: ArchInstance, image: Image) -> tuple[Image, CycleReport]:
    return run_stream(inst, image)


def compatible_kinds(kernel: Kernel2D) -> list[ArchKind]:
    kinds = [ArchKind.FullyParallel, ArchKind.MacFirIterating]
    try:
        decompose_separable(kernel)
        kinds += [ArchKind.SeparableColRow, ArchKind.SeparableRowCol]
    except NotSeparableError:
        pass
    try:
        check_symmetry_kernel(kernel)
        kinds.append(ArchKind.SymmetryOptimized)
    except IncompatibleKernelError:
        pass
    return sorted(kinds, key=lambda k: k.order)
