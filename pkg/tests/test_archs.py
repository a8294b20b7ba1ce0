from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from convsim.archs import (
    ArchKind, IncompatibleKernelError, SymmetryClassOverflowError, build, coefficient_classes,
    compatible_kinds, latency_bound, operation_counts, predicted_latency, process_image,
    reference_kernel,
)
from convsim.archs.base import column_masks
from convsim.clocksim import WidthOverflowError
from convsim.pixelio import FixedFormat, Image, Kernel2D, SeparableKernel, gaussian_kernel
from convsim.refconv import COL_FIRST, convolve_direct, convolve_separable

from conftest import random_image

ALL = list(ArchKind)


def random_separable(rng, n, fmt=FixedFormat()):
    while True:
        col = rng.integers(-12, 13, size=n)
        row = rng.integers(-12, 13, size=n)
        if col.any() and row.any():
            return SeparableKernel(col.tolist(), row.tolist(), fmt)


def random_symmetric(rng, n):
    p = n // 2
    vals = rng.integers(1, 40, size=3)
    d = np.abs(np.arange(n) - p)
    # coefficient depends on (min, max) of the two distances: mirror-symmetric, few classes
    classes = {(0, 0): vals[0], (0, 1): vals[1], (1, 1): vals[2]}
    k = [[classes.get((min(a, b), max(a, b)), 1) for b in d] for a in d]
    return Kernel2D(k)


def test_kind_parse():
    assert ArchKind.parse("mac-fir") is ArchKind.MacFirIterating
    assert ArchKind.parse("SymmetryOptimized") is ArchKind.SymmetryOptimized
    with pytest.raises(ValueError):
        ArchKind.parse("systolic")


def test_column_masks():
    m = column_masks(4, 3)
    # centred on column 0 the oldest tap (j = 2) lies left of the image
    assert m[0] == (True, True, False)
    assert m[3] == (False, True, True)
    assert m[1] == (True, True, True)


@pytest.mark.parametrize("kind", ALL)
def test_each_kind_matches_oracle(kind, rng):
    for n in (1, 3, 5):
        k = reference_kernel(n) if n > 1 else Kernel2D([[256]])
        img = random_image(rng, 19, 11)
        out, rep = process_image(build(kind, k, 19), img)
        assert out == convolve_direct(img, k)
        assert rep.pixels == 19 * 11


@pytest.mark.parametrize("kind", [ArchKind.FullyParallel, ArchKind.MacFirIterating])
def test_general_kernels(kind, rng):
    for n in (3, 5, 7):
        k = Kernel2D(rng.integers(-200, 201, size=(n, n)))
        img = random_image(rng, 2 * n + 3, n + 2)
        out, _ = process_image(build(kind, k, img.width), img)
        assert out == convolve_direct(img, k)


@pytest.mark.parametrize("kind", [ArchKind.SeparableColRow, ArchKind.SeparableRowCol])
def test_separable_kinds(kind, rng):
    for n in (3, 5, 7):
        sep = random_separable(rng, n)
        img = random_image(rng, 16, 9)
        out, _ = process_image(build(kind, sep, 16), img)
        assert out == convolve_separable(img, sep, COL_FIRST)
        # the same kind built from the outer product decomposes it itself
        out2, _ = process_image(build(kind, sep.outer(), 16), img)
        assert out2 == out


def test_symmetry_kind_on_symmetric_kernels(rng):
    for n in (3, 5, 7):
        k = random_symmetric(rng, n)
        img = random_image(rng, 17, 10)
        out, _ = process_image(build(ArchKind.SymmetryOptimized, k, 17), img)
        assert out == convolve_direct(img, k)


def test_zero_sum_sobel_on_compatible_kinds(rng):
    sobel = Kernel2D([[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]])
    kinds = compatible_kinds(sobel)
    assert kinds == [ArchKind.FullyParallel, ArchKind.MacFirIterating,
                     ArchKind.SeparableColRow, ArchKind.SeparableRowCol]
    img = random_image(rng, 12, 12)
    want = convolve_direct(img, sobel)
    for kind in kinds:
        assert process_image(build(kind, sobel, 12), img)[0] == want


def test_identity_1x1_all_kinds(rng):
    k = Kernel2D([[256]])
    img = random_image(rng, 8, 6)
    for kind in compatible_kinds(k):
        assert process_image(build(kind, k, 8), img)[0] == img


def test_image_edge_cases(rng):
    # image exactly as large as the kernel, and with width not a multiple of anything
    k = reference_kernel(5)
    for w, h in ((5, 5), (5, 9), (13, 5)):
        img = random_image(rng, w, h)
        for kind in ALL:
            assert process_image(build(kind, k, w), img)[0] == convolve_direct(img, k)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(ALL), st.integers(5, 14), st.integers(5, 9))
def test_property_oracle_equivalence(seed, kind, w, h):
    rng = np.random.default_rng(seed)
    k = Kernel2D(random_separable(rng, 3).outer().coeffs) if kind in (
        ArchKind.SeparableColRow, ArchKind.SeparableRowCol) else (
        random_symmetric(rng, 3) if kind is ArchKind.SymmetryOptimized
        else Kernel2D(rng.integers(-100, 101, size=(3, 3))))
    img = random_image(rng, w, h)
    assert process_image(build(kind, k, w), img)[0] == convolve_direct(img, k)


def test_instance_reusable_and_deterministic(rng):
    inst = build(ArchKind.SeparableRowCol, reference_kernel(3), 10)
    a, b = random_image(rng, 10, 7), random_image(rng, 10, 4)
    r1 = process_image(inst, a)
    process_image(inst, b)
    r2 = process_image(inst, a)
    assert r1[0] == r2[0] and r1[1] == r2[1]


def test_cycle_reports():
    img = Image(np.zeros((12, 20), dtype=np.uint8))
    for kind in ALL:
        for n in (3, 5):
            _, rep = process_image(build(kind, reference_kernel(n), 20), img)
            cpp = n if kind is ArchKind.MacFirIterating else 1
            assert rep.cycles_per_pixel_steady == Fraction(cpp)
            assert rep.latency_cycles == predicted_latency(kind, n, 20)
            assert rep.latency_cycles <= latency_bound(kind, n, 20)
            assert rep.total_cycles >= rep.latency_cycles + (rep.pixels - 1) * rep.cycles_per_pixel_steady
            assert rep.total_cycles == rep.latency_cycles + (rep.pixels - 1) * cpp
            assert rep.fps_at_clock == pytest.approx(1 / (rep.total_cycles * 10e-9))


def test_one_cycle_latency_bound_matches_plain_formula():
    for kind in ALL:
        if kind is ArchKind.MacFirIterating:
            continue
        for n in (1, 3, 5, 7):
            assert latency_bound(kind, n, 64) == (n - 1) * (64 + 1) + 16


def test_operation_counts():
    fp = operation_counts(ArchKind.FullyParallel, 3, 64)
    assert (fp.multipliers, fp.adder_count, fp.line_buffers) == (9, 8, 2)
    assert fp.adders == {2: 8}
    mf = operation_counts(ArchKind.MacFirIterating, 5, 150)
    assert (mf.multipliers, mf.line_buffers) == (5, 5)
    for kind in (ArchKind.SeparableColRow, ArchKind.SeparableRowCol):
        assert operation_counts(kind, 5, 64).multipliers == 10
    sym = operation_counts(ArchKind.SymmetryOptimized, 5, 64)
    assert sym.multipliers == 5
    assert sym.adders[4] == 2
    for n in (3, 5, 7, 9):
        assert operation_counts(ArchKind.FullyParallel, n, 32).multipliers == n * n
        assert operation_counts(ArchKind.SeparableColRow, n, 32).multipliers == 2 * n
        assert n * n > 2 * n


def test_separable_line_buffers_are_wide_only_when_row_first():
    cr = operation_counts(ArchKind.SeparableColRow, 5, 64)
    rc = operation_counts(ArchKind.SeparableRowCol, 5, 64)
    assert set(cr.line_buffer_bits) == {8}
    assert set(rc.line_buffer_bits) == {8 + 16 + 3}


def test_symmetry_small_gaussian_like():
    k = Kernel2D([[1, 2, 1], [2, 4, 2], [1, 2, 1]])
    ops = operation_counts(ArchKind.SymmetryOptimized, 3, 32, kernel=k)
    assert ops.multipliers == 3
    assert ops.adders[4] == 2
    assert [m for m, _ in coefficient_classes(k)] == [4, 2, 1]


def test_symmetry_class_overflow():
    v = [1, 3, 5, 7, 9]
    k = Kernel2D([[a * b for b in v[:3] + v[1::-1]] for a in [1, 3, 5, 3, 1]])
    with pytest.raises(SymmetryClassOverflowError, match="symmetry class overflow"):
        build(ArchKind.SymmetryOptimized, k, 16)


def test_incompatible_kernels():
    with pytest.raises(IncompatibleKernelError, match="not separable"):
        build(ArchKind.SeparableColRow, Kernel2D(np.eye(3, dtype=int)), 16)
    with pytest.raises(IncompatibleKernelError, match="mirror"):
        build(ArchKind.SymmetryOptimized, Kernel2D([[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]]), 16)
    with pytest.raises(ValueError, match="width"):
        build(ArchKind.FullyParallel, reference_kernel(5), 4)
    with pytest.raises(IncompatibleKernelError):
        build(ArchKind.FullyParallel, reference_kernel(3), 16, format=FixedFormat(4, 12))


def test_width_mismatch(rng):
    inst = build(ArchKind.FullyParallel, reference_kernel(3), 10)
    with pytest.raises(ValueError, match="width"):
        process_image(inst, random_image(rng, 11, 5))


def test_overflow_propagates():
    from convsim.clocksim import Register

    k = Kernel2D(np.ones((3, 3), dtype=int), FixedFormat(0, 2))
    inst = build(ArchKind.FullyParallel, k, 6)
    (tree,) = [e for e in inst.circuit.elements if e.name == "adder_tree"]
    narrow = Register("adder_tree", d=tree.d, bits=8)
    tree.evaluate = narrow.evaluate
    tree.commit = lambda: setattr(tree, "q", narrow._next)
    inst.circuit.permute(range(len(inst.circuit.elements)))
    with pytest.raises(WidthOverflowError, match="adder_tree"):
        process_image(inst, Image(np.full((4, 6), 200)))


def test_gaussian_runs_everywhere(rng):
    k = gaussian_kernel(5, 20.0)
    assert compatible_kinds(k) == ALL
    img = random_image(rng, 16, 16)
    outs = {process_image(build(kind, k, 16), img)[0].pixels.tobytes() for kind in ALL}
    assert len(outs) == 1


def test_trace_records_every_cycle(rng):
    inst = build(ArchKind.MacFirIterating, reference_kernel(3), 8)
    tr = inst.watch_defaults()
    _, rep = process_image(inst, random_image(rng, 8, 4))
    rows = tr.to_csv().splitlines()
    assert len(rows) == 1 + 3 * inst.circuit.clock.cycles
    assert sum(r.endswith("pixel_out_valid,1") for r in rows) == 32
