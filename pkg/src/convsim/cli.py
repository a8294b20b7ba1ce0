"""Command-line front end.

Subcommands::

    filter      run one architecture on a PGM, write the result and a report
    compare     run every compatible architecture against the reference
    explore     rank architectures by resources and frame time
    noise       add seeded Gaussian noise to a PGM
    psnr        print the PSNR between two PGMs
    gen-kernel  write a Gaussian kernel in the kernel text format
    gen-image   write a gradient or checkerboard test image

Exit status: 0 on success, 1 for usage or I/O errors, 2 when a simulated
architecture disagrees with the reference convolution.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from pathlib import Path

from . import __version__
from .archs import (
    ArchKind, IncompatibleKernelError, build, compatible_kinds, operation_counts,
    process_image,
)
from .clocksim import WidthOverflowError
from .perfmodel import (
    DEFAULT_BUDGET_S, Constraints, analytic_candidate, explore, measured_candidate,
)
from .pixelio import (
    FixedFormat, Image, Kernel2D, PGMError, add_gaussian_noise, checkerboard,
    gaussian_kernel, gradient, load_pgm, psnr, quantize_kernel, save_pgm,
)
from .refconv import convolve_direct

REPORT_SCHEMA = "convsim.run-report/1"

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_MISMATCH = 2


class UsageError(Exception):
    """Bad arguments or unreadable input; reported on one line, exit 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------

def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _read_bytes(path: str) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror or exc}") from exc


def _write_bytes(path: str, data: bytes):
    try:
        Path(path).write_bytes(data)
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc.strerror or exc}") from exc


def _load_image(path: str) -> tuple[Image, bytes]:
    data = _read_bytes(path)
    return load_pgm(data), data


def parse_kernel_text(text: str, format: FixedFormat) -> Kernel2D:
    """Kernel file: first line the size, then ``size`` rows of real coefficients."""
    lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise ValueError("kernel file is empty")
    try:
        size = int(lines[0])
    except ValueError:
        raise ValueError(f"kernel file: first line must be the size, got {lines[0]!r}") from None
    rows = [ln.replace(",", " ").split() for ln in lines[1:]]
    if len(rows) != size or any(len(r) != size for r in rows):
        raise ValueError(f"kernel file: expected {size} rows of {size} values")
    try:
        real = [[float(v) for v in r] for r in rows]
    except ValueError as exc:
        raise ValueError(f"kernel file: {exc}") from None
    return quantize_kernel(real, format)


def format_kernel_text(kernel: Kernel2D) -> str:
    scale = 1 << kernel.format.frac_bits
    lines = [str(kernel.size)]
    lines += [" ".join(repr(v / scale) for v in row) for row in kernel.rows()]
    return "\n".join(lines) + "\n"


def _kernel_from_args(args) -> tuple[Kernel2D, dict]:
    fmt = FixedFormat(args.frac_bits, args.total_bits)
    if args.kernel is not None:
        kernel = parse_kernel_text(_read_bytes(args.kernel).decode("utf-8", "replace"), fmt)
        desc = {"file": Path(args.kernel).name}
    elif args.gaussian is not None:
        size, sigma = args.gaussian
        try:
            size = int(size)
        except ValueError:
            raise UsageError(f"--gaussian size must be an integer, got {size!r}") from None
        kernel = gaussian_kernel(size, float(sigma), fmt)
        desc = {"gaussian": {"size": size, "sigma": float(sigma)}}
    else:
        raise UsageError("a kernel is required: use --gaussian SIZE SIGMA or --kernel FILE")
    desc.update({
        "size": kernel.size,
        "frac_bits": fmt.frac_bits,
        "total_bits": fmt.total_bits,
        "coeffs": kernel.rows(),
        "coeff_sum": kernel.coeff_sum,
    })
    return kernel, desc


def _psnr_value(a: Image, b: Image):
    v = psnr(a, b)
    return "inf" if math.isinf(v) else round(v, 4)


def _first_difference(got: Image, want: Image):
    diff = (got.pixels != want.pixels).nonzero()
    if len(diff[0]) == 0:
        return None
    y, x = int(diff[0][0]), int(diff[1][0])
    return {"x": x, "y": y, "got": int(got.pixels[y, x]), "expected": int(want.pixels[y, x])}


def _emit_report(report: dict, path: str | None):
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if path:
        _write_bytes(path, text.encode())
    else:
        sys.stdout.write(text)


def _base_report(command: str, argv: list[str]) -> dict:
    return {"schema": REPORT_SCHEMA, "version": __version__, "command": command, "argv": list(argv)}


def _simulate(kind: ArchKind, kernel: Kernel2D, image: Image, oracle: Image, clock_hz: float,
              reference: Image | None, trace: bool = False):
    inst = build(kind, kernel, image.width, period_ns=1e9 / clock_hz)
    if trace:
        inst.watch_defaults()
    out, cycles = process_image(inst, image)
    ops = operation_counts(kind, kernel.size, image.width, kernel.format,
                           kernel if kind is ArchKind.SymmetryOptimized else None)
    cand = measured_candidate(kind, ops, cycles, clock_hz)
    mismatch = _first_difference(out, oracle)
    row = {
        "kind": kind.value,
        "oracle_match": mismatch is None,
        "cycle_report": cycles.as_dict(),
        "op_count": ops.as_dict(),
        "perf": cand.perf.as_dict(),
        "psnr_vs_input_db": _psnr_value(out, image),
        "output_sha256": _sha256(save_pgm(out)),
    }
    if reference is not None:
        row["psnr_vs_reference_db"] = _psnr_value(out, reference)
    if mismatch is not None:
        row["first_mismatch"] = mismatch
    return out, row, inst


def _load_reference(path: str | None, image: Image):
    if path is None:
        return None, None
    ref, data = _load_image(path)
    if ref.pixels.shape != image.pixels.shape:
        raise UsageError(f"reference {path} is {ref.width}x{ref.height}, "
                         f"input is {image.width}x{image.height}")
    return ref, _sha256(data)


def _mismatch_message(kind: ArchKind, m: dict) -> str:
    return (f"mismatch: {kind.value} differs from the reference at pixel "
            f"(x={m['x']}, y={m['y']}): got {m['got']}, expected {m['expected']}")


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_filter(args, argv) -> int:
    image, data = _load_image(args.input)
    kernel, kdesc = _kernel_from_args(args)
    reference, ref_hash = _load_reference(args.reference, image)
    kind = ArchKind.parse(args.arch)
    clock_hz = args.clock_mhz * 1e6
    oracle = convolve_direct(image, kernel)
    out, row, inst = _simulate(kind, kernel, image, oracle, clock_hz, reference, args.trace is not None)
    _write_bytes(args.output, save_pgm(out))
    if args.trace is not None:
        _write_bytes(args.trace, inst.circuit.trace.to_csv().encode())
    report = _base_report("filter", argv)
    report["inputs"] = {"image_sha256": _sha256(data), "width": image.width, "height": image.height}
    if ref_hash:
        report["inputs"]["reference_sha256"] = ref_hash
    report.update({"kernel": kdesc, "clock_mhz": args.clock_mhz, "architectures": [row]})
    _emit_report(report, args.report)
    if not row["oracle_match"]:
        print(_mismatch_message(kind, row["first_mismatch"]), file=sys.stderr)
        return EXIT_MISMATCH
    return EXIT_OK


def cmd_compare(args, argv) -> int:
    image, data = _load_image(args.input)
    kernel, kdesc = _kernel_from_args(args)
    reference, ref_hash = _load_reference(args.reference, image)
    clock_hz = args.clock_mhz * 1e6
    kinds = compatible_kinds(kernel)
    if len(kinds) < 2:
        raise UsageError("compare needs a kernel that at least two architectures accept")
    oracle = convolve_direct(image, kernel)
    rows = []
    failure = None
    for kind in kinds:
        _, row, _ = _simulate(kind, kernel, image, oracle, clock_hz, reference)
        rows.append(row)
        if failure is None and not row["oracle_match"]:
            failure = (kind, row["first_mismatch"])
    report = _base_report("compare", argv)
    report["inputs"] = {"image_sha256": _sha256(data), "width": image.width, "height": image.height}
    if ref_hash:
        report["inputs"]["reference_sha256"] = ref_hash
    report.update({
        "kernel": kdesc,
        "clock_mhz": args.clock_mhz,
        "oracle_sha256": _sha256(save_pgm(oracle)),
        "architectures": rows,
        "all_match": failure is None,
    })
    _emit_report(report, args.report)
    if failure is not None:
        print(_mismatch_message(*failure), file=sys.stderr)
        return EXIT_MISMATCH
    return EXIT_OK


def cmd_explore(args, argv) -> int:
    if args.width < 1 or args.height < 1:
        raise UsageError("width and height must be positive")
    if args.size < 1 or args.size % 2 == 0:
        raise UsageError(f"kernel size must be odd and positive, got {args.size}")
    cons = Constraints(budget_s=args.budget_ms / 1e3, max_multipliers=args.max_mult,
                       width=args.width, height=args.height, clock_hz=args.clock_mhz * 1e6)
    fmt = FixedFormat(args.frac_bits, args.total_bits)
    cands = [analytic_candidate(k, args.size, cons, fmt) for k in ArchKind]
    ranked = explore(cands, cons)
    report = _base_report("explore", argv)
    report.update({
        "constraints": {
            "width": args.width, "height": args.height, "clock_mhz": args.clock_mhz,
            "budget_ms": args.budget_ms, "max_multipliers": args.max_mult, "kernel_size": args.size,
        },
        "ranking": [c.as_dict() for c in ranked],
        "rejected": [c.kind.value for c in cands if c.kind not in {r.kind for r in ranked}],
    })
    _emit_report(report, args.report)
    return EXIT_OK


def cmd_noise(args, argv) -> int:
    image, _ = _load_image(args.input)
    _write_bytes(args.output, save_pgm(add_gaussian_noise(image, args.variance, args.seed)))
    return EXIT_OK


def cmd_psnr(args, argv) -> int:
    a, _ = _load_image(args.a)
    b, _ = _load_image(args.b)
    v = psnr(a, b)
    print("inf" if math.isinf(v) else f"{v:.1f}")
    return EXIT_OK


def cmd_gen_kernel(args, argv) -> int:
    kernel, _ = _kernel_from_args(args)
    text = format_kernel_text(kernel)
    if args.output:
        _write_bytes(args.output, text.encode())
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_gen_image(args, argv) -> int:
    if args.width < 1 or args.height < 1:
        raise UsageError("width and height must be positive")
    if args.pattern == "gradient":
        img = gradient(args.width, args.height)
    else:
        img = checkerboard(args.width, args.height, args.tile)
    if args.variance:
        img = add_gaussian_noise(img, args.variance, args.seed)
    _write_bytes(args.output, save_pgm(img))
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _add_kernel_options(p):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--gaussian", nargs=2, metavar=("SIZE", "SIGMA"),
                   help="sampled Gaussian kernel of odd SIZE and standard deviation SIGMA")
    g.add_argument("--kernel", metavar="FILE",
                   help="kernel text file: size on the first line, then rows of reals")
    _add_format_options(p)


def _add_format_options(p):
    p.add_argument("--frac-bits", type=int, default=8, help="coefficient fraction bits (default 8)")
    p.add_argument("--total-bits", type=int, default=16, help="coefficient word width (default 16)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="convsim", description="Cycle-level streaming convolution simulator.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)
    kinds = [k.value for k in ArchKind]

    p = sub.add_parser("filter", help="filter a PGM with one architecture")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--arch", required=True, choices=kinds)
    _add_kernel_options(p)
    p.add_argument("--clock-mhz", type=float, default=100.0)
    p.add_argument("--trace", metavar="CSV", help="write a per-cycle signal trace")
    p.add_argument("--reference", metavar="PGM", help="clean image for PSNR reporting")
    p.add_argument("--report", metavar="PATH", help="write the JSON report here instead of stdout")
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("compare", help="run all compatible architectures against the reference")
    p.add_argument("input")
    _add_kernel_options(p)
    p.add_argument("--clock-mhz", type=float, default=100.0)
    p.add_argument("--reference", metavar="PGM", help="clean image for PSNR reporting")
    p.add_argument("--report", metavar="PATH")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("explore", help="rank architectures for a frame size and budget")
    p.add_argument("--width", type=int, default=150)
    p.add_argument("--height", type=int, default=150)
    p.add_argument("--clock-mhz", type=float, default=100.0)
    p.add_argument("--budget-ms", type=float, default=DEFAULT_BUDGET_S * 1e3)
    p.add_argument("--max-mult", type=int, default=None)
    p.add_argument("--size", type=int, default=5, help="kernel size (default 5)")
    _add_format_options(p)
    p.add_argument("--report", metavar="PATH")
    p.set_defaults(func=cmd_explore)

    p = sub.add_parser("noise", help="add seeded Gaussian noise")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--variance", type=float, required=True,
                   help="noise variance on the [0, 1] intensity scale")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_noise)

    p = sub.add_parser("psnr", help="PSNR in dB between two PGMs")
    p.add_argument("a")
    p.add_argument("b")
    p.set_defaults(func=cmd_psnr)

    p = sub.add_parser("gen-kernel", help="write a Gaussian kernel file")
    _add_kernel_options(p)
    p.add_argument("-o", "--output", metavar="FILE")
    p.set_defaults(func=cmd_gen_kernel)

    p = sub.add_parser("gen-image", help="write a synthetic test image")
    p.add_argument("output")
    p.add_argument("--pattern", choices=["gradient", "checkerboard"], default="gradient")
    p.add_argument("--width", type=int, default=150)
    p.add_argument("--height", type=int, default=150)
    p.add_argument("--tile", type=int, default=15)
    p.add_argument("--variance", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gen_image)
    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args, argv)
    except (UsageError, PGMError, IncompatibleKernelError, WidthOverflowError, ValueError) as exc:
        print(f"convsim {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
