"""Images, fixed-point kernels, PGM I/O, noise injection and fidelity metrics.

Everything upstream and downstream of the simulated pipelines lives here:
the pixel container, coefficient quantization, integer rank-1 kernel
factorization, a pinned Gaussian noise generator and PSNR.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from functools import reduce

import numpy as np

__all__ = [
    "Image", "FixedFormat", "Kernel2D", "SeparableKernel",
    "PGMError", "PGMHeaderError", "UnsupportedMaxvalError", "TruncatedPayloadError",
    "CoefficientOverflowError", "NotSeparableError",
    "load_pgm", "save_pgm", "gaussian_kernel", "quantize_kernel",
    "decompose_separable", "add_gaussian_noise", "psnr", "checkerboard",
    "gradient", "round_half_away", "div_round_half_away", "splitmix64",
    "standard_normals",
]

PIXEL_BITS = 8
MAXVAL = 255


# ---------------------------------------------------------------------------
# errors
# ---------------------------------------------------------------------------

class PGMError(ValueError):
    """Malformed PGM input. ``offset`` is the byte position of the problem."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


class PGMHeaderError(PGMError):
    pass


class UnsupportedMaxvalError(PGMError):
    pass


class TruncatedPayloadError(PGMError):
    pass


class CoefficientOverflowError(ValueError):
    pass


class NotSeparableError(ValueError):
    pass


# ---------------------------------------------------------------------------
# rounding
# ---------------------------------------------------------------------------

def round_half_away(x: float) -> int:
    """Round to nearest integer, ties away from zero."""
    a = abs(x)
    q = math.floor(a)
    if a - q >= 0.5:
        q += 1
    return int(q) if x >= 0 else -int(q)


def div_round_half_away(num: int, den: int) -> int:
    """Exact integer ``num / den`` rounded half away from zero."""
    if den == 0:
        raise ZeroDivisionError("division by zero")
    q, r = divmod(abs(num), abs(den))
    if 2 * r >= abs(den):
        q += 1
    return q if (num >= 0) == (den > 0) else -q


def _round_half_away_array(x: np.ndarray) -> np.ndarray:
    a = np.abs(x)
    q = np.floor(a)
    q += (a - q) >= 0.5
    return np.where(x < 0, -q, q)


# ---------------------------------------------------------------------------
# value types
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Image:
    """8-bit grayscale image, pixels held row-major as a (height, width) array."""

    pixels: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.pixels)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"image must be a non-empty 2-D array, got shape {arr.shape}")
        if arr.dtype != np.uint8:
            if arr.size and (arr.min() < 0 or arr.max() > MAXVAL):
                raise ValueError("pixel values must lie in [0, 255]")
            if np.issubdtype(arr.dtype, np.floating) and not np.all(arr == np.floor(arr)):
                raise ValueError("pixel values must be integers")
        arr = np.array(arr, dtype=np.uint8, copy=True)
        arr.flags.writeable = False
        object.__setattr__(self, "pixels", arr)

    @classmethod
    def from_flat(cls, width: int, height: int, values) -> "Image":
        values = list(values)
        if len(values) != width * height:
            raise ValueError(f"expected {width * height} pixels, got {len(values)}")
        return cls(np.array(values, dtype=np.int64).reshape(height, width))

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def flat(self) -> list[int]:
        return self.pixels.ravel().tolist()

    def __eq__(self, other):
        if not isinstance(other, Image):
            return NotImplemented
        return self.pixels.shape == other.pixels.shape and bool(np.array_equal(self.pixels, other.pixels))

    __hash__ = None

    def __repr__(self):
        return f"Image({self.width}x{self.height})"


@dataclass(frozen=True)
class FixedFormat:
    """Signed fixed-point coefficient word: ``total_bits`` wide, ``frac_bits`` fractional."""

    frac_bits: int = 8
    total_bits: int = 16

    def __post_init__(self):
        if not (0 <= self.frac_bits < self.total_bits <= 32):
            raise ValueError(
                f"need 0 <= frac_bits < total_bits <= 32, got {self.frac_bits}/{self.total_bits}")

    @property
    def max_int(self) -> int:
        return (1 << (self.total_bits - 1)) - 1

    @property
    def min_int(self) -> int:
        return -(1 << (self.total_bits - 1))

    def fits(self, value: int) -> bool:
        return self.min_int <= value <= self.max_int


DEFAULT_FORMAT = FixedFormat()


def _check_fits(coeffs: np.ndarray, fmt: FixedFormat):
    if coeffs.size and (coeffs.max() > fmt.max_int or coeffs.min() < fmt.min_int):
        raise CoefficientOverflowError(
            f"coefficient outside signed {fmt.total_bits}-bit range "
            f"[{fmt.min_int}, {fmt.max_int}]: min={int(coeffs.min())} max={int(coeffs.max())}")


@dataclass(frozen=True, eq=False)
class Kernel2D:
    """Square, odd-sized kernel of quantized signed integer coefficients."""

    coeffs: np.ndarray
    format: FixedFormat = field(default=DEFAULT_FORMAT)

    def __post_init__(self):
        arr = np.array(self.coeffs, dtype=object)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] % 2 == 0:
            raise ValueError(f"kernel must be square with odd size, got shape {arr.shape}")
        if any(int(v) != v for v in arr.ravel()):
            raise ValueError("kernel coefficients must be integers")
        arr = arr.astype(np.int64)
        _check_fits(arr, self.format)
        arr.flags.writeable = False
        object.__setattr__(self, "coeffs", arr)

    @property
    def size(self) -> int:
        return self.coeffs.shape[0]

    @property
    def coeff_sum(self) -> int:
        return int(sum(self.coeffs.ravel().tolist()))

    def rows(self) -> list[list[int]]:
        return self.coeffs.tolist()

    def is_mirror_symmetric(self) -> bool:
        c = self.coeffs
        return bool(np.array_equal(c, c[::-1, :]) and np.array_equal(c, c[:, ::-1]))

    def __eq__(self, other):
        if not isinstance(other, Kernel2D):
            return NotImplemented
        return self.format == other.format and bool(np.array_equal(self.coeffs, other.coeffs))

    __hash__ = None

    def __repr__(self):
        return f"Kernel2D(size={self.size}, coeffs={self.rows()}, format={self.format})"


@dataclass(frozen=True)
class SeparableKernel:
    """Kernel factored as ``outer(col, row)``: a P x 1 factor and a 1 x P factor."""

    col: tuple
    row: tuple
    format: FixedFormat = field(default=DEFAULT_FORMAT)

    def __post_init__(self):
        col = tuple(int(v) for v in self.col)
        row = tuple(int(v) for v in self.row)
        if len(col) != len(row) or len(col) % 2 == 0:
            raise ValueError("separable factors must have equal odd length")
        object.__setattr__(self, "col", col)
        object.__setattr__(self, "row", row)
        _check_fits(np.array([[c * r for r in row] for c in col], dtype=np.int64), self.format)

    @property
    def size(self) -> int:
        return len(self.col)

    @property
    def coeff_sum(self) -> int:
        return sum(self.col) * sum(self.row)

    def outer(self) -> Kernel2D:
        return Kernel2D([[c * r for r in self.row] for c in self.col], self.format)


# ---------------------------------------------------------------------------
# PGM
# ---------------------------------------------------------------------------

_WS = b" \t\r\n\v\f"


def _header_tokens(data: bytes, count: int) -> tuple[list[tuple[bytes, int]], int]:
    """Pull ``count`` whitespace-separated tokens, skipping ``#`` comments.

    Returns the tokens with their offsets and the offset just past the last one.
    """
    tokens = []
    i, n = 0, len(data)
    while len(tokens) < count:
        while i < n and (data[i] in _WS or data[i] == 0x23):
            if data[i] == 0x23:
                while i < n and data[i] not in b"\r\n":
                    i += 1
            else:
                i += 1
        if i >= n:
            raise PGMHeaderError("unexpected end of header", i)
        start = i
        while i < n and data[i] not in _WS and data[i] != 0x23:
            i += 1
        tokens.append((data[start:i], start))
    return tokens, i


def _header_int(token: bytes, offset: int, what: str) -> int:
    if not token.isdigit():
        raise PGMHeaderError(f"invalid {what} {token!r}", offset)
    return int(token)


def load_pgm(data: bytes) -> Image:
    """Parse a P2 (ASCII) or P5 (binary) PGM with maxval 255."""
    data = bytes(data)
    (magic, m_off), = _header_tokens(data, 1)[0]
    if magic not in (b"P2", b"P5"):
        raise PGMHeaderError(f"unknown magic {magic!r}", m_off)
    toks, end = _header_tokens(data, 4)
    width = _header_int(*toks[1], "width")
    height = _header_int(*toks[2], "height")
    maxval = _header_int(*toks[3], "maxval")
    if width < 1 or height < 1:
        raise PGMHeaderError("image dimensions must be positive", toks[1][1])
    if maxval != MAXVAL:
        raise UnsupportedMaxvalError(f"unsupported maxval {maxval}", toks[3][1])
    npix = width * height

    if magic == b"P5":
        if end >= len(data) or data[end] not in _WS:
            raise PGMHeaderError("missing whitespace after maxval", end)
        start = end + 1
        if len(data) - start < npix:
            raise TruncatedPayloadError(
                f"payload has {len(data) - start} of {npix} bytes", len(data))
        pixels = np.frombuffer(data, dtype=np.uint8, count=npix, offset=start)
        return Image(pixels.reshape(height, width))

    values = []
    for m in re.finditer(rb"#[^\r\n]*|[^\s#]+", data[end:]):
        tok = m.group()
        if tok.startswith(b"#"):
            continue
        off = end + m.start()
        if not tok.isdigit():
            raise PGMHeaderError(f"invalid sample {tok!r}", off)
        v = int(tok)
        if v > MAXVAL:
            raise PGMError(f"sample {v} exceeds maxval", off)
        values.append(v)
        if len(values) == npix:
            break
    if len(values) < npix:
        raise TruncatedPayloadError(f"payload has {len(values)} of {npix} samples", len(data))
    return Image(np.array(values, dtype=np.uint8).reshape(height, width))


def save_pgm(image: Image, binary: bool = True) -> bytes:
    header = f"{'P5' if binary else 'P2'}\n{image.width} {image.height}\n{MAXVAL}\n".encode()
    if binary:
        return header + image.pixels.tobytes()
    lines = (" ".join(str(v) for v in row) for row in image.pixels.tolist())
    return header + "\n".join(lines).encode() + b"\n"


# ---------------------------------------------------------------------------
# kernels
# ---------------------------------------------------------------------------

def quantize_kernel(real_coeffs, format: FixedFormat = DEFAULT_FORMAT) -> Kernel2D:
    """Quantize real coefficients to ``round_half_away(real * 2**frac_bits)``."""
    arr = np.asarray(real_coeffs, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] % 2 == 0:
        raise ValueError(f"kernel must be square with odd size, got shape {arr.shape}")
    scale = float(1 << format.frac_bits)
    q = [[round_half_away(v * scale) for v in row] for row in arr.tolist()]
    return Kernel2D(q, format)


def gaussian_kernel(size: int, sigma: float, format: FixedFormat = DEFAULT_FORMAT) -> Kernel2D:
    """Sampled Gaussian, peak anchored at 1.0 (``2**frac_bits``), exactly separable.

    The 2-D profile ``exp(-(i^2 + j^2) / (2 sigma^2))`` is the outer product of
    two 1-D profiles. Each 1-D profile is quantized on its own (column factor
    with ``ceil(frac_bits / 2)`` fraction bits, row factor with the rest) so
    the integer kernel stays rank 1 and runs on every architecture.
    """
    if size < 1 or size % 2 == 0:
        raise ValueError(f"size must be odd and >= 1, got {size}")
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    half = (size - 1) // 2
    if not format.fits(1 << format.frac_bits):
        raise CoefficientOverflowError(
            f"peak coefficient 2**{format.frac_bits} overflows {format.total_bits} bits")
    profile = [math.exp(-(i * i) / (2.0 * sigma * sigma)) for i in range(-half, half + 1)]
    col_bits = (format.frac_bits + 1) // 2
    row_bits = format.frac_bits - col_bits
    col = [round_half_away(g * (1 << col_bits)) for g in profile]
    row = [round_half_away(g * (1 << row_bits)) for g in profile]
    if min(col) <= 0 or min(row) <= 0:
        raise ValueError(
            f"gaussian tail quantizes to zero at frac_bits={format.frac_bits}; "
            "use more fraction bits or a larger sigma")
    return Kernel2D([[c * r for r in row] for c in col], format)


def decompose_separable(kernel: Kernel2D) -> SeparableKernel:
    """Exact integer rank-1 factorization ``coeffs == outer(col, row)``.

    The candidate column is the kernel column with the largest absolute sum
    (first one on ties), divided by the gcd of its entries and sign-normalized
    so its first nonzero entry is positive. Row entries follow by exact integer
    division; the outer product is then verified.
    """
    k = kernel.coeffs.tolist()
    n = kernel.size
    if all(v == 0 for row in k for v in row):
        return SeparableKernel([0] * n, [1] * n, kernel.format)

    sums = [sum(abs(k[i][j]) for i in range(n)) for j in range(n)]
    jmax = max(range(n), key=lambda j: (sums[j], -j))
    column = [k[i][jmax] for i in range(n)]
    g = reduce(math.gcd, (abs(v) for v in column))
    pivot = next(i for i, v in enumerate(column) if v != 0)
    if column[pivot] < 0:
        g = -g
    col = [v // g for v in column]

    row = []
    for j in range(n):
        num = k[pivot][j]
        if num % col[pivot]:
            raise NotSeparableError("not separable: kernel has integer rank > 1")
        row.append(num // col[pivot])
    if any(col[i] * row[j] != k[i][j] for i in range(n) for j in range(n)):
        raise NotSeparableError("not separable: kernel has integer rank > 1")
    return SeparableKernel(col, row, kernel.format)


# ---------------------------------------------------------------------------
# noise
# ---------------------------------------------------------------------------

_GOLDEN = 0x9E3779B97F4A7C15
_MASK64 = (1 << 64) - 1


def splitmix64(seed: int, count: int) -> np.ndarray:
    """First ``count`` outputs of the SplitMix64 stream seeded with ``seed``."""
    k = np.arange(1, count + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = np.uint64(seed & _MASK64) + k * np.uint64(_GOLDEN)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        z = z ^ (z >> np.uint64(31))
    return z


def standard_normals(seed: int, count: int) -> np.ndarray:
    """Box-Muller normals from pairs of SplitMix64 draws mapped to (0, 1]."""
    pairs = (count + 1) // 2
    raw = splitmix64(seed, 2 * pairs)
    u = ((raw >> np.uint64(11)).astype(np.float64) + 1.0) * (2.0 ** -53)
    u1, u2 = u[0::2], u[1::2]
    r = np.sqrt(-2.0 * np.log(u1))
    z = np.empty(2 * pairs)
    z[0::2] = r * np.cos(2.0 * np.pi * u2)
    z[1::2] = r * np.sin(2.0 * np.pi * u2)
    return z[:count]


def add_gaussian_noise(image: Image, variance: float, seed: int) -> Image:
    """Additive white Gaussian noise; ``variance`` is on the [0, 1] intensity scale."""
    if not 0.0 <= variance < 1.0:
        raise ValueError(f"variance must lie in [0, 1), got {variance}")
    if variance == 0.0:
        return image
    n = standard_normals(seed, image.width * image.height).reshape(image.height, image.width)
    noisy = image.pixels.astype(np.float64) + MAXVAL * math.sqrt(variance) * n
    return Image(np.clip(_round_half_away_array(noisy), 0, MAXVAL))


# ---------------------------------------------------------------------------
# metrics and test patterns
# ---------------------------------------------------------------------------

def psnr(a: Image, b: Image) -> float:
    """Peak SNR in dB; ``math.inf`` for identical images."""
    if a.pixels.shape != b.pixels.shape:
        raise ValueError(f"dimension mismatch: {a.width}x{a.height} vs {b.width}x{b.height}")
    diff = a.pixels.astype(np.int64) - b.pixels.astype(np.int64)
    sse = int((diff * diff).sum())
    if sse == 0:
        return math.inf
    return 10.0 * math.log10(MAXVAL * MAXVAL * diff.size / sse)


def checkerboard(width: int, height: int, tile: int) -> Image:
    if tile < 1:
        raise ValueError("tile must be >= 1")
    r = np.arange(height)[:, None] // tile
    c = np.arange(width)[None, :] // tile
    return Image(np.where((r + c) % 2 == 0, MAXVAL, 0))


def gradient(width: int, height: int, low: int = 32, high: int = 224) -> Image:
    """Smooth diagonal ramp from ``low`` (top-left) to ``high`` (bottom-right)."""
    span = max(width + height - 2, 1)
    r = np.arange(height)[:, None]
    c = np.arange(width)[None, :]
    ramp = low + (high - low) * (r + c) / span
    return Image(_round_half_away_array(ramp))
