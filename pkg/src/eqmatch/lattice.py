"""Sites, boxes, geometries and coin-flip configurations.

A configuration is a finite realization of an i.i.d. Bernoulli field on
``Z^d``, either on a window (a box of absolute coordinates) or on a torus.
Each site's coin is a keyed hash of ``(rng_seed, site coordinates)``, so the
same seed gives the same bit at the same site no matter which box is
materialized, in which order, or on how many threads.  Window configurations
that were generated from a seed can therefore be extended lazily beyond their
stored window (see :meth:`Configuration.box_bits`).
"""

import enum
import functools
import json
import math
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from . import _backend
from .errors import ArgumentError, UndecidableError, UnsupportedGeometryError

Site = Tuple[int, ...]

MAGIC = b"EQMZ"
FORMAT_VERSION = 1
_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _mix64(z: int) -> int:
    z &= _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def as_site(x, d: Optional[int] = None) -> Site:
    site = tuple(int(v) for v in x)
    if d is not None and len(site) != d:
        raise ArgumentError(f"site {site} has dimension {len(site)}, expected {d}")
    if not site:
        raise ArgumentError("sites need at least one coordinate")
    return site


class Ordering(enum.IntEnum):
    LESS = -1
    EQUAL = 0
    GREATER = 1


def _check_pair(x, y):
    x = as_site(x)
    y = as_site(y)
    if len(x) != len(y):
        raise ArgumentError(f"dimension mismatch: {len(x)} vs {len(y)}")
    return x, y


def linf_distance(x, y, sides: Optional[Sequence[int]] = None) -> int:
    """l-infinity distance; with ``sides`` the coordinates live on a torus."""
    x, y = _check_pair(x, y)
    if sides is None:
        return max(abs(a - b) for a, b in zip(x, y))
    if len(sides) != len(x):
        raise ArgumentError("torus sides do not match the site dimension")
    best = 0
    for a, b, n in zip(x, y, sides):
        r = (a - b) % n
        best = max(best, min(r, n - r))
    return best


def lex_compare(x, y) -> Ordering:
    x, y = _check_pair(x, y)
    if x < y:
        return Ordering.LESS
    if x > y:
        return Ordering.GREATER
    return Ordering.EQUAL


def _check_sides(sides) -> Tuple[int, ...]:
    sides = tuple(int(s) for s in sides)
    if not sides:
        raise ArgumentError("dimension must be at least 1")
    if any(s < 1 for s in sides):
        raise ArgumentError(f"side lengths must be positive, got {sides}")
    return sides


@dataclass(frozen=True)
class Window:
    """The box ``corner + [0, sides)`` of absolute lattice coordinates."""

    corner: Site
    sides: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "sides", _check_sides(self.sides))
        object.__setattr__(self, "corner", as_site(self.corner, len(self.sides)))

    periodic = False

    @property
    def dimension(self) -> int:
        return len(self.sides)

    @property
    def n_sites(self) -> int:
        return math.prod(self.sides)

    @property
    def lo(self) -> Site:
        return self.corner

    @property
    def hi(self) -> Site:
        return tuple(c + s - 1 for c, s in zip(self.corner, self.sides))

    def contains(self, x) -> bool:
        x = as_site(x, self.dimension)
        return all(c <= v < c + s for v, c, s in zip(x, self.corner, self.sides))

    def index(self, x) -> int:
        if not self.contains(x):
            raise ArgumentError(f"site {tuple(x)} outside window")
        local = tuple(v - c for v, c in zip(x, self.corner))
        return int(np.ravel_multi_index(local, self.sides))

    def site(self, index: int) -> Site:
        local = np.unravel_index(int(index), self.sides)
        return tuple(int(v) + c for v, c in zip(local, self.corner))

    @classmethod
    def centered(cls, sides) -> "Window":
        sides = _check_sides(sides)
        return cls(tuple(-(s // 2) for s in sides), sides)


@dataclass(frozen=True)
class Torus:
    """The discrete torus ``Z^d / (sides)``; coordinates are kept in ``[0, side)``."""

    sides: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "sides", _check_sides(self.sides))

    periodic = True

    @property
    def dimension(self) -> int:
        return len(self.sides)

    @property
    def n_sites(self) -> int:
        return math.prod(self.sides)

    @property
    def corner(self) -> Site:
        return (0,) * self.dimension

    lo = corner

    @property
    def hi(self) -> Site:
        return tuple(s - 1 for s in self.sides)

    def reduce(self, x) -> Site:
        x = as_site(x, self.dimension)
        return tuple(v % s for v, s in zip(x, self.sides))

    def contains(self, x) -> bool:
        as_site(x, self.dimension)
        return True

    def index(self, x) -> int:
        return int(np.ravel_multi_index(self.reduce(x), self.sides))

    def site(self, index: int) -> Site:
        return tuple(int(v) for v in np.unravel_index(int(index), self.sides))


Geometry = Union[Window, Torus]


@dataclass(frozen=True)
class BoxRegion:
    """Closed l-infinity ball ``{x : ||x - center|| <= radius}``."""

    center: Site
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", as_site(self.center))
        if not self.radius >= 0:
            raise ArgumentError("radius must be non-negative")

    def contains(self, x) -> bool:
        return linf_distance(x, self.center) <= self.radius

    def bounds(self) -> Tuple[Site, Site]:
        r = math.floor(self.radius)
        return (tuple(c - r for c in self.center), tuple(c + r for c in self.center))

    def as_window(self) -> Window:
        lo, hi = self.bounds()
        return Window(lo, tuple(b - a + 1 for a, b in zip(lo, hi)))


class CoinField:
    """The infinite keyed Bernoulli field behind a seeded configuration."""

    def __init__(self, dimension: int, rng_seed: int, bias: float = 0.5):
        if dimension < 1:
            raise ArgumentError("dimension must be at least 1")
        _check_bias(bias)
        self.dimension = int(dimension)
        self.rng_seed = _check_seed(rng_seed)
        self.bias = float(bias)
        self.key = _mix64(self.rng_seed + _GOLDEN)
        self.threshold = math.floor(self.bias * (1 << 53))

    def sample_axes(self, axes) -> np.ndarray:
        if len(axes) != self.dimension:
            raise ArgumentError("axes do not match the field dimension")
        return _backend.kernels().coin_bits(self.key, self.threshold, [np.asarray(a, dtype=np.int64) for a in axes])

    def sample(self, corner, shape) -> np.ndarray:
        corner = as_site(corner, self.dimension)
        return self.sample_axes([np.arange(c, c + n, dtype=np.int64) for c, n in zip(corner, shape)])

    def __repr__(self):
        return f"CoinField(d={self.dimension}, seed={self.rng_seed}, bias={self.bias})"


def _check_bias(bias):
    if not (0.0 <= float(bias) <= 1.0) or math.isnan(float(bias)):
        raise ArgumentError(f"bias must lie in [0, 1], got {bias}")


def _check_seed(seed) -> int:
    seed = int(seed)
    if not 0 <= seed <= _MASK64:
        raise ArgumentError("rng_seed must be an unsigned 64-bit integer")
    return seed


@dataclass(frozen=True, eq=False)
class Configuration:
    """A finite coin-flip configuration.

    Bits are held packed (row-major, little bit order); :attr:`array` unpacks
    them once on demand.  ``rng_seed`` is ``None`` for configurations built
    from explicit bits or derived by translation.
    """

    dimension: int
    geometry: Geometry
    rng_seed: Optional[int]
    bias: float
    packed: bytes

    @classmethod
    def from_array(cls, bits, geometry: Geometry, rng_seed=None, bias=0.5) -> "Configuration":
        arr = np.asarray(bits)
        if arr.shape != tuple(geometry.sides):
            arr = arr.reshape(geometry.sides)
        if arr.size and not np.isin(arr, (0, 1)).all():
            raise ArgumentError("bits must be 0 or 1")
        packed = np.packbits(arr.astype(np.uint8).ravel(), bitorder="little").tobytes()
        return cls(geometry.dimension, geometry, rng_seed, float(bias), packed)

    @classmethod
    def from_string(cls, text: str, periodic=True) -> "Configuration":
        """1-D configuration from a 0/1 string (whitespace ignored)."""
        bits = [int(ch) for ch in text if not ch.isspace()]
        geom = Torus((len(bits),)) if periodic else Window((0,), (len(bits),))
        return cls.from_array(np.array(bits, dtype=np.uint8), geom)

    @functools.cached_property
    def array(self) -> np.ndarray:
        flat = np.unpackbits(np.frombuffer(self.packed, dtype=np.uint8), count=self.n_sites, bitorder="little")
        arr = flat.reshape(self.sides)
        arr.setflags(write=False)
        return arr

    @property
    def sides(self) -> Tuple[int, ...]:
        return self.geometry.sides

    @property
    def n_sites(self) -> int:
        return self.geometry.n_sites

    @property
    def periodic(self) -> bool:
        return self.geometry.periodic

    @property
    def field(self) -> Optional[CoinField]:
        if self.rng_seed is None:
            return None
        return CoinField(self.dimension, self.rng_seed, self.bias)

    def bit(self, x) -> int:
        idx = self.geometry.index(x)
        return int(self.array.reshape(-1)[idx])

    def ones(self) -> int:
        return int(self.array.sum(dtype=np.int64))

    def ones_density(self) -> float:
        return self.ones() / self.n_sites

    def box_bits(self, corner, shape) -> np.ndarray:
        """Bits on the box ``corner + [0, shape)``.

        On a torus the box wraps.  On a window, parts outside the stored
        window are regenerated from the coin field; without a field they
        cannot be decided.
        """
        corner = as_site(corner, self.dimension)
        shape = tuple(int(n) for n in shape)
        if self.periodic:
            idx = [np.arange(c, c + n) % s for c, n, s in zip(corner, shape, self.sides)]
            return self.array[np.ix_(*idx)]
        lo = self.geometry.corner
        inside = all(c >= l and c + n <= l + s for c, n, l, s in zip(corner, shape, lo, self.sides))
        if inside:
            sl = tuple(slice(c - l, c - l + n) for c, n, l in zip(corner, shape, lo))
            return self.array[sl]
        field = self.field
        if field is None:
            raise UndecidableError(
                f"box at {corner} with shape {shape} leaves the generated window; enlarge the margin"
            )
        return field.sample(corner, shape)

    def __repr__(self):
        return f"Configuration(d={self.dimension}, {self.geometry}, seed={self.rng_seed}, bias={self.bias})"


def generate_configuration(d: int, geometry: Geometry, rng_seed: int, bias: float = 0.5) -> Configuration:
    """Sample the keyed Bernoulli field on ``geometry``."""
    if int(d) < 1:
        raise ArgumentError("dimension must be at least 1")
    if geometry.dimension != d:
        raise ArgumentError(f"geometry has dimension {geometry.dimension}, expected {d}")
    field = CoinField(d, rng_seed, bias)
    bits = field.sample(geometry.corner, geometry.sides)
    return Configuration.from_array(bits, geometry, field.rng_seed, field.bias)


def translate_configuration(c: Configuration, z) -> Configuration:
    """``theta^z``: the bit at ``x`` of the result is the bit at ``x - z``."""
    if not c.periodic:
        raise UnsupportedGeometryError("exact translation needs a torus")
    z = as_site(z, c.dimension)
    shifted = np.roll(c.array, shift=z, axis=tuple(range(c.dimension)))
    return Configuration.from_array(shifted, c.geometry, None, c.bias)


# -- serialization -----------------------------------------------------------

_HEAD = struct.Struct("<4sHHBB")


def header_fields(c: Configuration) -> dict:
    return {
        "magic": MAGIC.decode(),
        "version": FORMAT_VERSION,
        "dimension": c.dimension,
        "geometry": "torus" if c.periodic else "window",
        "sides": list(c.sides),
        "corner": list(c.geometry.corner),
        "rng_seed": c.rng_seed,
        "bias": c.bias,
    }


def dumps_configuration(c: Configuration) -> bytes:
    d = c.dimension
    head = _HEAD.pack(MAGIC, FORMAT_VERSION, d, 1 if c.periodic else 0, 0 if c.rng_seed is None else 1)
    body = struct.pack(f"<{d}Q{d}qQd", *c.sides, *c.geometry.corner, c.rng_seed or 0, c.bias)
    return head + body + c.packed


def loads_configuration(data: bytes) -> Configuration:
    if len(data) < _HEAD.size:
        raise ArgumentError("truncated configuration file")
    magic, version, d, tag, has_seed = _HEAD.unpack_from(data)
    if magic != MAGIC:
        raise ArgumentError(f"bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise ArgumentError(f"unsupported format version {version}")
    body = struct.Struct(f"<{d}Q{d}qQd")
    fields = body.unpack_from(data, _HEAD.size)
    sides, corner = fields[:d], fields[d : 2 * d]
    seed, bias = fields[2 * d], fields[2 * d + 1]
    geometry = Torus(sides) if tag == 1 else Window(corner, sides)
    packed = data[_HEAD.size + body.size :]
    if len(packed) != (geometry.n_sites + 7) // 8:
        raise ArgumentError("payload length does not match the header")
    return Configuration(d, geometry, seed if has_seed else None, bias, bytes(packed))


def write_configuration(c: Configuration, path) -> Tuple[Path, Path]:
    """Write the binary file and its JSON metadata sidecar (``<path>.json``)."""
    path = Path(path)
    path.write_bytes(dumps_configuration(c))
    sidecar = path.with_name(path.name + ".json")
    sidecar.write_text(json.dumps(header_fields(c), sort_keys=True, indent=2) + "\n")
    return path, sidecar


def read_configuration(path) -> Configuration:
    return loads_configuration(Path(path).read_bytes())
