"""Fixed-width bit strings, named register layouts, and GF(2) linear algebra.

Bit order convention: index 0 is the first (leftmost) bit in display order.
Serialization packs bit j into byte j // 8 at bit position j % 8, i.e.
LSB-first within each byte.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

# Per-byte bit-reversal table; bridges display order (MSB-first int) and the
# LSB-first-in-byte wire order.
_REV = bytes(int(f"{i:08b}"[::-1], 2) for i in range(256))


class BitString:
    """Immutable bit string of fixed width.

    Internally the bits are held in an int whose most significant bit (of the
    `width`-bit window) is bit index 0.
    """

    __slots__ = ("value", "width")

    def __init__(self, value: int, width: int):
        if width < 0:
            raise ValueError("width must be >= 0")
        if value < 0:
            raise ValueError("value must be >= 0")
        object.__setattr__(self, "value", value & ((1 << width) - 1))
        object.__setattr__(self, "width", width)

    def __setattr__(self, name, val):
        raise AttributeError("BitString is immutable")

    # -- constructors -----------------------------------------------------

    @staticmethod
    def from_str(s: str) -> "BitString":
        if s and set(s) - {"0", "1"}:
            raise ValueError(f"not a bit string: {s!r}")
        return BitString(int(s, 2) if s else 0, len(s))

    @staticmethod
    def from_bits(bits: Iterable[int]) -> "BitString":
        v = 0
        w = 0
        for b in bits:
            v = (v << 1) | (b & 1)
            w += 1
        return BitString(v, w)

    @staticmethod
    def zeros(width: int) -> "BitString":
        return BitString(0, width)

    @staticmethod
    def from_bytes(data: bytes, width: int) -> "BitString":
        nbytes = (width + 7) // 8
        if len(data) != nbytes:
            raise ValueError(f"expected {nbytes} bytes for width {width}, got {len(data)}")
        pad = 8 * nbytes - width
        v = int.from_bytes(data.translate(_REV), "big") >> pad
        return BitString(v, width)

    # -- accessors ---------------------------------------------------------

    def bit(self, j: int) -> int:
        if not 0 <= j < self.width:
            raise IndexError(j)
        return (self.value >> (self.width - 1 - j)) & 1

    def slice(self, start: int, stop: int) -> "BitString":
        if not 0 <= start <= stop <= self.width:
            raise IndexError((start, stop))
        w = stop - start
        return BitString((self.value >> (self.width - stop)) & ((1 << w) - 1), w)

    def bits(self) -> Iterator[int]:
        for j in range(self.width):
            yield (self.value >> (self.width - 1 - j)) & 1

    def to_bytes(self) -> bytes:
        nbytes = (self.width + 7) // 8
        pad = 8 * nbytes - self.width
        return (self.value << pad).to_bytes(nbytes, "big").translate(_REV)

    # -- algebra -----------------------------------------------------------

    def __xor__(self, other: "BitString") -> "BitString":
        if self.width != other.width:
            raise ValueError(f"XOR width mismatch: {self.width} vs {other.width}")
        return BitString(self.value ^ other.value, self.width)

    def dot(self, other: "BitString") -> int:
        """GF(2) inner product."""
        if self.width != other.width:
            raise ValueError(f"dot width mismatch: {self.width} vs {other.width}")
        return (self.value & other.value).bit_count() & 1

    def cat(self, other: "BitString") -> "BitString":
        return BitString((self.value << other.width) | other.value, self.width + other.width)

    def popcount(self) -> int:
        return self.value.bit_count()

    def is_zero(self) -> bool:
        return self.value == 0

    # -- protocol ----------------------------------------------------------

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, BitString)
            and self.width == other.width
            and self.value == other.value
        )

    def __hash__(self) -> int:
        return hash((self.value, self.width))

    def __len__(self) -> int:
        return self.width

    def __str__(self) -> str:
        return format(self.value, f"0{self.width}b") if self.width else ""

    def __repr__(self) -> str:
        if self.width <= 64:
            return f"BitString('{self}')"
        return f"BitString(width={self.width}, value=0x{self.value:x})"


def concat(parts: Sequence[BitString]) -> BitString:
    v = 0
    w = 0
    for p in parts:
        v = (v << p.width) | p.value
        w += p.width
    return BitString(v, w)


@dataclass(frozen=True)
class RegisterLayout:
    """Ordered named registers partitioning a bit string."""

    regs: tuple[tuple[str, int], ...]

    def __post_init__(self):
        names = [n for n, _ in self.regs]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate register names in {names}")
        for n, w in self.regs:
            if w < 0:
                raise ValueError(f"register {n} has negative width")

    @staticmethod
    def of(**regs: int) -> "RegisterLayout":
        return RegisterLayout(tuple(regs.items()))

    @property
    def width(self) -> int:
        return sum(w for _, w in self.regs)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.regs)

    def reg_width(self, name: str) -> int:
        for n, w in self.regs:
            if n == name:
                return w
        raise KeyError(name)

    def span(self, name: str) -> tuple[int, int]:
        """(start, stop) bit positions of the named register."""
        off = 0
        for n, w in self.regs:
            if n == name:
                return off, off + w
            off += w
        raise KeyError(name)

    def extract(self, full: BitString, name: str) -> BitString:
        a, b = self.span(name)
        return full.slice(a, b)

    def extract_many(self, full: BitString, names: Sequence[str]) -> BitString:
        return concat([self.extract(full, n) for n in names])

    def replace(self, full: BitString, name: str, bits: BitString) -> BitString:
        a, b = self.span(name)
        if bits.width != b - a:
            raise ValueError(f"register {name} has width {b - a}, got {bits.width}")
        shift = full.width - b
        mask = ((1 << (b - a)) - 1) << shift
        return BitString((full.value & ~mask) | (bits.value << shift), full.width)

    def pack(self, parts: dict[str, BitString]) -> BitString:
        if set(parts) != set(self.names):
            raise ValueError(f"expected registers {self.names}, got {tuple(parts)}")
        return concat([parts[n] for n, _ in self.regs])

    def drop(self, names: Sequence[str]) -> "RegisterLayout":
        gone = set(names)
        return RegisterLayout(tuple((n, w) for n, w in self.regs if n not in gone))


# -- GF(2) linear algebra over int-encoded vectors --------------------------
#
# Vectors are ints in BitString value convention (bit index 0 = MSB of the
# width-bit window); pivot bookkeeping below is in raw int bit positions,
# which is fine because only XOR/dot structure matters.


def rref(vectors: Sequence[int]) -> tuple[list[int], list[int], list[int]]:
    """Reduced row echelon form over GF(2).

    Returns (rows, pivots, combos) where rows[i] has pivot bit pivots[i] set
    in no other row, and combos[j] is a mask over rows expressing the j-th
    input vector as an XOR of basis rows.
    """
    rows: list[int] = []
    pivots: list[int] = []
    for vec in vectors:
        v = vec
        for r, p in zip(rows, pivots):
            if (v >> p) & 1:
                v ^= r
        if v:
            p = v.bit_length() - 1
            for i in range(len(rows)):
                if (rows[i] >> p) & 1:
                    rows[i] ^= v
            rows.append(v)
            pivots.append(p)
    # In RREF each pivot bit appears in exactly one row, so membership of
    # row i in a span decomposition is just the pivot bit of the vector.
    combos = []
    for vec in vectors:
        c = 0
        v = vec
        for i, (r, p) in enumerate(zip(rows, pivots)):
            if (vec >> p) & 1:
                c |= 1 << i
                v ^= r
        if v:
            raise ValueError("vector outside span during combo resolution")
        combos.append(c)
    return rows, pivots, combos
