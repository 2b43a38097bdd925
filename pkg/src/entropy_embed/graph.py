"""Graph storage, loading, relabeling and edge-membership tests."""

from __future__ import annotations

import io
import math
import struct
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable

import numpy as np
from numba import njit

from .errors import CapabilityError, EmptyGraphError, GraphFormatError

LCG_MULTIPLIER = 1103515245
MASK32 = 0xFFFFFFFF
SNAPSHOT_MAGIC = b"GEMP"
_SNAPSHOT_HEADER = struct.Struct("<4sIQ")


@dataclass(frozen=True, eq=False)
class Graph:
    """Simple undirected graph on vertices ``0..n-1``.

    ``labels[v]`` is the vertex id ``v`` had in the input file; it is carried
    through relabeling so results can be written against the original ids.
    """

    n: int
    src: np.ndarray
    dst: np.ndarray
    labels: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        src = np.ascontiguousarray(self.src, dtype=np.int64)
        dst = np.ascontiguousarray(self.dst, dtype=np.int64)
        if src.shape != dst.shape or src.ndim != 1:
            raise ValueError("src and dst must be 1-d arrays of equal length")
        if src.size and (min(src.min(), dst.min()) < 0 or max(src.max(), dst.max()) >= self.n):
            raise ValueError("vertex index out of range")
        if np.any(src == dst):
            raise ValueError("self-loops are not allowed")
        labels = np.arange(self.n, dtype=np.int64) if self.labels is None else np.asarray(self.labels, dtype=np.int64)
        if labels.shape != (self.n,):
            raise ValueError("labels must have length n")
        object.__setattr__(self, "src", src)
        object.__setattr__(self, "dst", dst)
        object.__setattr__(self, "labels", labels)
        keys = self.pair_keys
        if keys.size > 1 and np.any(keys[1:] == keys[:-1]):
            raise ValueError("duplicate undirected edge")

    @property
    def m(self) -> int:
        return int(self.src.size)

    @property
    def num_pairs(self) -> int:
        return self.n * (self.n - 1) // 2

    @cached_property
    def pair_keys(self) -> np.ndarray:
        """Sorted ``min*n + max`` keys, the exact membership structure."""
        lo = np.minimum(self.src, self.dst)
        hi = np.maximum(self.src, self.dst)
        return np.sort(lo * self.n + hi)

    def degrees(self) -> np.ndarray:
        return np.bincount(np.concatenate([self.src, self.dst]), minlength=self.n)

    def edges(self) -> np.ndarray:
        return np.stack([self.src, self.dst], axis=1)


@dataclass(frozen=True, eq=False)
class Permutation:
    forward: np.ndarray  # old id -> new id
    inverse: np.ndarray  # new id -> old id

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        ids = np.arange(n, dtype=np.int64)
        return cls(ids, ids.copy())

    def then(self, other: "Permutation") -> "Permutation":
        """Compose: apply ``self`` first, then ``other``."""
        forward = other.forward[self.forward]
        inverse = np.empty_like(forward)
        inverse[forward] = np.arange(forward.size)
        return Permutation(forward, inverse)


def load_edge_list(stream: str | Path | Iterable[str] | io.TextIOBase) -> Graph:
    """Parse a whitespace-separated edge list.

    Lines starting with ``#`` or ``%`` and blank lines are skipped. Self-loops
    are dropped, duplicate undirected edges merged, and vertex ids compacted
    to ``0..n-1`` in order of first appearance.
    """
    if isinstance(stream, Path):
        with open(stream, encoding="utf-8", errors="replace") as fh:
            return load_edge_list(fh)
    if isinstance(stream, str):
        stream = io.StringIO(stream)

    index: dict[int, int] = {}
    seen: set[tuple[int, int]] = set()
    src: list[int] = []
    dst: list[int] = []
    for lineno, line in enumerate(stream, start=1):
        text = line.strip()
        if not text or text[0] in "#%":
            continue
        tokens = text.split()
        if len(tokens) != 2:
            raise GraphFormatError(f"expected 2 vertex ids, got {len(tokens)} tokens", lineno)
        for tok in tokens:
            if not (tok.isascii() and tok.isdigit()):
                raise GraphFormatError(f"malformed vertex id {tok[:32]!r}", lineno)
        a, b = int(tokens[0]), int(tokens[1])
        if max(a, b) >= 2**63:
            raise GraphFormatError("vertex id does not fit in 63 bits", lineno)
        if a == b:
            continue
        key = (a, b) if a < b else (b, a)
        if key in seen:
            continue
        seen.add(key)
        src.append(index.setdefault(a, len(index)))
        dst.append(index.setdefault(b, len(index)))

    if not src:
        raise EmptyGraphError("graph has no edges after removing self-loops and duplicates")
    labels = np.fromiter(index.keys(), dtype=np.int64, count=len(index))
    return Graph(len(index), np.array(src), np.array(dst), labels)


def format_edge_list(g: Graph) -> str:
    """Inverse of :func:`load_edge_list` (uses the original vertex ids)."""
    lines = [f"{g.labels[a]} {g.labels[b]}" for a, b in zip(g.src.tolist(), g.dst.tolist())]
    return "\n".join(lines) + "\n"


def random_relabel(g: Graph, seed: int) -> tuple[Graph, Permutation]:
    forward = np.random.default_rng(seed).permutation(g.n).astype(np.int64)
    inverse = np.empty_like(forward)
    inverse[forward] = np.arange(g.n)
    perm = Permutation(forward, inverse)
    return relabel(g, perm), perm


def relabel(g: Graph, perm: Permutation) -> Graph:
    return Graph(g.n, perm.forward[g.src], perm.forward[g.dst], g.labels[perm.inverse])


# -- hashing -----------------------------------------------------------------


def hash_pair(i: int, j: int, n: int, s: int) -> int:
    """Table slot of the ordered pair (i, j): ``((i*n + j) * 1103515245) & (s-1)`` in 32-bit arithmetic."""
    return ((((i * n + j) & MASK32) * LCG_MULTIPLIER) & MASK32) & (s - 1)


@njit(cache=True, inline="always")
def hash_pair_jit(i, j, n, mask):
    x = (np.uint64(i) * np.uint64(n) + np.uint64(j)) & np.uint64(MASK32)
    return np.int64(((x * np.uint64(LCG_MULTIPLIER)) & np.uint64(MASK32)) & np.uint64(mask))


def hash_pairs(i: np.ndarray, j: np.ndarray, n: int, s: int) -> np.ndarray:
    """Vectorised :func:`hash_pair`."""
    x = (np.asarray(i, dtype=np.uint64) * np.uint64(n) + np.asarray(j, dtype=np.uint64)) & np.uint64(MASK32)
    return (((x * np.uint64(LCG_MULTIPLIER)) & np.uint64(MASK32)) & np.uint64(s - 1)).astype(np.int64)


@dataclass(frozen=True, eq=False)
class EdgeHashSet:
    """Byte table answering "definitely not an edge" (0) vs "possibly an edge" (1)."""

    table: np.ndarray
    n: int

    @property
    def s(self) -> int:
        return int(self.table.size)

    @property
    def k(self) -> int:
        return self.s.bit_length() - 1

    def probe(self, i: int, j: int) -> int:
        return int(self.table[hash_pair(i, j, self.n, self.s)])

    def probe_many(self, i: np.ndarray, j: np.ndarray) -> np.ndarray:
        return self.table[hash_pairs(i, j, self.n, self.s)] != 0


MIN_TABLE_BITS = 12  # tiny graphs would otherwise see a few-percent false-positive rate


def table_bits_for(m: int) -> int:
    return max(MIN_TABLE_BITS, math.ceil(math.log2(max(64 * m, 1))))


def build_edge_hash(g: Graph, bits: int | None = None) -> EdgeHashSet:
    """Insert every edge in both orientations into a ``2**bits`` byte table.

    By default the table has at least 64 slots per edge.
    """
    if bits is None:
        bits = table_bits_for(g.m)
    if not 1 <= bits <= 32:
        raise CapabilityError(f"hash table needs {bits} address bits; the 32-bit hash supports at most 32")
    try:
        table = np.zeros(1 << bits, dtype=np.uint8)
    except MemoryError as exc:
        raise MemoryError(f"cannot allocate hash table of 2**{bits} bytes") from exc
    s = 1 << bits
    table[hash_pairs(g.src, g.dst, g.n, s)] = 1
    table[hash_pairs(g.dst, g.src, g.n, s)] = 1
    return EdgeHashSet(table, g.n)


def is_edge_exact(g: Graph, i: int, j: int) -> bool:
    if not (0 <= i < g.n and 0 <= j < g.n):
        raise IndexError(f"vertex pair ({i}, {j}) out of range for n={g.n}")
    if i == j:
        return False
    key = min(i, j) * g.n + max(i, j)
    pos = np.searchsorted(g.pair_keys, key)
    return bool(pos < g.pair_keys.size and g.pair_keys[pos] == key)


def are_edges_exact(g: Graph, i: np.ndarray, j: np.ndarray) -> np.ndarray:
    i = np.asarray(i, dtype=np.int64)
    j = np.asarray(j, dtype=np.int64)
    if i.size and (min(i.min(), j.min()) < 0 or max(i.max(), j.max()) >= g.n):
        raise IndexError("vertex index out of range")
    if g.pair_keys.size == 0:
        return np.zeros(i.shape, dtype=bool)
    keys = np.minimum(i, j) * g.n + np.maximum(i, j)
    pos = np.searchsorted(g.pair_keys, keys)
    pos = np.minimum(pos, g.pair_keys.size - 1)
    return (g.pair_keys[pos] == keys) & (i != j)


# -- entropy -----------------------------------------------------------------


def _xlog2x(p: float) -> float:
    return 0.0 if p <= 0.0 else p * math.log2(p)


def basic_entropy_of(m: int, num_pairs: int) -> float:
    if num_pairs <= 0:
        raise ValueError("basic entropy needs at least one vertex pair")
    p = m / num_pairs
    return -_xlog2x(p) - _xlog2x(1.0 - p)


def basic_entropy(g: Graph) -> float:
    """Bits per vertex pair needed without any embedding (Bernoulli(m/N) code)."""
    return basic_entropy_of(g.m, g.num_pairs)


# -- binary snapshot ---------------------------------------------------------


def write_snapshot(g: Graph, path: str | Path) -> None:
    if g.n >= 2**32:
        raise CapabilityError("snapshot format stores vertex ids as u32")
    with open(path, "wb") as fh:
        fh.write(_SNAPSHOT_HEADER.pack(SNAPSHOT_MAGIC, g.n, g.m))
        fh.write(g.src.astype("<u4").tobytes())
        fh.write(g.dst.astype("<u4").tobytes())


def read_snapshot(path: str | Path) -> Graph:
    data = Path(path).read_bytes()
    if len(data) < _SNAPSHOT_HEADER.size:
        raise GraphFormatError("snapshot truncated in header")
    magic, n, m = _SNAPSHOT_HEADER.unpack_from(data)
    if magic != SNAPSHOT_MAGIC:
        raise GraphFormatError("bad snapshot magic")
    body = data[_SNAPSHOT_HEADER.size:]
    if len(body) != 8 * m:
        raise GraphFormatError(f"snapshot body has {len(body)} bytes, expected {8 * m}")
    src = np.frombuffer(body, dtype="<u4", count=m).astype(np.int64)
    dst = np.frombuffer(body, dtype="<u4", count=m, offset=4 * m).astype(np.int64)
    if m == 0:
        raise EmptyGraphError("snapshot contains no edges")
    try:
        return Graph(n, src, dst)
    except ValueError as exc:
        raise GraphFormatError(f"invalid snapshot contents: {exc}") from exc


def is_snapshot(path: str | Path) -> bool:
    with open(path, "rb") as fh:
        return fh.read(4) == SNAPSHOT_MAGIC
