"""Embedding records, the retrieval knowledge base, and the SEMB file format.

Vectors are stored as little-endian 32-bit floats on disk and promoted to
float64 for computation. A loaded knowledge base is immutable and safe to
share across workers.
"""

from __future__ import annotations

import hashlib
import math
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    CorruptionError,
    DegenerateInputError,
    DimensionError,
    FormatError,
    InputError,
)

SEMB_MAGIC = b"SEMB"
SEMB_VERSION = 1

_HEADER = struct.Struct("<4sIIQ")      # magic, version, dim, count
_RECORD_HEAD = struct.Struct("<QI")    # id, text_len


@dataclass(frozen=True)
class Embedding:
    """One message: record key, source text, and its embedding vector."""

    id: int
    text: str
    vector: np.ndarray

    def __post_init__(self):
        vec = np.array(self.vector, dtype=np.float64)
        if vec.ndim != 1 or vec.size == 0:
            raise InputError("embedding vector must be a nonempty 1-d array")
        if not np.all(np.isfinite(vec)):
            raise InputError(f"embedding {self.id} has non-finite components")
        vec.flags.writeable = False
        object.__setattr__(self, "vector", vec)


class KnowledgeBase:
    """Ordered, immutable collection of embeddings sharing one dimension."""

    def __init__(self, entries: list[Embedding], dimension: int):
        if not entries:
            raise InputError("knowledge base must be non-empty")
        if dimension <= 0:
            raise FormatError(f"dimension must be positive, got {dimension}")
        ids = [e.id for e in entries]
        if len(set(ids)) != len(ids):
            raise InputError("knowledge base ids must be unique")
        for e in entries:
            if e.vector.shape[0] != dimension:
                raise DimensionError(
                    f"entry {e.id} has dimension {e.vector.shape[0]}, expected {dimension}"
                )
        self._entries = tuple(entries)
        self._dimension = int(dimension)
        self._matrix: np.ndarray | None = None
        self._unit_matrix: np.ndarray | None = None
        self._id_index = {e.id: i for i, e in enumerate(self._entries)}

    @property
    def dimension(self) -> int:
        return self._dimension

    @property
    def entries(self) -> tuple[Embedding, ...]:
        return self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def __getitem__(self, index: int) -> Embedding:
        return self._entries[index]

    def index_of(self, entry_id: int) -> int:
        return self._id_index[entry_id]

    @property
    def ids(self) -> np.ndarray:
        return np.array([e.id for e in self._entries], dtype=np.int64)

    def matrix(self) -> np.ndarray:
        """(N, D) array of raw vectors, row i = entry i. Cached, read-only."""
        if self._matrix is None:
            m = np.stack([e.vector for e in self._entries])
            m.flags.writeable = False
            self._matrix = m
        return self._matrix

    def unit_matrix(self) -> np.ndarray:
        """Row-normalized matrix used for cosine scoring. Cached, read-only."""
        if self._unit_matrix is None:
            m = self.matrix()
            norms = np.linalg.norm(m, axis=1, keepdims=True)
            if np.any(norms == 0.0):
                raise DegenerateInputError("knowledge base contains a zero vector")
            u = m / norms
            u.flags.writeable = False
            self._unit_matrix = u
        return self._unit_matrix


def l2_normalize(v: np.ndarray) -> np.ndarray:
    """Scale v to unit Euclidean norm."""
    v = np.asarray(v, dtype=np.float64)
    norm = np.linalg.norm(v)
    if norm == 0.0:
        raise DegenerateInputError("cannot normalize a zero vector")
    return v / norm


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity, clamped to [-1, 1] against rounding."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch: {a.shape} vs {b.shape}")
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise DegenerateInputError("cosine undefined for a zero vector")
    return float(np.clip(np.dot(a, b) / (na * nb), -1.0, 1.0))


def synthetic_embed(text: str, dim: int, seed: int) -> np.ndarray:
    """Deterministic pseudo-embedding: unit normal direction keyed by (text, seed).

    The text is hashed into a Philox counter key, so identical inputs give
    bit-identical outputs on any platform and no global RNG state is touched.
    """
    if dim < 2:
        raise InputError(f"dim must be >= 2, got {dim}")
    digest = hashlib.sha256(f"{seed}\x1f{text}".encode("utf-8")).digest()
    key = int.from_bytes(digest[:16], "little")
    rng = np.random.Generator(np.random.Philox(key=key))
    return l2_normalize(rng.standard_normal(dim))


def save_kb(kb: KnowledgeBase, path) -> None:
    """Write a knowledge base in SEMB v1 binary format (little-endian, f32)."""
    with open(path, "wb") as f:
        f.write(_HEADER.pack(SEMB_MAGIC, SEMB_VERSION, kb.dimension, len(kb)))
        for e in kb.entries:
            raw = e.text.encode("utf-8")
            f.write(_RECORD_HEAD.pack(e.id, len(raw)))
            f.write(raw)
            f.write(np.asarray(e.vector, dtype="<f4").tobytes())


def load_kb(path) -> KnowledgeBase:
    """Read an SEMB v1 file; vectors are bit-identical to the file contents."""
    with open(path, "rb") as f:
        blob = f.read()
    if len(blob) < _HEADER.size:
        raise CorruptionError("file shorter than SEMB header", byte_offset=len(blob))
    magic, version, dim, count = _HEADER.unpack_from(blob, 0)
    if magic != SEMB_MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {SEMB_MAGIC!r}")
    if version != SEMB_VERSION:
        raise FormatError(f"unsupported SEMB version {version}")
    if dim == 0:
        raise FormatError("SEMB header declares dimension 0")

    offset = _HEADER.size
    vec_bytes = 4 * dim
    entries = []
    for _ in range(count):
        if offset + _RECORD_HEAD.size > len(blob):
            raise CorruptionError("truncated record header", byte_offset=offset)
        rec_id, text_len = _RECORD_HEAD.unpack_from(blob, offset)
        offset += _RECORD_HEAD.size
        if offset + text_len + vec_bytes > len(blob):
            raise CorruptionError("truncated record body", byte_offset=offset)
        text = blob[offset : offset + text_len].decode("utf-8")
        offset += text_len
        vector = np.frombuffer(blob, dtype="<f4", count=dim, offset=offset).astype(np.float64)
        offset += vec_bytes
        entries.append(Embedding(id=rec_id, text=text, vector=vector))
    return KnowledgeBase(entries, dimension=dim)


# Deterministic text pools for synthetic corpora. Sentences carry proper
# names, numbers, and month-day dates so the entity metrics have targets.
_NAMES = (
    "Arden", "Bowen", "Calla", "Doran", "Eloi", "Farrah", "Goran", "Halden",
    "Imara", "Jorun", "Kestrel", "Lorcan", "Merit", "Norell", "Ostin", "Perrin",
    "Quilla", "Rowan", "Selden", "Tamsin",
)
_CITIES = (
    "Avenor", "Brelin", "Corvale", "Dunmore", "Eastfall", "Fenwick", "Garmouth",
    "Hollis", "Ilverton", "Jasper", "Kelsey", "Lunden", "Marrow",
)
_MONTHS = (
    "January", "February", "March", "April", "May", "June", "July",
    "August", "September", "October", "November", "December",
)
_VERBS = ("shipped", "moved", "routed", "logged", "delivered", "traced")


def _synthetic_text(i: int) -> str:
    name = _NAMES[i % len(_NAMES)]
    city = _CITIES[(i * 5 + 3) % len(_CITIES)]
    month = _MONTHS[(i * 7 + 1) % len(_MONTHS)]
    verb = _VERBS[(i * 3 + 2) % len(_VERBS)]
    qty = 3 + (i * 11) % 240
    day = 1 + (i * 13) % 27
    return f"{name} {verb} {qty} crates to {city} on {month} {day}"


def random_kb(count: int, dim: int, seed: int) -> KnowledgeBase:
    """Fully synthetic KB: isotropic unit vectors with entity-bearing texts."""
    if count < 1:
        raise InputError("count must be >= 1")
    entries = []
    for i in range(count):
        text = _synthetic_text(i)
        entries.append(Embedding(id=i, text=text, vector=synthetic_embed(text, dim, seed)))
    return KnowledgeBase(entries, dimension=dim)


def planted_kb(
    count: int,
    dim: int,
    planted_dims: int = 4,
    noise_scale: float = 0.005,
    seed: int = 0,
    grid_span: float = 0.85,
    aux_scale: float = 0.45,
) -> KnowledgeBase:
    """Synthetic KB whose retrieval-relevant structure lives in a few leading dims.

    Entries occupy a fine 2-d lattice in dims 0 and 1 (cells a handful of
    quantization steps apart, so channel corruption of those symbols usually
    flips the nearest-neighbor decision), carry a random phase pattern on the
    remaining planted dims, and share a constant full-scale component in the
    last dim that pins the quantizer scale. All other coordinates are
    `noise_scale` jitter, so the cross-entry variance outside the planted
    block is negligible. Texts have per-entry entities, so a retrieval miss
    costs both cosine and entity terms.
    """
    if not (2 <= planted_dims <= dim - 1):
        raise InputError("planted_dims must be in [2, dim - 1]")
    if count < 4:
        raise InputError("count must be >= 4")
    cols = max(2, int(round(math.sqrt(count * 2.0))))
    rows = max(2, count // cols + (1 if count % cols else 0))
    entries = []
    for i in range(count):
        key = int.from_bytes(
            hashlib.sha256(f"planted\x1f{seed}\x1f{i}".encode()).digest()[:16], "little"
        )
        rng = np.random.Generator(np.random.Philox(key=key))
        cx, cy = i % cols, i // cols
        vec = rng.standard_normal(dim) * noise_scale
        vec[0] = -grid_span + 2.0 * grid_span * cx / (cols - 1)
        vec[1] = -grid_span + 2.0 * grid_span * cy / (rows - 1)
        phases = 2.0 * np.pi * rng.random(max(1, (planted_dims - 2 + 1) // 2))
        for j in range(2, planted_dims):
            phi = phases[(j - 2) // 2]
            vec[j] = aux_scale * (np.cos(phi) if (j - 2) % 2 == 0 else np.sin(phi))
        vec[dim - 1] = 1.0
        entries.append(Embedding(id=i, text=_synthetic_text(i), vector=l2_normalize(vec)))
    return KnowledgeBase(entries, dimension=dim)
