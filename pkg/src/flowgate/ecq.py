"""Event-centered cross-modal query.

Anchor frames are scored against the user query; events are weighted with a
softmax over the similarities and the smallest event set whose cumulative
weight reaches 1 - p_target is selected. A brute-force enumerator doubles as
the test oracle for the greedy selection.
"""

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (BadMagic, DimensionMismatch, EmptyEventList, KTooLarge,
                     NonFinite, TooManyEvents, Truncated)

EMB_MAGIC = b"EMB1"
_BRUTE_FORCE_LIMIT = 20


@dataclass(frozen=True)
class SignificanceTable:
    """Per-event query similarity and softmax significance, by event index."""
    similarities: np.ndarray  # (N,) float64
    alphas: np.ndarray        # (N,) float64, positive, sums to 1

    def __post_init__(self):
        if self.alphas.shape != self.similarities.shape or self.alphas.ndim != 1:
            raise DimensionMismatch("similarities and alphas must be parallel 1-d arrays")
        if not np.isfinite(self.alphas).all() or (self.alphas <= 0).any():
            raise NonFinite("alphas must be finite and strictly positive")
        if abs(float(self.alphas.sum()) - 1.0) > 1e-9:
            raise ValueError(f"alphas sum to {self.alphas.sum()}, expected 1")

    def __len__(self) -> int:
        return len(self.alphas)

    @classmethod
    def from_scores(cls, scores: np.ndarray) -> "SignificanceTable":
        scores = np.asarray(scores, dtype=np.float64)
        if scores.size == 0:
            raise EmptyEventList("need at least one event")
        shifted = scores - scores.max()  # stable softmax
        expd = np.exp(shifted)
        return cls(similarities=scores, alphas=expd / expd.sum())

    @classmethod
    def uniform(cls, n: int) -> "SignificanceTable":
        """Fallback table when no query is available: every event equal."""
        return cls.from_scores(np.zeros(n))


@dataclass(frozen=True)
class SelectionResult:
    selected: tuple[int, ...]   # sorted event indices
    achieved_mass: float
    p_value: float


def _normalize_rows(vectors: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(vectors, axis=-1, keepdims=True)
    if (norms == 0).any():
        raise NonFinite("cannot normalize a zero embedding")
    return vectors / norms


def event_significance(anchor_embeddings: np.ndarray, query: np.ndarray,
                       normalize: bool = True) -> SignificanceTable:
    """Dot-product similarities of anchors vs query, softmaxed into alphas.

    Embeddings are L2-normalized first unless normalize=False.
    """
    anchors = np.asarray(anchor_embeddings, dtype=np.float64)
    q = np.asarray(query, dtype=np.float64).reshape(-1)
    if anchors.ndim != 2:
        raise DimensionMismatch(f"anchors must be (N, D), got {anchors.shape}")
    if anchors.shape[0] == 0:
        raise EmptyEventList("need at least one anchor embedding")
    if anchors.shape[1] != q.shape[0]:
        raise DimensionMismatch(
            f"anchor dim {anchors.shape[1]} vs query dim {q.shape[0]}")
    if not (np.isfinite(anchors).all() and np.isfinite(q).all()):
        raise NonFinite("embeddings contain NaN or Inf")
    if normalize:
        anchors = _normalize_rows(anchors)
        q = _normalize_rows(q[None, :])[0]
    return SignificanceTable.from_scores(anchors @ q)


def select_events_minimal(table: SignificanceTable,
                          p_target: float = 0.05) -> SelectionResult:
    """Smallest event set whose alpha mass reaches 1 - p_target.

    Events are taken in decreasing-alpha order (ties to the lower index);
    the shortest qualifying prefix is a minimum-cardinality feasible set.
    """
    if not 0.0 < p_target < 1.0:
        raise ValueError(f"p_target must be in (0, 1), got {p_target}")
    alphas = table.alphas
    order = np.lexsort((np.arange(len(alphas)), -alphas))
    mass = 0.0
    chosen: list[int] = []
    for i in order:
        chosen.append(int(i))
        mass += float(alphas[i])
        if mass >= 1.0 - p_target:
            break
    return SelectionResult(selected=tuple(sorted(chosen)),
                           achieved_mass=mass, p_value=1.0 - mass)


def select_events_topk(table: SignificanceTable, k: int) -> tuple[int, ...]:
    """The k most query-similar events, ties to the lower index."""
    n = len(table)
    if k > n:
        raise KTooLarge(f"k={k} with only {n} events")
    if k < 1:
        raise ValueError("k must be >= 1")
    order = np.lexsort((np.arange(n), -table.similarities))
    return tuple(sorted(int(i) for i in order[:k]))


def brute_force_minimal(table: SignificanceTable,
                        p_target: float = 0.05) -> SelectionResult:
    """Exhaustive-enumeration oracle for select_events_minimal.

    Smallest-cardinality subset whose mass reaches 1 - p_target; among equal
    cardinalities, the lexicographically smallest index set.
    """
    n = len(table)
    if n > _BRUTE_FORCE_LIMIT:
        raise TooManyEvents(f"{n} events exceed the {_BRUTE_FORCE_LIMIT}-event guard")
    target = 1.0 - p_target
    bits = ((np.arange(2 ** n)[:, None] >> np.arange(n)[None, :]) & 1).astype(np.float64)
    masses = bits @ table.alphas
    feasible = np.flatnonzero(masses >= target)
    sizes = bits[feasible].sum(axis=1)
    min_size = sizes.min()
    candidates = feasible[sizes == min_size]
    subsets = [tuple(np.flatnonzero(bits[m]).tolist()) for m in candidates]
    best = min(subsets)
    mass = float(table.alphas[list(best)].sum())
    return SelectionResult(selected=tuple(best), achieved_mass=mass,
                           p_value=1.0 - mass)


# EMB1 embedding interchange format: ASCII "EMB1", uint32 count, uint32 dim
# (little-endian), then count*dim float32 values. Anchors are ordered by
# event index; a query is a single-record file.

def write_embeddings(vectors: np.ndarray) -> bytes:
    vectors = np.asarray(vectors, dtype=np.float32)
    if vectors.ndim == 1:
        vectors = vectors[None, :]
    if vectors.ndim != 2:
        raise DimensionMismatch(f"embeddings must be (N, D), got {vectors.shape}")
    if not np.isfinite(vectors).all():
        raise NonFinite("embeddings contain NaN or Inf")
    count, dim = vectors.shape
    header = EMB_MAGIC + struct.pack("<II", count, dim)
    return header + np.ascontiguousarray(vectors, dtype="<f4").tobytes()


def read_embeddings(data: bytes) -> np.ndarray:
    if len(data) < 12:
        raise Truncated(f"embedding buffer has {len(data)} bytes, header needs 12")
    if data[:4] != EMB_MAGIC:
        raise BadMagic(f"bad embedding magic {data[:4]!r}")
    count, dim = struct.unpack_from("<II", data, 4)
    if count < 1 or dim < 1:
        raise BadMagic(f"invalid embedding header count={count} dim={dim}")
    need = 12 + count * dim * 4
    if len(data) < need:
        raise Truncated(f"embedding buffer has {len(data)} bytes, header implies {need}")
    vectors = np.frombuffer(data, dtype="<f4", count=count * dim, offset=12)
    out = vectors.reshape(count, dim).copy()
    if not np.isfinite(out).all():
        raise NonFinite("embedding file contains NaN or Inf")
    return out


def load_embeddings(path: str | Path) -> np.ndarray:
    """Load EMB1 binary or the JSON debugging alternative (array of arrays)."""
    path = Path(path)
    if path.suffix.lower() == ".json":
        rows = json.loads(path.read_text())
        arr = np.asarray(rows, dtype=np.float32)
        if arr.ndim == 1:
            arr = arr[None, :]
        if arr.ndim != 2:
            raise DimensionMismatch(f"JSON embeddings must be 2-d, got {arr.shape}")
        if not np.isfinite(arr).all():
            raise NonFinite("JSON embeddings contain NaN or Inf")
        return arr
    return read_embeddings(path.read_bytes())
