"""File-based providers consumed by the pipeline.

Frames arrive as a directory of zero-padded lossless images; flow arrives as
Middlebury files named flow_{t:06}.flo (or from the builtin block matcher);
saliency as 8-bit grayscale PNGs named sal_{t:06}.png. Providers are callables
indexed by frame (pair) position and are safe for concurrent use.
"""

import threading
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .ecq import load_embeddings
from .errors import FlowgateError, ProviderFailure
from .flowkit import block_matching_flow, read_flow_file, validate_frame

FRAME_EXTENSIONS = (".png", ".bmp", ".tiff", ".tif")


def flow_file_name(t: int) -> str:
    return f"flow_{t:06d}.flo"


def saliency_file_name(t: int) -> str:
    return f"sal_{t:06d}.png"


def list_frame_files(frames_dir: str | Path) -> list[Path]:
    frames_dir = Path(frames_dir)
    if not frames_dir.is_dir():
        raise ProviderFailure(f"frames directory {frames_dir} does not exist")
    files = sorted(p for p in frames_dir.iterdir()
                   if p.suffix.lower() in FRAME_EXTENSIONS)
    return files


def load_frames(frames_dir: str | Path) -> list[np.ndarray]:
    """All frames of a directory, ordered by filename, as (H, W, 3) uint8."""
    frames = []
    for path in list_frame_files(frames_dir):
        with Image.open(path) as img:
            frames.append(validate_frame(np.asarray(img.convert("RGB"))))
    return frames


class BuiltinFlowProvider:
    """Block-matching flow over an in-memory frame list, cached per pair."""

    def __init__(self, frames: Sequence[np.ndarray], block: int = 8, radius: int = 4):
        self._frames = frames
        self._block = block
        self._radius = radius
        self._cache: dict[int, np.ndarray] = {}
        self._lock = threading.Lock()

    @property
    def identifier(self) -> str:
        return f"builtin:block={self._block},radius={self._radius}"

    def __call__(self, t: int) -> np.ndarray:
        with self._lock:
            if t in self._cache:
                return self._cache[t]
        if not 0 <= t < len(self._frames) - 1:
            raise ProviderFailure(f"no frame pair ({t}, {t + 1})")
        flow = block_matching_flow(self._frames[t], self._frames[t + 1],
                                   self._block, self._radius)
        with self._lock:
            self._cache[t] = flow
        return flow


class DirectoryFlowProvider:
    """Per-pair Middlebury flow files from a directory."""

    def __init__(self, flow_dir: str | Path, expected_shape: tuple[int, int] | None = None):
        self._dir = Path(flow_dir)
        self._expected = expected_shape  # (H, W)

    @property
    def identifier(self) -> str:
        return f"dir:{self._dir}"

    def __call__(self, t: int) -> np.ndarray:
        path = self._dir / flow_file_name(t)
        if not path.is_file():
            raise ProviderFailure(f"missing flow file {path}")
        try:
            flow = read_flow_file(path.read_bytes())
        except FlowgateError as exc:
            raise ProviderFailure(f"{path}: {exc}") from exc
        if self._expected is not None and flow.shape[:2] != self._expected:
            raise ProviderFailure(
                f"{path}: flow is {flow.shape[1]}x{flow.shape[0]}, "
                f"frames are {self._expected[1]}x{self._expected[0]}")
        return flow


class DirectorySaliencyProvider:
    """Per-frame saliency PNGs scaled to [0, 1]."""

    def __init__(self, saliency_dir: str | Path,
                 expected_shape: tuple[int, int] | None = None):
        self._dir = Path(saliency_dir)
        self._expected = expected_shape

    @property
    def identifier(self) -> str:
        return f"dir:{self._dir}"

    def __call__(self, t: int) -> np.ndarray:
        path = self._dir / saliency_file_name(t)
        if not path.is_file():
            raise ProviderFailure(f"missing saliency file {path}")
        with Image.open(path) as img:
            if img.mode != "L":
                raise ProviderFailure(f"{path}: expected 8-bit grayscale, got {img.mode}")
            arr = np.asarray(img, dtype=np.float64) / 255.0
        if self._expected is not None and arr.shape != self._expected:
            raise ProviderFailure(
                f"{path}: saliency is {arr.shape[1]}x{arr.shape[0]}, "
                f"frames are {self._expected[1]}x{self._expected[0]}")
        return arr


class ConstantSaliencyProvider:
    """Neutral saliency (all ones) when no saliency directory is given."""

    identifier = "constant:1.0"

    def __init__(self, shape: tuple[int, int]):
        self._map = np.ones(shape, dtype=np.float64)

    def __call__(self, t: int) -> np.ndarray:
        return self._map


def prefetch(provider, indices: Sequence[int], workers: int = 1) -> None:
    """Warm a provider's cache concurrently; results are index-addressed so
    scheduling cannot affect downstream output."""
    if workers <= 1:
        for t in indices:
            provider(t)
        return
    with ThreadPoolExecutor(max_workers=workers) as pool:
        list(pool.map(provider, indices))


@dataclass(frozen=True)
class Diagnostic:
    path: str
    message: str

    def __str__(self) -> str:
        return f"{self.path}: {self.message}"


def validate_providers(frames_dir: str | Path,
                       flow_dir: str | Path | None = None,
                       saliency_dir: str | Path | None = None,
                       embeddings_file: str | Path | None = None,
                       query_file: str | Path | None = None) -> list[Diagnostic]:
    """Check every provider file's format without running the pipeline."""
    diags: list[Diagnostic] = []
    try:
        frame_files = list_frame_files(frames_dir)
    except ProviderFailure as exc:
        return [Diagnostic(str(frames_dir), str(exc))]
    if len(frame_files) < 2:
        diags.append(Diagnostic(str(frames_dir), f"need >= 2 frames, found {len(frame_files)}"))
        return diags

    shape = None
    for path in frame_files:
        try:
            with Image.open(path) as img:
                arr = np.asarray(img.convert("RGB"))
            validate_frame(arr)
        except Exception as exc:
            diags.append(Diagnostic(str(path), f"unreadable frame: {exc}"))
            continue
        if shape is None:
            shape = arr.shape[:2]
        elif arr.shape[:2] != shape:
            diags.append(Diagnostic(str(path), f"frame shape {arr.shape[:2]} differs from {shape}"))
    n = len(frame_files)

    if flow_dir is not None:
        provider = DirectoryFlowProvider(flow_dir, expected_shape=shape)
        for t in range(n - 1):
            try:
                provider(t)
            except ProviderFailure as exc:
                diags.append(Diagnostic(str(Path(flow_dir) / flow_file_name(t)), str(exc)))

    if saliency_dir is not None:
        provider = DirectorySaliencyProvider(saliency_dir, expected_shape=shape)
        for t in range(n):
            try:
                provider(t)
            except ProviderFailure as exc:
                diags.append(Diagnostic(str(Path(saliency_dir) / saliency_file_name(t)), str(exc)))

    for label, path in (("embeddings", embeddings_file), ("query", query_file)):
        if path is None:
            continue
        try:
            vectors = load_embeddings(path)
        except FileNotFoundError:
            diags.append(Diagnostic(str(path), f"{label} file does not exist"))
            continue
        except (FlowgateError, ValueError) as exc:
            diags.append(Diagnostic(str(path), f"invalid {label} file: {exc}"))
            continue
        if label == "query" and vectors.shape[0] != 1:
            diags.append(Diagnostic(str(path), f"query must hold 1 record, found {vectors.shape[0]}"))
    return diags
