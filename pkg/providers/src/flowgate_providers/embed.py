"""Image/text embedding backends.

`hash` is a deterministic seeded-projection embedder for tests and plumbing;
`siglip` loads a real dual encoder through transformers (local path or model
id). All backends return unit-norm float32 vectors.
"""

import hashlib

import numpy as np
from PIL import Image


def _unit(v: np.ndarray) -> np.ndarray:
    v = v.astype(np.float32)
    return v / np.linalg.norm(v)


class HashEmbedder:
    """Fixed random projection of a thumbnail; text hashes to a seeded
    direction. No semantics, full determinism."""

    name = "hash-projection"
    _THUMB = 16

    def __init__(self, dim: int = 64, seed: int = 0):
        self.dim = dim
        rng = np.random.default_rng(seed)
        self._projection = rng.standard_normal((self._THUMB * self._THUMB * 3, dim))

    def embed_image(self, frame: np.ndarray) -> np.ndarray:
        img = Image.fromarray(frame).resize((self._THUMB, self._THUMB),
                                            Image.BILINEAR)
        x = np.asarray(img, dtype=np.float64).ravel() / 255.0
        return _unit(x @ self._projection)

    def embed_text(self, text: str) -> np.ndarray:
        digest = hashlib.sha256(text.encode("utf-8")).digest()
        rng = np.random.default_rng(int.from_bytes(digest[:8], "little"))
        return _unit(rng.standard_normal(self.dim))


class SiglipEmbedder:
    """Dual image/text encoder via transformers."""

    name = "siglip"

    def __init__(self, model: str = "google/siglip-base-patch16-224"):
        import torch
        from transformers import AutoModel, AutoProcessor

        self._torch = torch
        self.model_id = model
        self.processor = AutoProcessor.from_pretrained(model)
        self.model = AutoModel.from_pretrained(model)
        self.model.eval()

    def embed_image(self, frame: np.ndarray) -> np.ndarray:
        torch = self._torch
        inputs = self.processor(images=Image.fromarray(frame), return_tensors="pt")
        with torch.no_grad():
            feats = self.model.get_image_features(**inputs)
        return _unit(feats[0].numpy())

    def embed_text(self, text: str) -> np.ndarray:
        torch = self._torch
        inputs = self.processor(text=[text], padding="max_length",
                                return_tensors="pt")
        with torch.no_grad():
            feats = self.model.get_text_features(**inputs)
        return _unit(feats[0].numpy())


def make_backend(name: str, dim: int, seed: int, model: str | None):
    if name == "hash":
        return HashEmbedder(dim=dim, seed=seed)
    if name == "siglip":
        return SiglipEmbedder(model=model or "google/siglip-base-patch16-224")
    raise ValueError(f"unknown embedding backend {name!r}")
