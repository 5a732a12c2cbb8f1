"""Salient-region backends.

`spectral` is the classic spectral-residual detector (numpy FFT, no model);
`u2net` runs a TorchScript export of a salient-object network from a local
checkpoint. Outputs are [0, 1] maps at the frame's native resolution.
"""

import numpy as np
from PIL import Image
from scipy import ndimage

from .common import to_gray


class SpectralResidualSaliency:
    name = "spectral-residual"

    def __init__(self, blur_sigma: float = 2.0):
        self.blur_sigma = blur_sigma

    def __call__(self, frame: np.ndarray) -> np.ndarray:
        g = to_gray(frame) / 255.0
        spectrum = np.fft.fft2(g)
        amplitude = np.abs(spectrum)
        phase = np.angle(spectrum)
        log_amp = np.log(amplitude + 1e-12)
        residual = log_amp - ndimage.uniform_filter(log_amp, 3)
        resid_amp = np.exp(residual)
        resid_amp[0, 0] = 0.0  # brightness carries no saliency
        sal = np.abs(np.fft.ifft2(resid_amp * np.exp(1j * phase))) ** 2
        sal = ndimage.gaussian_filter(sal, self.blur_sigma)
        peak = sal.max()
        return sal / peak if peak > 0 else sal


class U2NetSaliency:
    """TorchScript salient-object model; expects a (1, 3, S, S) input in
    [0, 1] and returns a probability map (first output if several)."""

    name = "u2net"

    def __init__(self, checkpoint: str, input_size: int = 320):
        import torch

        self._torch = torch
        self.input_size = input_size
        self.model = torch.jit.load(checkpoint, map_location="cpu")
        self.model.eval()

    def __call__(self, frame: np.ndarray) -> np.ndarray:
        torch = self._torch
        h, w = frame.shape[:2]
        img = Image.fromarray(frame).resize((self.input_size, self.input_size),
                                            Image.BILINEAR)
        x = torch.from_numpy(np.asarray(img).copy()).permute(2, 0, 1).float()
        x = (x / 255.0)[None]
        with torch.no_grad():
            out = self.model(x)
        if isinstance(out, (tuple, list)):
            out = out[0]
        sal = out.squeeze().numpy()
        lo, hi = sal.min(), sal.max()
        if hi > lo:
            sal = (sal - lo) / (hi - lo)
        resized = Image.fromarray((sal * 255).astype(np.uint8)).resize(
            (w, h), Image.BILINEAR)
        return np.asarray(resized, dtype=np.float64) / 255.0


def make_backend(name: str, checkpoint: str | None):
    if name == "spectral":
        return SpectralResidualSaliency()
    if name == "u2net":
        if not checkpoint:
            raise ValueError("u2net backend needs --checkpoint")
        return U2NetSaliency(checkpoint)
    raise ValueError(f"unknown saliency backend {name!r}")
