"""Per-pixel importance maps: input-gradient saliency, Grad-CAM, and
integrated gradients.

All three produce a non-negative (H, W) map matching the input image
grid. Gradients are taken with respect to the pre-sigmoid logit (the
standard choice; it avoids vanishing gradients near a saturated sigmoid).
Channel reduction is the largest absolute value across channels, both for
saliency and for the signed integrated-gradients attributions.
"""

from __future__ import annotations

import numpy as np

from .errors import ParseError
from .netpbm import write_pgm
from .nn import ConvNet, backward, bilinear_upsample, forward


def saliency_map(net: ConvNet, image: np.ndarray) -> np.ndarray:
    """max over channels of |d(logit)/d(pixel value)|."""
    _, cache = forward(net, image)
    grads = backward(net, cache)
    return np.abs(grads.input_grad[0]).max(axis=0)


def grad_cam(net: ConvNet, image: np.ndarray) -> np.ndarray:
    """ReLU of the gradient-weighted sum of last-conv feature maps,
    bilinearly upsampled to the input grid.

    Per-filter weights are the spatial mean of d(logit)/d(activation) on
    the last conv layer's post-activation map; non-negativity comes from
    the ReLU, not from clipping.
    """
    _, cache = forward(net, image)
    grads = backward(net, cache)
    last = len(net.config.blocks) - 1
    activation = cache.blocks[last].act[0]        # (F, h, w)
    d_activation = grads.layer_grads[last][0]
    weights = d_activation.mean(axis=(1, 2))
    coarse = np.maximum((weights[:, None, None] * activation).sum(axis=0), 0.0)
    return bilinear_upsample(coarse, (net.config.height, net.config.width))


def mean_reference_image(images) -> np.ndarray:
    """Pixel-wise mean over a stack of (C, H, W) images."""
    stack = np.asarray(images, dtype=float)
    if stack.ndim != 4:
        raise ValueError(f"expected a stack of (C, H, W) images, got shape {stack.shape}")
    return stack.mean(axis=0)


def integrated_attributions(
    net: ConvNet, image: np.ndarray, reference: np.ndarray, steps: int = 64
) -> np.ndarray:
    """Signed per-element attributions (C, H, W).

    Right-endpoint Riemann sum over the straight path from the reference
    to the image: (x - ref) * mean_k grad(ref + (k/steps) * (x - ref)),
    k = 1..steps. Sums to logit(x) - logit(ref) as steps grows
    (completeness).
    """
    if steps < 1:
        raise ValueError(f"steps must be >= 1, got {steps}")
    image = np.asarray(image, dtype=float)
    reference = np.asarray(reference, dtype=float)
    if reference.shape != image.shape:
        raise ValueError(
            f"reference shape {reference.shape} does not match image shape {image.shape}"
        )
    diff = image - reference
    total = np.zeros_like(image)
    for k in range(1, steps + 1):
        point = reference + (k / steps) * diff
        _, cache = forward(net, point)
        total += backward(net, cache).input_grad[0]
    return diff * (total / steps)


def integrated_gradients(
    net: ConvNet, image: np.ndarray, reference: np.ndarray, steps: int = 64
) -> np.ndarray:
    """Pixel importance from integrated gradients: max over channels of
    the absolute signed attribution."""
    return np.abs(integrated_attributions(net, image, reference, steps)).max(axis=0)


def normalize_importance(importance: np.ndarray) -> np.ndarray:
    """Scale a non-negative map so its maximum is 1; an all-zero map is
    returned unchanged. Pixel ranking is preserved."""
    importance = np.asarray(importance, dtype=float)
    if importance.size and importance.min() < 0:
        raise ValueError("importance maps must be non-negative")
    peak = importance.max() if importance.size else 0.0
    if peak == 0.0:
        return importance.copy()
    return importance / peak


# ---------------------------------------------------------------------------
# Importance map files: a lossless float32 sidecar ("XIM1 W H" header) that
# downstream math consumes, plus a 16-bit PGM quantization for viewing.

def write_importance(path, importance: np.ndarray) -> None:
    importance = np.asarray(importance)
    if importance.ndim != 2:
        raise ValueError(f"importance map must be 2-D, got shape {importance.shape}")
    h, w = importance.shape
    with open(path, "wb") as fh:
        fh.write(f"XIM1 {w} {h}\n".encode("ascii"))
        fh.write(importance.astype("<f4").tobytes())


def read_importance(path) -> np.ndarray:
    with open(path, "rb") as fh:
        data = fh.read()
    nl = data.find(b"\n")
    if nl < 0:
        raise ParseError("missing header line", path=path, offset=0)
    fields = data[:nl].split()
    if len(fields) != 3 or fields[0] != b"XIM1":
        raise ParseError(f"bad header {data[:nl]!r}", path=path, offset=0)
    try:
        w, h = int(fields[1]), int(fields[2])
    except ValueError:
        raise ParseError(f"bad dimensions in header {data[:nl]!r}", path=path, offset=5) from None
    expected = 4 * w * h
    raster = data[nl + 1 :]
    if len(raster) != expected:
        raise ParseError(
            f"raster has {len(raster)} bytes, expected {expected}", path=path, offset=nl + 1
        )
    return np.frombuffer(raster, dtype="<f4").reshape(h, w).astype(float)


def write_importance_pgm(path, importance: np.ndarray) -> None:
    """Min-max quantization to 16-bit grayscale, for visualization only."""
    importance = np.asarray(importance, dtype=float)
    lo, hi = importance.min(), importance.max()
    if hi > lo:
        scaled = np.round((importance - lo) / (hi - lo) * 65535.0)
    else:
        scaled = np.zeros_like(importance)
    write_pgm(path, scaled.astype(np.uint16))
