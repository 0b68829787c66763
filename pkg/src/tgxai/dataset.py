"""Manifests, sample loading, and stratified splitting.

A manifest is a CSV with header ``path,label,mask_path``; paths are
relative to the manifest's own directory and mask_path may be empty.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass

import numpy as np

from .errors import DataError, ParseError
from .netpbm import read_pbm, read_pgm

MANIFEST_HEADER = ["path", "label", "mask_path"]


@dataclass(frozen=True)
class ManifestRow:
    path: str             # image path, relative to the manifest directory
    label: int
    mask_path: str | None

    @property
    def sample_id(self) -> str:
        return os.path.splitext(os.path.basename(self.path))[0]


def read_manifest(path) -> tuple[list[ManifestRow], str]:
    """Returns (rows, base_dir); resolve row paths against base_dir."""
    base = os.path.dirname(os.path.abspath(os.fspath(path)))
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("manifest is empty", path=path, offset=0) from None
        if header != MANIFEST_HEADER:
            raise ParseError(
                f"manifest header must be {','.join(MANIFEST_HEADER)}, got {','.join(header)}",
                path=path,
            )
        rows = []
        for lineno, record in enumerate(reader, start=2):
            if len(record) != 3:
                raise ParseError(f"line {lineno}: expected 3 fields, got {len(record)}", path=path)
            image_path, label, mask_path = record
            if not image_path:
                raise ParseError(f"line {lineno}: empty image path", path=path)
            if label not in ("0", "1"):
                raise ParseError(f"line {lineno}: label must be 0 or 1, got {label!r}", path=path)
            rows.append(ManifestRow(path=image_path, label=int(label), mask_path=mask_path or None))
    return rows, base


def write_manifest(path, rows: list[ManifestRow]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(MANIFEST_HEADER)
        for row in rows:
            writer.writerow([row.path, row.label, row.mask_path or ""])


def load_image(path) -> np.ndarray:
    """PGM as a (1, H, W) float array scaled to [0, 1]."""
    pixels = read_pgm(path)
    maxval = 255.0 if pixels.dtype == np.uint8 else 65535.0
    return (pixels.astype(float) / maxval)[None]


def load_samples(rows: list[ManifestRow], base: str):
    """Eagerly load a manifest: images (N, 1, H, W), labels (N,), masks
    (boolean array or None per row)."""
    images, labels, masks = [], [], []
    for row in rows:
        images.append(load_image(os.path.join(base, row.path)))
        labels.append(row.label)
        masks.append(read_pbm(os.path.join(base, row.mask_path)) if row.mask_path else None)
    if not images:
        raise DataError("manifest lists no samples")
    shapes = {im.shape for im in images}
    if len(shapes) > 1:
        raise DataError(f"images have mixed shapes: {sorted(shapes)}")
    return np.stack(images), np.asarray(labels), masks


def _allocate(n: int, ratios) -> list[int]:
    # cumulative-floor allocation: sums to n, each part within 1 of n*ratio
    bounds = np.floor(np.cumsum(ratios) * n + 1e-9).astype(int)
    prev = 0
    counts = []
    for b in bounds:
        counts.append(int(b - prev))
        prev = b
    return counts


def split(
    rows: list[ManifestRow],
    ratios: tuple[float, float, float] = (0.6, 0.2, 0.2),
    seed: int = 0,
) -> tuple[list[ManifestRow], ...]:
    """Stratified, seeded split into len(ratios) disjoint parts.

    Per class, each part's size is within one sample of its exact share.
    """
    ratios = tuple(float(r) for r in ratios)
    if any(r < 0 for r in ratios) or abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"ratios must be non-negative and sum to 1, got {ratios}")
    active = sum(1 for r in ratios if r > 0)
    if len(rows) < active:
        raise ValueError(f"cannot split {len(rows)} samples into {active} non-empty parts")

    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    parts: list[list[ManifestRow]] = [[] for _ in ratios]
    for label in (0, 1):
        group = [r for r in rows if r.label == label]
        if not group:
            continue
        order = rng.permutation(len(group))
        counts = _allocate(len(group), ratios)
        start = 0
        for part, count in zip(parts, counts):
            part.extend(group[i] for i in order[start : start + count])
            start += count
    return tuple(parts)
