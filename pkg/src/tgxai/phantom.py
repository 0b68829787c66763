"""Synthetic chest phantoms with ground-truth lesion masks.

Each phantom is a square grayscale image: bright body background, two
dark elliptical lung fields, and (in positive samples) one bright
crescent lesion hugging a lung boundary from the inside. The crescent
models disease confined to the band along the pleural boundary, which is
what makes a single canonical band annotation a valid occurrence prior:
lesions drawn at the lateral or apical boundary fall inside the dilated
canonical template by construction. A configurable fraction of lesions
is instead placed on the medial boundary, outside the canonical band, to
reproduce the failure mode where guidance removes a true finding.

Generation is deterministic: sample i consumes only substream i of the
corpus seed, so corpora are byte-identical across runs and samples could
be produced in parallel.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .dataset import ManifestRow
from .errors import DataError
from .netpbm import write_pbm, write_pgm

# Gray levels before noise.
BACKGROUND_LEVEL = 0.45
LUNG_LEVEL = 0.12
LESION_LEVEL = 0.90

# Canonical pleural band (the stand-in for a radiologist's delineation of
# the pleural space on one side): angular span in degrees and normalized
# radial thickness, measured on the nominal left lung.
BAND_PHI_RANGE = (-70.0, 135.0)
BAND_THICKNESS = 0.40

# Lesion site sampling ranges (degrees of the crescent's center angle).
LATERAL_CENTER_RANGE = (-30.0, 35.0)
APEX_CENTER_RANGE = (60.0, 100.0)
MEDIAL_CENTER_RANGE = (155.0, 205.0)


@dataclass(frozen=True)
class PhantomSpec:
    n_samples: int
    seed: int
    side: int = 64
    positive_rate: float = 0.25
    noise: float = 0.05
    # lung ellipse geometry, as fractions of the grid
    lung_center_x: float = 0.32
    lung_center_y: float = 0.57
    lung_semi_x: float = 0.165
    lung_semi_y: float = 0.30
    # crescent size: normalized radial thickness and angular width (degrees)
    lesion_thickness: tuple[float, float] = (0.18, 0.32)
    lesion_arc: tuple[float, float] = (30.0, 70.0)
    # site distribution over (left lateral, right lateral, apex)
    site_weights: tuple[float, float, float] = (0.35, 0.35, 0.30)
    off_template_rate: float = 0.05

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValueError(f"n_samples must be >= 1, got {self.n_samples}")
        if self.side < 32:
            raise ValueError(f"side must be >= 32, got {self.side}")
        if not 0 <= self.positive_rate <= 1:
            raise ValueError(f"positive_rate must be in [0, 1], got {self.positive_rate}")
        if not 0 <= self.off_template_rate <= 1:
            raise ValueError(f"off_template_rate must be in [0, 1], got {self.off_template_rate}")
        if self.noise < 0:
            raise ValueError(f"noise must be >= 0, got {self.noise}")
        lo, hi = self.lesion_thickness
        if not 0 < lo <= hi:
            raise ValueError(f"bad lesion_thickness range {self.lesion_thickness}")
        if hi > BAND_THICKNESS:
            raise ValueError(
                f"lesion thickness {hi} exceeds the pleural band thickness "
                f"{BAND_THICKNESS}; such lesions could not stay boundary-adjacent"
            )
        alo, ahi = self.lesion_arc
        if not 0 < alo <= ahi <= 180:
            raise ValueError(f"bad lesion_arc range {self.lesion_arc}")
        if min(self.site_weights) < 0 or sum(self.site_weights) <= 0:
            raise ValueError(f"bad site_weights {self.site_weights}")

    def lung_params(self, side_sign: int) -> tuple[float, float, float, float]:
        """(cx, cy, a, b) in pixels for the left (-1) or right (+1) lung."""
        n = self.side - 1
        cx = self.lung_center_x * n if side_sign < 0 else (1 - self.lung_center_x) * n
        return cx, self.lung_center_y * n, self.lung_semi_x * self.side, self.lung_semi_y * self.side


def _grid(side):
    yy, xx = np.mgrid[0:side, 0:side].astype(float)
    return yy, xx


def _lung_frame(spec, side_sign, jitter=(0.0, 0.0, 1.0)):
    """Normalized radius and boundary angle (degrees) of every pixel.

    The angle is measured from the lung's outward horizontal: 0 points
    away from the midline, 90 points to the apex, +-180 to the midline.
    """
    cx, cy, a, b = spec.lung_params(side_sign)
    dx_px, dy_px, scale = jitter
    cx, cy = cx + dx_px, cy + dy_px
    a, b = a * scale, b * scale
    yy, xx = _grid(spec.side)
    out = side_sign * (xx - cx) / a
    up = (cy - yy) / b
    rho = np.sqrt(out**2 + up**2)
    phi = np.degrees(np.arctan2(up, out))
    return rho, phi


def _in_sector(phi, center_deg, width_deg):
    delta = np.mod(phi - center_deg + 180.0, 360.0) - 180.0
    return np.abs(delta) <= width_deg / 2


def canonical_annotation(spec: PhantomSpec) -> np.ndarray:
    """Pleural band of the nominal left lung: the canonical delineation
    from which templates are built."""
    rho, phi = _lung_frame(spec, -1)
    lo, hi = BAND_PHI_RANGE
    band = (rho <= 1.0) & (rho >= 1.0 - BAND_THICKNESS) & (phi >= lo) & (phi <= hi)
    if not band.any():
        raise DataError("canonical band rasterized to an empty mask; geometry too small")
    return band


def _sample_lesion(spec: PhantomSpec, rng: np.random.Generator, jitters) -> np.ndarray:
    """Draw one crescent lesion mask; retries if it rasterizes empty."""
    for _ in range(16):
        if rng.uniform() < spec.off_template_rate:
            side_sign = -1 if rng.uniform() < 0.5 else 1
            center = rng.uniform(*MEDIAL_CENTER_RANGE)
        else:
            w = np.asarray(spec.site_weights, dtype=float)
            site = rng.choice(3, p=w / w.sum())
            if site == 0:
                side_sign, center = -1, rng.uniform(*LATERAL_CENTER_RANGE)
            elif site == 1:
                side_sign, center = 1, rng.uniform(*LATERAL_CENTER_RANGE)
            else:
                side_sign = -1 if rng.uniform() < 0.5 else 1
                center = rng.uniform(*APEX_CENTER_RANGE)
        thickness = rng.uniform(*spec.lesion_thickness)
        arc = rng.uniform(*spec.lesion_arc)
        jitter = jitters[0 if side_sign < 0 else 1]
        rho, phi = _lung_frame(spec, side_sign, jitter)
        lesion = (rho <= 1.0) & (rho >= 1.0 - thickness) & _in_sector(phi, center, arc)
        if lesion.any():
            return lesion
    raise DataError("failed to rasterize a nonempty lesion after 16 draws; geometry too small")


def _render(spec: PhantomSpec, rng: np.random.Generator):
    """One phantom: (uint8 image, lesion mask or None)."""
    # Jitter both lungs independently: position by up to ~2% of the grid,
    # size by +-6%. The dilated template absorbs these displacements.
    jitters = []
    for _ in range(2):
        jitters.append(
            (
                rng.uniform(-0.023, 0.023) * spec.side,
                rng.uniform(-0.023, 0.023) * spec.side,
                rng.uniform(0.94, 1.06),
            )
        )
    positive = rng.uniform() < spec.positive_rate

    image = np.full((spec.side, spec.side), BACKGROUND_LEVEL)
    for side_sign, jitter in zip((-1, 1), jitters):
        rho, _ = _lung_frame(spec, side_sign, jitter)
        image[rho < 1.0] = LUNG_LEVEL

    lesion = None
    if positive:
        lesion = _sample_lesion(spec, rng, jitters)
        image[lesion] = LESION_LEVEL

    if spec.noise > 0:
        image = image + rng.normal(0.0, spec.noise, image.shape)
    quantized = np.round(np.clip(image, 0.0, 1.0) * 255.0).astype(np.uint8)
    return quantized, lesion


def generate_phantoms(spec: PhantomSpec, out_dir) -> list[ManifestRow]:
    """Write images/, masks/, and canonical.pbm under out_dir.

    Returns manifest rows with paths relative to out_dir. Masks exist
    exactly for the positive samples.
    """
    out_dir = os.fspath(out_dir)
    images_dir = os.path.join(out_dir, "images")
    masks_dir = os.path.join(out_dir, "masks")
    os.makedirs(images_dir, exist_ok=True)
    os.makedirs(masks_dir, exist_ok=True)

    rows = []
    streams = np.random.SeedSequence(spec.seed).spawn(spec.n_samples)
    for i, stream in enumerate(streams):
        rng = np.random.Generator(np.random.PCG64(stream))
        image, lesion = _render(spec, rng)
        name = f"sample_{i:05d}"
        write_pgm(os.path.join(images_dir, name + ".pgm"), image)
        mask_rel = ""
        if lesion is not None:
            mask_rel = f"masks/{name}.pbm"
            write_pbm(os.path.join(out_dir, mask_rel), lesion)
        rows.append(
            ManifestRow(
                path=f"images/{name}.pgm",
                label=int(lesion is not None),
                mask_path=mask_rel or None,
            )
        )
    write_pbm(os.path.join(out_dir, "canonical.pbm"), canonical_annotation(spec))
    return rows
