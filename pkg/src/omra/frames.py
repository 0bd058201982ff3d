"""Planar RGB frames and sequences: padding, disk I/O, and distortion."""
from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np
from PIL import Image

from .errors import DataError

PAD_MULTIPLE = 64


def _ceil_multiple(v: int, m: int) -> int:
    return -(-v // m) * m


@dataclass(eq=False)
class Frame:
    """An 8-bit RGB frame stored as three planes at padded dimensions.

    The padded region (beyond ``width`` x ``height``) is edge-replicated so
    that block-based operations never see artificial borders.
    """

    width: int
    height: int
    planes: np.ndarray  # (3, padded_height, padded_width) uint8

    @property
    def padded_width(self) -> int:
        return self.planes.shape[2]

    @property
    def padded_height(self) -> int:
        return self.planes.shape[1]

    @classmethod
    def from_rgb(cls, rgb: np.ndarray) -> "Frame":
        """Build a frame from an (h, w, 3) uint8 array, padding to multiples of 64."""
        if rgb.ndim != 3 or rgb.shape[2] != 3:
            raise DataError(f"expected (h, w, 3) array, got shape {rgb.shape}")
        h, w = rgb.shape[:2]
        ph, pw = _ceil_multiple(h, PAD_MULTIPLE), _ceil_multiple(w, PAD_MULTIPLE)
        planes = np.ascontiguousarray(rgb.astype(np.uint8).transpose(2, 0, 1))
        if (ph, pw) != (h, w):
            planes = np.pad(planes, ((0, 0), (0, ph - h), (0, pw - w)), mode="edge")
        planes.flags.writeable = False
        return cls(width=w, height=h, planes=planes)

    def to_rgb(self) -> np.ndarray:
        """Return the true (unpadded) image region as an (h, w, 3) uint8 array."""
        return self.planes[:, : self.height, : self.width].transpose(1, 2, 0).copy()


def crop(frame: Frame) -> Frame:
    """Strip the padding region and re-pad canonically from the true image."""
    return Frame.from_rgb(frame.to_rgb())


def mse(a: Frame, b: Frame) -> float:
    """Mean squared error over the true image region (padding excluded)."""
    if (a.width, a.height) != (b.width, b.height):
        raise DataError(
            f"dimension mismatch: {a.width}x{a.height} vs {b.width}x{b.height}"
        )
    da = a.planes[:, : a.height, : a.width].astype(np.float64)
    db = b.planes[:, : b.height, : b.width].astype(np.float64)
    return float(np.mean((da - db) ** 2))


@dataclass(eq=False)
class Sequence:
    """An ordered list of equally sized frames in display order."""

    frames: list[Frame] = field(default_factory=list)
    frame_rate: float = 30.0

    def __post_init__(self):
        if self.frames:
            w, h = self.frames[0].width, self.frames[0].height
            for i, f in enumerate(self.frames):
                if (f.width, f.height) != (w, h):
                    raise DataError(f"frame {i} has mismatched dimensions")

    def __len__(self) -> int:
        return len(self.frames)

    @property
    def width(self) -> int:
        return self.frames[0].width

    @property
    def height(self) -> int:
        return self.frames[0].height


def load_sequence(path: str, format: str, width: int, height: int,
                  count: int) -> Sequence:
    """Load a sequence from disk.

    ``raw_rgb24``: one file of concatenated frames, 3 interleaved bytes R,G,B
    per pixel, row-major.  ``png_dir``: a directory of frame_%05d.png files.
    """
    if format == "raw_rgb24":
        frame_bytes = 3 * width * height
        try:
            data = open(path, "rb").read()
        except OSError as e:
            raise DataError(f"cannot read raw file {path}: {e}") from e
        if len(data) < frame_bytes * count:
            raise DataError(
                f"raw file truncated at frame {len(data) // frame_bytes}: "
                f"need {frame_bytes * count} bytes, have {len(data)}"
            )
        frames = []
        for i in range(count):
            chunk = np.frombuffer(
                data, np.uint8, frame_bytes, offset=i * frame_bytes
            )
            frames.append(Frame.from_rgb(chunk.reshape(height, width, 3)))
        return Sequence(frames)
    elif format == "png_dir":
        frames = []
        for i in range(count):
            name = os.path.join(path, f"frame_{i:05d}.png")
            if not os.path.exists(name):
                raise DataError(f"missing frame {i}: {name}")
            img = np.asarray(Image.open(name).convert("RGB"))
            if img.shape[:2] != (height, width):
                raise DataError(
                    f"frame {i} has size {img.shape[1]}x{img.shape[0]}, "
                    f"expected {width}x{height}"
                )
            frames.append(Frame.from_rgb(img))
        return Sequence(frames)
    raise DataError(f"unknown sequence format: {format}")


def save_sequence(seq: Sequence, path: str, format: str) -> None:
    """Write a sequence to disk in either supported format."""
    if format == "raw_rgb24":
        with open(path, "wb") as fh:
            for f in seq.frames:
                fh.write(f.to_rgb().tobytes())
    elif format == "png_dir":
        os.makedirs(path, exist_ok=True)
        for i, f in enumerate(seq.frames):
            Image.fromarray(f.to_rgb()).save(
                os.path.join(path, f"frame_{i:05d}.png")
            )
    else:
        raise DataError(f"unknown sequence format: {format}")
