"""Gait sequences on disk: manifest, directory layout, lazy frame decoding.

Layout (CASIA-B style)::

    root/
      manifest.txt              # "<subject> <M|F>" per line, '#' comments
      <subject>/<cond>-<seq>/<view>/<frame>.png

``cond`` is ``nm`` (normal), ``bg`` (bag) or ``cl`` (coat); ``view`` is the
angle in degrees, e.g. ``090``. Frame files may be PNG or PGM; the frame
number is the last run of digits in the file stem.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import CorruptImage, FrameOrderError, MissingManifest, UnknownGender
from .silhouette import from_grayscale

CONDITIONS = {"nm": "normal", "bg": "bag", "cl": "coat"}
CONDITION_CODES = {v: k for k, v in CONDITIONS.items()}
MANIFEST_NAMES = ("manifest.txt", "manifest.tsv", "manifest.csv")
FRAME_SUFFIXES = {".png", ".pgm"}

_GENDER = {"m": 1, "male": 1, "1": 1, "+1": 1, "f": -1, "female": -1, "-1": -1}
_SEQ_DIR = re.compile(r"^(nm|bg|cl)-(\d+)$")
_DIGITS = re.compile(r"(\d+)")


@dataclass(frozen=True)
class GaitSequence:
    """One walking sequence of one subject at one view.

    ``loader`` returns the raw frames as a list of boolean masks; an entry of
    ``None`` stands for a frame with no detected person.
    """

    subject: str
    gender: int  # +1 male, -1 female
    condition: str  # normal | bag | coat
    view: int
    index: int
    loader: Callable[[], list] = field(compare=False, repr=False)

    def frames(self) -> list:
        return self.loader()

    @property
    def key(self) -> tuple:
        return (self.subject, self.condition, self.index, self.view)


def parse_gender(token: str) -> int:
    try:
        return _GENDER[token.strip().lower()]
    except KeyError:
        raise UnknownGender(f"unrecognised gender {token!r}") from None


def read_manifest(path) -> dict:
    genders = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = re.split(r"[\s,]+", line)
            if len(parts) < 2:
                raise UnknownGender(f"{path}:{lineno}: expected '<subject> <gender>'")
            if parts[0].lower() == "subject":
                continue
            genders[parts[0]] = parse_gender(parts[1])
    return genders


def find_manifest(root) -> Path:
    root = Path(root)
    for name in MANIFEST_NAMES:
        if (root / name).is_file():
            return root / name
    raise MissingManifest(f"no manifest in {root} (looked for {', '.join(MANIFEST_NAMES)})")


def load_frame(path) -> np.ndarray:
    from PIL import Image, UnidentifiedImageError

    try:
        with Image.open(path) as im:
            return from_grayscale(np.asarray(im.convert("L")))
    except (OSError, UnidentifiedImageError, ValueError) as exc:
        raise CorruptImage(f"{path}: {exc}") from exc


def save_frame(mask, path):
    from PIL import Image

    Image.fromarray(np.asarray(mask, dtype=np.uint8) * 255, mode="L").save(path)


def frame_files(directory) -> list:
    """Frame paths in lexicographic order; frame numbers must strictly increase."""
    directory = Path(directory)
    files = sorted(p for p in directory.iterdir() if p.suffix.lower() in FRAME_SUFFIXES)
    last = None
    for p in files:
        nums = _DIGITS.findall(p.stem)
        if not nums:
            raise FrameOrderError(f"{p}: no frame number in file name")
        n = int(nums[-1])
        if last is not None and n <= last:
            raise FrameOrderError(f"{p}: frame number {n} out of order (previous {last})")
        last = n
    return files


def _file_loader(paths):
    def load():
        return [load_frame(p) for p in paths]

    return load


def ingest(root, manifest=None) -> list:
    """Enumerate every sequence under ``root`` in lexicographic order.

    Frames are decoded lazily by :meth:`GaitSequence.frames`.
    """
    root = Path(root)
    if not root.exists():
        raise FileNotFoundError(root)
    subjects = sorted(p for p in root.iterdir() if p.is_dir())
    if not subjects:
        return []
    genders = read_manifest(manifest if manifest is not None else find_manifest(root))
    out = []
    for subj in subjects:
        if subj.name not in genders:
            raise UnknownGender(f"subject {subj.name} is not in the manifest")
        for seq_dir in sorted(p for p in subj.iterdir() if p.is_dir()):
            m = _SEQ_DIR.match(seq_dir.name)
            if not m:
                continue
            for view_dir in sorted(p for p in seq_dir.iterdir() if p.is_dir()):
                if not view_dir.name.isdigit():
                    continue
                paths = frame_files(view_dir)
                out.append(GaitSequence(
                    subject=subj.name,
                    gender=genders[subj.name],
                    condition=CONDITIONS[m.group(1)],
                    view=int(view_dir.name),
                    index=int(m.group(2)),
                    loader=_file_loader(tuple(paths)),
                ))
    return out


def export(sequences, root) -> Path:
    """Write sequences to ``root`` in the layout :func:`ingest` reads.

    Missing detections are written as all-black frames.
    """
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    genders = {}
    for seq in sequences:
        genders[seq.subject] = seq.gender
        d = root / seq.subject / f"{CONDITION_CODES[seq.condition]}-{seq.index:02d}" / f"{seq.view:03d}"
        d.mkdir(parents=True, exist_ok=True)
        frames = seq.frames()
        shape = next((f.shape for f in frames if f is not None), (1, 1))
        for t, f in enumerate(frames, 1):
            save_frame(np.zeros(shape, bool) if f is None else f, d / f"{t:03d}.png")
    with open(root / "manifest.txt", "w") as fh:
        fh.write("# subject gender\n")
        for s in sorted(genders):
            fh.write(f"{s} {'M' if genders[s] > 0 else 'F'}\n")
    return root


def group_by(sequences, *attrs) -> dict:
    out = {}
    for s in sequences:
        out.setdefault(tuple(getattr(s, a) for a in attrs) if len(attrs) > 1 else getattr(s, attrs[0]), []).append(s)
    return out

