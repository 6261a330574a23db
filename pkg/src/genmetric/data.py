"""Labeled feature datasets: in-memory type, on-disk format, and the
replacement / augmentation / split constructions used by the scoring
procedures.

On-disk layout (one directory per dataset):

    manifest.json   -- version, n, d, k, feature_file, label_file,
                       byte_order ("little"), checksum (16 hex chars)
    features.f32le  -- n*d float32, little-endian, row-major
    labels.u32le    -- n uint32, little-endian

The checksum is 64-bit FNV-1a over the feature bytes followed by the
label bytes. Everything round-trips bit-exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .validation import as_rng, check_labels

MANIFEST_NAME = "manifest.json"
FEATURE_FILE = "features.f32le"
LABEL_FILE = "labels.u32le"
FORMAT_VERSION = 1

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_U64 = 0xFFFFFFFFFFFFFFFF


class DatasetFormatError(ValueError):
    """Raised when an on-disk dataset is missing, malformed, or corrupt."""


def fnv1a64(data: bytes, h: int = _FNV_OFFSET) -> int:
    """64-bit FNV-1a hash; `h` allows chaining over multiple buffers."""
    for b in data:
        h = ((h ^ b) * _FNV_PRIME) & _U64
    return h


@dataclass(frozen=True)
class LabeledDataset:
    """N feature vectors of dimension D with integer labels in [0, K).

    Features are stored float32 so that save/load round-trips are
    bit-exact. Instances are immutable; construction validates all
    invariants (finite features, labels in range, N >= 1, D >= 1, K >= 2).
    """

    features: np.ndarray
    labels: np.ndarray
    num_classes: int
    name: str = "dataset"

    def __post_init__(self):
        feats = np.array(self.features, dtype=np.float32, order="C", copy=True)
        if feats.ndim != 2:
            raise ValueError(f"features must be 2-D, got shape {feats.shape}")
        n, d = feats.shape
        if n < 1 or d < 1:
            raise ValueError(f"need N >= 1 and D >= 1, got shape {feats.shape}")
        if not np.all(np.isfinite(feats)):
            raise ValueError("features contain non-finite entries (overflow on float32 cast?)")
        if self.num_classes < 2:
            raise ValueError(f"num_classes must be >= 2, got {self.num_classes}")
        if self.num_classes > 0xFFFFFFFF:
            raise ValueError("num_classes exceeds the uint32 on-disk label range")
        labels = check_labels(self.labels, n, self.num_classes, name="labels")
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "labels", labels)
        self.features.setflags(write=False)
        self.labels.setflags(write=False)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    def with_name(self, name: str) -> "LabeledDataset":
        return LabeledDataset(self.features, self.labels, self.num_classes, name)

    def subset(self, indices, name: str | None = None) -> "LabeledDataset":
        idx = np.asarray(indices, dtype=np.int64)
        return LabeledDataset(
            self.features[idx], self.labels[idx], self.num_classes,
            name if name is not None else self.name,
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, LabeledDataset):
            return NotImplemented
        return (
            self.num_classes == other.num_classes
            and self.features.shape == other.features.shape
            and np.array_equal(
                self.features.view(np.uint32), other.features.view(np.uint32)
            )
            and np.array_equal(self.labels, other.labels)
        )


def class_histogram(ds: LabeledDataset) -> np.ndarray:
    """Per-class example counts; entries sum to N, zeros allowed."""
    return np.bincount(ds.labels, minlength=ds.num_classes).astype(np.int64)


def save_dataset(ds: LabeledDataset, directory) -> None:
    """Write manifest + raw payload files; round-trips via load_dataset."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    feat_bytes = ds.features.astype("<f4", copy=False).tobytes()
    label_bytes = ds.labels.astype("<u4").tobytes()
    checksum = fnv1a64(label_bytes, fnv1a64(feat_bytes))
    manifest = {
        "version": FORMAT_VERSION,
        "n": ds.n,
        "d": ds.dim,
        "k": ds.num_classes,
        "name": ds.name,
        "feature_file": FEATURE_FILE,
        "label_file": LABEL_FILE,
        "byte_order": "little",
        "checksum": f"{checksum:016x}",
    }
    (directory / FEATURE_FILE).write_bytes(feat_bytes)
    (directory / LABEL_FILE).write_bytes(label_bytes)
    (directory / MANIFEST_NAME).write_text(json.dumps(manifest, indent=2) + "\n")


def load_dataset(directory) -> LabeledDataset:
    """Read a dataset directory, verifying lengths, checksum, and invariants."""
    directory = Path(directory)
    manifest_path = directory / MANIFEST_NAME
    if not manifest_path.is_file():
        raise DatasetFormatError(f"missing manifest: {manifest_path}")
    try:
        manifest = json.loads(manifest_path.read_text())
    except json.JSONDecodeError as exc:
        raise DatasetFormatError(f"unreadable manifest: {exc}") from exc
    for key in ("version", "n", "d", "k", "feature_file", "label_file", "byte_order", "checksum"):
        if key not in manifest:
            raise DatasetFormatError(f"manifest missing key {key!r}")
    if manifest["version"] != FORMAT_VERSION:
        raise DatasetFormatError(f"unsupported format version {manifest['version']}")
    if manifest["byte_order"] != "little":
        raise DatasetFormatError(f"unsupported byte order {manifest['byte_order']!r}")
    n, d, k = int(manifest["n"]), int(manifest["d"]), int(manifest["k"])

    feat_path = directory / manifest["feature_file"]
    label_path = directory / manifest["label_file"]
    for p in (feat_path, label_path):
        if not p.is_file():
            raise DatasetFormatError(f"missing payload file: {p}")
    feat_bytes = feat_path.read_bytes()
    label_bytes = label_path.read_bytes()
    if len(feat_bytes) != n * d * 4:
        raise DatasetFormatError(
            f"feature file is {len(feat_bytes)} bytes, expected {n * d * 4} (n={n}, d={d})"
        )
    if len(label_bytes) != n * 4:
        raise DatasetFormatError(
            f"label file is {len(label_bytes)} bytes, expected {n * 4} (n={n})"
        )
    checksum = fnv1a64(label_bytes, fnv1a64(feat_bytes))
    if f"{checksum:016x}" != manifest["checksum"]:
        raise DatasetFormatError(
            f"checksum mismatch: payload {checksum:016x} vs manifest {manifest['checksum']}"
        )

    features = np.frombuffer(feat_bytes, dtype="<f4").reshape(n, d)
    labels = np.frombuffer(label_bytes, dtype="<u4").astype(np.int64)
    try:
        return LabeledDataset(features, labels, k, name=manifest.get("name", directory.name))
    except ValueError as exc:
        raise DatasetFormatError(f"invalid dataset payload: {exc}") from exc


def build_replacement_set(gen, template: LabeledDataset, rng) -> LabeledDataset:
    """Replace every example of `template` with a generator sample of the
    same class. Labels (and hence the class histogram) are preserved
    exactly; features are independent conditional draws, deterministic
    given the seed."""
    if gen.num_classes < template.num_classes:
        raise ValueError(
            f"generator covers {gen.num_classes} classes, template has {template.num_classes}"
        )
    rng = as_rng(rng)
    features = gen.sample_batch(template.labels, rng)
    return LabeledDataset(
        features, template.labels.copy(), template.num_classes,
        name=f"{template.name}:replacement",
    )


def build_augmented_set(real: LabeledDataset, gen, fraction: float, rng) -> LabeledDataset:
    """Extend `real` with generator samples: per class, floor(fraction *
    count) synthetic examples are appended after the untouched real rows
    (synthetic block ordered by class)."""
    if not fraction > 0:
        raise ValueError(f"fraction must be > 0, got {fraction}")
    rng = as_rng(rng)
    counts = class_histogram(real)
    # epsilon guards against representation dings (0.29*100 = 28.999...996)
    synth_counts = np.floor(fraction * counts + 1e-9).astype(np.int64)
    synth_labels = np.repeat(np.arange(real.num_classes), synth_counts)
    if synth_labels.size == 0:
        return real.with_name(f"{real.name}:augmented")
    synth_features = gen.sample_batch(synth_labels, rng)
    return LabeledDataset(
        np.concatenate([real.features, synth_features.astype(np.float32)]),
        np.concatenate([real.labels, synth_labels]),
        real.num_classes,
        name=f"{real.name}:augmented",
    )


def stratified_split(ds: LabeledDataset, test_fraction: float, rng):
    """Split into disjoint (train, test) with per-class test counts of
    round(test_fraction * class count), half-up. Row order within each
    split follows the original dataset."""
    if not 0.0 < test_fraction < 1.0:
        raise ValueError(f"test_fraction must be in (0, 1), got {test_fraction}")
    counts = class_histogram(ds)
    tiny = np.flatnonzero(counts < 2)
    if tiny.size:
        raise ValueError(f"every class needs >= 2 examples; classes {tiny.tolist()} are short")
    rng = as_rng(rng)
    test_mask = np.zeros(ds.n, dtype=bool)
    for c in range(ds.num_classes):
        idx = np.flatnonzero(ds.labels == c)
        n_test = int(np.floor(test_fraction * idx.size + 0.5))
        chosen = rng.permutation(idx.size)[:n_test]
        test_mask[idx[chosen]] = True
    train = ds.subset(np.flatnonzero(~test_mask), name=f"{ds.name}:train")
    test = ds.subset(np.flatnonzero(test_mask), name=f"{ds.name}:test")
    return train, test
