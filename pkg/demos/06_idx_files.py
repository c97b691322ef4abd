"""Reading and writing the big-endian IDX image/label format.

Round-trips a generated digit set through IDX files (plain and gzip) and
shows the distinct errors raised for malformed inputs.
"""

import struct
import tempfile
from pathlib import Path

import numpy as np

from sptn import (
    IdxFormatError,
    Prng,
    load_mnist_idx,
    synth_digits,
    write_idx_images,
    write_idx_labels,
)

out = Path(tempfile.mkdtemp())
data = synth_digits(50, Prng(99))
images = np.round(data.features * 255).astype(np.uint8).reshape(-1, 28, 28)
labels = data.labels.astype(np.uint8)

write_idx_images(out / "images.idx", images)
write_idx_labels(out / "labels.idx", labels)
write_idx_images(out / "images.idx.gz", images)
write_idx_labels(out / "labels.idx.gz", labels)

plain = load_mnist_idx(out / "images.idx", out / "labels.idx")
zipped = load_mnist_idx(out / "images.idx.gz", out / "labels.idx.gz")
print("plain == gzip payload:", np.array_equal(plain.features, zipped.features))
print("lossless round trip:  ", np.array_equal(plain.features, data.features))
print("file sizes:", (out / "images.idx").stat().st_size, "vs",
      (out / "images.idx.gz").stat().st_size, "bytes (gzip)")

# Malformed inputs each raise a distinct, named error.
bad = bytearray((out / "images.idx").read_bytes())
bad[3] = 0x77
(out / "bad-magic.idx").write_bytes(bytes(bad))
(out / "short.idx").write_bytes((out / "images.idx").read_bytes()[:-100])
write_idx_labels(out / "three.idx", labels[:3])

for images_path, labels_path in (
    (out / "bad-magic.idx", out / "labels.idx"),
    (out / "short.idx", out / "labels.idx"),
    (out / "images.idx", out / "three.idx"),
):
    try:
        load_mnist_idx(images_path, labels_path)
    except IdxFormatError as exc:
        print("rejected:", str(exc)[:72])
