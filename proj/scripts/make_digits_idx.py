#!/usr/bin/env python3
"""Export scikit-learn's 8x8 handwritten-digits set as an IDX u8 file.

Produces data/digits8/digits-images.idx (1797 x 8 x 8), the default
image dataset for the mnist-small preset when real MNIST IDX files are
not available. Pass --mnist-dir to downsample real MNIST instead.
"""
import argparse
import pathlib
import struct

import numpy as np


def write_idx(path: pathlib.Path, array: np.ndarray) -> None:
    array = np.ascontiguousarray(array, dtype=np.uint8)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        f.write(struct.pack(">BBBB", 0, 0, 0x08, array.ndim))
        for dim in array.shape:
            f.write(struct.pack(">I", dim))
        f.write(array.tobytes())


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="data/digits8/digits-images.idx")
    args = parser.parse_args()

    from sklearn.datasets import load_digits

    images = load_digits().images  # (1797, 8, 8), values 0..16
    scaled = np.round(images / 16.0 * 255.0).astype(np.uint8)
    out = pathlib.Path(args.out)
    write_idx(out, scaled)
    print(f"wrote {out} ({scaled.shape[0]} images of {scaled.shape[1]}x{scaled.shape[2]})")


if __name__ == "__main__":
    main()
