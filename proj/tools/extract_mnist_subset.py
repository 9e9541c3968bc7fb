#!/usr/bin/env python3
"""Convert the 5000-image MNIST sample bundled with mlxtend into gzipped IDX files.

Usage: extract_mnist_subset.py <mnist_5k.csv.gz | mlxtend wheel> <out_dir>

Rows are shuffled with a fixed seed and split 4000 train / 1000 test.
"""
import gzip
import io
import struct
import sys
import zipfile

import numpy as np


def read_rows(path):
    if path.endswith(".whl"):
        raw = zipfile.ZipFile(path).read("mlxtend/data/data/mnist_5k.csv.gz")
    else:
        raw = open(path, "rb").read()
    return np.loadtxt(io.StringIO(gzip.decompress(raw).decode()), delimiter=",")


def write_idx(path, array, magic):
    header = struct.pack(">I", magic) + b"".join(struct.pack(">I", d) for d in array.shape)
    with gzip.GzipFile(path, "wb", mtime=0) as f:
        f.write(header + array.astype(np.uint8).tobytes())


def main():
    rows = read_rows(sys.argv[1])
    out = sys.argv[2]
    order = np.random.default_rng(20200706).permutation(len(rows))
    rows = rows[order]
    images = rows[:, :-1].reshape(-1, 28, 28)
    labels = rows[:, -1]
    for name, sl in (("train", slice(0, 4000)), ("t10k", slice(4000, 5000))):
        write_idx(f"{out}/{name}-images-idx3-ubyte.gz", images[sl], 0x00000803)
        write_idx(f"{out}/{name}-labels-idx1-ubyte.gz", labels[sl], 0x00000801)


if __name__ == "__main__":
    main()
