#!/usr/bin/env python3
"""Build a small MNIST subset in IDX format from the `mnist` npm package.

Usage: npm pack mnist && tar xzf mnist-*.tgz
       python3 scripts/mnist_fixture.py package/src/digits crates/core/tests/data 100
"""
import json
import struct
import sys
from pathlib import Path


def main():
    src, dst, per_class = Path(sys.argv[1]), Path(sys.argv[2]), int(sys.argv[3])
    images, labels = [], []
    for digit in range(10):
        raw = json.loads((src / f"{digit}.json").read_text())["data"]
        n = len(raw) // 784
        for k in range(min(per_class, n)):
            px = raw[k * 784:(k + 1) * 784]
            images.append(bytes(min(255, max(0, round(v * 255))) for v in px))
            labels.append(digit)
    # interleave classes so file order is not grouped by label
    order = sorted(range(len(labels)), key=lambda i: (i % per_class, labels[i]))
    dst.mkdir(parents=True, exist_ok=True)
    with open(dst / "mnist-subset-images.idx3-ubyte", "wb") as f:
        f.write(struct.pack(">IIII", 2051, len(order), 28, 28))
        for i in order:
            f.write(images[i])
    with open(dst / "mnist-subset-labels.idx1-ubyte", "wb") as f:
        f.write(struct.pack(">II", 2049, len(order)))
        f.write(bytes(labels[i] for i in order))


if __name__ == "__main__":
    main()
