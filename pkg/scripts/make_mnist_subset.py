"""Build data/mnist5k-images-idx3-ubyte.gz from the 5000-digit MNIST sample
bundled with mlxtend (mlxtend/data/data/mnist_5k.csv.gz).

Usage:
    python3 scripts/make_mnist_subset.py [--wheel PATH] [--out PATH]

Without --wheel the installed mlxtend package is used; otherwise point it
at a downloaded wheel (``pip download --no-deps mlxtend``). Labels are
dropped.
"""

import argparse
import gzip
import io
import zipfile
from pathlib import Path

import numpy as np

from mmdnet.data import write_idx_images

MEMBER = "mlxtend/data/data/mnist_5k.csv.gz"


def read_csv_gz(args):
    if args.wheel:
        with zipfile.ZipFile(args.wheel) as z:
            return z.read(MEMBER)
    import mlxtend

    return (Path(mlxtend.__file__).parent / "data" / "data" / "mnist_5k.csv.gz").read_bytes()


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--wheel")
    ap.add_argument("--out", default="data/mnist5k-images-idx3-ubyte.gz")
    args = ap.parse_args()
    text = gzip.decompress(read_csv_gz(args)).decode()
    table = np.loadtxt(io.StringIO(text), delimiter=",")
    pixels = table[:, :-1]
    assert pixels.shape[1] == 784 and pixels.min() >= 0 and pixels.max() <= 255
    images = pixels.astype(np.uint8).reshape(-1, 28, 28)
    write_idx_images(args.out, images)
    print(f"wrote {images.shape[0]} images to {args.out}")


if __name__ == "__main__":
    main()
