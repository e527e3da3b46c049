"""Plot every CSV in this directory: first column on x, remaining columns as curves."""

import csv
import pathlib
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


def load(path):
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    header, body = rows[0], rows[1:]
    cols = list(zip(*body)) if body else [[] for _ in header]
    return header, [[float(v) if v else float("nan") for v in col] for col in cols]


def main(directory):
    for path in sorted(pathlib.Path(directory).glob("*.csv")):
        header, cols = load(path)
        fig, ax = plt.subplots(figsize=(7, 4.5))
        for name, ys in zip(header[1:], cols[1:]):
            ax.plot(cols[0], ys, marker="." if len(ys) < 60 else None, label=name)
        ax.set_xlabel(header[0])
        ax.grid(True, alpha=0.3)
        ax.legend()
        ax.set_title(path.stem)
        fig.tight_layout()
        fig.savefig(path.with_suffix(".png"), dpi=120)
        plt.close(fig)


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else pathlib.Path(__file__).parent)
