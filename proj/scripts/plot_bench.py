#!/usr/bin/env python3
"""Plot a benchmark sweep produced by `lda bench`.

Reads bench.csv (one row per workers x threshold cell) and writes three
figures next to it: wall-clock/speedup curves, bytes published, and final
perplexity, each against the worker count with one line per threshold.
"""

import argparse
import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


def load_cells(path: Path):
    with path.open(newline="") as handle:
        rows = list(csv.DictReader(handle))
    cells = []
    for row in rows:
        if row["status"] != "ok":
            print(f"skipping failed cell: C={row['workers']} "
                  f"threshold={row['threshold']}")
            continue
        cells.append({
            "workers": int(row["workers"]),
            "threshold": float(row["threshold"]),
            "wall_seconds": float(row["wall_seconds"]),
            "sync_fraction": float(row["mean_sync_fraction"]),
            "published_fraction": float(row["mean_entries_published_fraction"]),
            "bytes": int(row["bytes_published_total"]),
            "perplexity": float(row["final_perplexity"]),
            "speedup": float(row["speedup_vs_serial"])
            if row["speedup_vs_serial"] else None,
        })
    if not cells:
        raise SystemExit(f"no successful cells in {path}")
    return cells


def by_threshold(cells):
    thresholds = sorted({c["threshold"] for c in cells})
    for threshold in thresholds:
        series = sorted((c for c in cells if c["threshold"] == threshold),
                        key=lambda c: c["workers"])
        yield threshold, series


def save(fig, out_dir: Path, name: str):
    path = out_dir / name
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    print(f"wrote {path}")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("bench_csv", type=Path, help="bench.csv from lda bench")
    parser.add_argument("--out-dir", type=Path, default=None,
                        help="output directory (default: alongside the CSV)")
    args = parser.parse_args()

    cells = load_cells(args.bench_csv)
    out_dir = args.out_dir or args.bench_csv.parent
    out_dir.mkdir(parents=True, exist_ok=True)

    fig, (ax_wall, ax_speedup) = plt.subplots(1, 2, figsize=(10, 4))
    for threshold, series in by_threshold(cells):
        workers = [c["workers"] for c in series]
        ax_wall.plot(workers, [c["wall_seconds"] for c in series],
                     marker="o", label=f"threshold {threshold:g}")
        speedups = [(c["workers"], c["speedup"]) for c in series
                    if c["speedup"] is not None]
        if speedups:
            ax_speedup.plot([w for w, _ in speedups], [s for _, s in speedups],
                            marker="o", label=f"threshold {threshold:g}")
    ax_wall.set_xlabel("workers")
    ax_wall.set_ylabel("wall-clock seconds")
    ax_wall.set_title("Training time")
    ax_wall.legend()
    top = max(c["workers"] for c in cells)
    ax_speedup.plot([1, top], [1, top], linestyle=":", color="gray",
                    label="ideal")
    ax_speedup.set_xlabel("workers")
    ax_speedup.set_ylabel("speedup vs. one worker")
    ax_speedup.set_title("Speedup")
    ax_speedup.legend()
    save(fig, out_dir, "bench_time.png")

    fig, (ax_bytes, ax_fraction) = plt.subplots(1, 2, figsize=(10, 4))
    for threshold, series in by_threshold(cells):
        workers = [c["workers"] for c in series]
        ax_bytes.plot(workers, [c["bytes"] / 1e6 for c in series],
                      marker="o", label=f"threshold {threshold:g}")
        ax_fraction.plot(workers, [c["published_fraction"] for c in series],
                         marker="o", label=f"threshold {threshold:g}")
    ax_bytes.set_xlabel("workers")
    ax_bytes.set_ylabel("MB published")
    ax_bytes.set_title("Delta traffic")
    ax_bytes.set_yscale("log")
    ax_bytes.legend()
    ax_fraction.set_xlabel("workers")
    ax_fraction.set_ylabel("mean published fraction")
    ax_fraction.set_title("Entries surviving the filter")
    ax_fraction.set_ylim(bottom=0)
    ax_fraction.legend()
    save(fig, out_dir, "bench_traffic.png")

    fig, ax = plt.subplots(figsize=(5.5, 4))
    for threshold, series in by_threshold(cells):
        ax.plot([c["workers"] for c in series],
                [c["perplexity"] for c in series],
                marker="o", label=f"threshold {threshold:g}")
    ax.set_xlabel("workers")
    ax.set_ylabel("held-out perplexity")
    ax.set_title("Model quality")
    ax.legend()
    save(fig, out_dir, "bench_perplexity.png")


if __name__ == "__main__":
    main()
