"""Redundancy measurements written as CSV plus a matplotlib figure."""
from __future__ import annotations

import csv
import math
from pathlib import Path

from .vtcodes import best_residues, derive_params

CSV_FIELDS = ["q", "t", "mode", "eps", "n", "codebook_size", "redundancy_bits",
              "log2_n", "gap_bits", "N", "b", "c", "a", "classes_searched"]


def redundancy_row(q: int, t: int, eps, n: int, mode: str, max_classes: int | None = None) -> dict:
    params = derive_params(q, t, eps, n, mode)
    best = best_residues(params, max_classes=max_classes)
    red = best.redundancy_bits
    p = best.params
    return {
        "q": q, "t": t, "mode": mode, "eps": str(params.eps), "n": n,
        "codebook_size": len(best.codebook),
        "redundancy_bits": round(red, 6),
        "log2_n": round(math.log2(n), 6),
        "gap_bits": round(red - math.log2(n), 6),
        "N": p.N, "b": p.b, "c": "" if p.c is None else p.c,
        "a": ";".join(f"{k}:{v}" for k, v in sorted(p.a.items())),
        "classes_searched": best.classes_searched,
    }


def redundancy_curve(q: int, t: int, eps, ns, mode: str = "burst",
                     max_classes: int | None = None) -> list[dict]:
    return [redundancy_row(q, t, eps, n, mode, max_classes) for n in ns]


def write_csv(rows: list[dict], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_FIELDS, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


def plot_redundancy(rows: list[dict], path: str | Path) -> None:
    """Measured redundancy against log2 n, saved as an image file."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    ns = [r["n"] for r in rows]
    fig, ax = plt.subplots(figsize=(6, 4), dpi=100)
    ax.plot(ns, [r["redundancy_bits"] for r in rows], "o-", label="measured log2(q^n/|C|)")
    ax.plot(ns, [r["log2_n"] for r in rows], "s--", label="log2 n")
    if rows:
        head = rows[0]
        ax.set_title(f"q={head['q']}, t={head['t']}, {head['mode']}, eps={head['eps']}")
    ax.set_xlabel("n")
    ax.set_ylabel("bits")
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)
