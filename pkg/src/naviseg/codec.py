"""Per-view encoding cost tables and segment compression costs.

Each navigation segment is coded independently with one I-frame (its first
view) followed by P-frames, each predicted from the previous view. The
quantization setting is carried as an opaque label; sweeping it means
swapping the whole table.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class RateTable:
    """I-frame and P-frame bit costs per view at one quantization setting.

    h_i[n-1] is the cost of coding view n intra; h_p[n-1] the cost of view n
    predicted from view n-1. h_p[0] is unused and stored as zero.
    """

    q_label: str
    h_i: np.ndarray
    h_p: np.ndarray

    def __post_init__(self):
        h_i = np.asarray(self.h_i, dtype=np.float64)
        h_p = np.asarray(self.h_p, dtype=np.float64)
        if h_i.ndim != 1 or h_i.size < 1:
            raise ValueError("h_i must be a non-empty 1-D vector")
        if h_p.shape != h_i.shape:
            raise ValueError("h_i and h_p must have equal length")
        if np.any(h_i <= 0):
            raise ValueError("non-positive I-frame cost")
        if np.any(h_p < 0):
            raise ValueError("negative P-frame cost")
        h_p = h_p.copy()
        h_p[0] = 0.0
        h_i.setflags(write=False)
        h_p.setflags(write=False)
        object.__setattr__(self, "h_i", h_i)
        object.__setattr__(self, "h_p", h_p)

    @property
    def n_views(self) -> int:
        return self.h_i.size

    def p_prefix(self) -> np.ndarray:
        """Prefix sums of h_p: p_prefix[j] = sum of h_p over views 1..j."""
        out = np.zeros(self.n_views + 1)
        np.cumsum(self.h_p, out=out[1:])
        return out


def segment_cost(table: RateTable, a: int, b: int) -> float:
    """Coded size in bits of the segment covering views a..b (inclusive).

    The first view is the I-frame, the rest are P-frames.
    """
    if not 1 <= a <= b <= table.n_views:
        raise ValueError(f"invalid segment [{a}, {b}] for {table.n_views} views")
    return float(table.h_i[a - 1] + table.h_p[a:b].sum())


def storage_cost(table: RateTable, partition) -> float:
    """Total server storage in bits: sum of independent segment sizes."""
    return sum(segment_cost(table, a, b) for a, b in partition.segments())


def synthesize_rate_table(n_views: int, mode: str, params: tuple, seed: int = 0,
                          q_label: str = "synthetic") -> RateTable:
    """Build an artificial rate table.

    mode 'constant' takes params (c_i, c_p) with c_i > c_p > 0. mode 'random'
    takes (mean_i, mean_p, spread) and draws each cost uniformly in
    mean*(1 +/- spread), clamped positive; deterministic given the seed.
    """
    if n_views < 1:
        raise ValueError("n_views must be >= 1")
    if mode == "constant":
        c_i, c_p = params
        if not c_i > c_p > 0:
            raise ValueError("constant mode requires c_i > c_p > 0")
        h_i = np.full(n_views, float(c_i))
        h_p = np.full(n_views, float(c_p))
    elif mode == "random":
        mean_i, mean_p, spread = params
        if not mean_i > mean_p > 0:
            raise ValueError("random mode requires mean_i > mean_p > 0")
        if not 0 <= spread < 1:
            raise ValueError("spread must be in [0, 1)")
        rng = np.random.default_rng(seed)
        h_i = rng.uniform(mean_i * (1 - spread), mean_i * (1 + spread), n_views)
        h_p = rng.uniform(mean_p * (1 - spread), mean_p * (1 + spread), n_views)
        tiny = np.finfo(np.float64).tiny
        h_i = np.maximum(h_i, tiny)
        h_p = np.maximum(h_p, tiny)
    else:
        raise ValueError(f"unknown rate-table mode {mode!r}")
    h_p = h_p.copy()
    h_p[0] = 0.0
    return RateTable(q_label, h_i, h_p)


def save_rate_table(table: RateTable, path) -> None:
    """Write a rate-table CSV with columns (index, h_I, h_P)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "h_I", "h_P"])
        for n in range(table.n_views):
            writer.writerow([n + 1, repr(float(table.h_i[n])), repr(float(table.h_p[n]))])


def load_rate_table(path, n_views: int | None = None,
                    q_label: str | None = None) -> RateTable:
    """Load a rate table from CSV, validating row count and positivity."""
    rows: list[tuple[int, float, float]] = []
    with open(path, newline="") as fh:
        reader = csv.reader(row for row in fh if not row.startswith("#"))
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:3]] != ["index", "h_I", "h_P"]:
            raise ValueError(f"{path}: expected header 'index,h_I,h_P'")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                rows.append((int(row[0]), float(row[1]), float(row[2])))
            except (ValueError, IndexError) as exc:
                raise ValueError(f"{path}:{lineno}: malformed row {row!r}") from exc
    if not rows:
        raise ValueError(f"{path}: no rate rows")
    rows.sort()
    if [n for n, _, _ in rows] != list(range(1, len(rows) + 1)):
        raise ValueError(f"{path}: view indices must be exactly 1..{len(rows)}")
    if n_views is not None and len(rows) != n_views:
        raise ValueError(f"{path}: expected {n_views} rows, found {len(rows)}")
    h_i = np.array([hi for _, hi, _ in rows])
    h_p = np.array([hp for _, _, hp in rows])
    if np.any(h_i <= 0):
        bad = int(np.argmax(h_i <= 0)) + 1
        raise ValueError(f"{path}: non-positive I-frame cost at view {bad}")
    if np.any(h_p < 0):
        bad = int(np.argmax(h_p < 0)) + 1
        raise ValueError(f"{path}: negative P-frame cost at view {bad}")
    return RateTable(q_label if q_label is not None else "loaded", h_i, h_p)
