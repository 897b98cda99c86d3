"""Ground-truth label handling and the labeled training corpus."""

from __future__ import annotations

import os
import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .features import FeatureVector
from .ingest import BlockWindow

LABEL_HEADER = "token,suspicious"

_ADDRESS_RE = re.compile(r"^0x[0-9a-fA-F]{40}$")

DEFAULT_MIN_NODES = 500


class LabelParseError(ValueError):
    pass


class LabelConflictError(ValueError):
    """Same token labeled both suspicious and clean."""


@dataclass(frozen=True)
class LabelRecord:
    token: str
    suspicious: int


@dataclass
class LabeledDataset:
    """Feature rows joined with labels, one row per (token, window).

    ``unlabeled`` lists tokens that cleared the node threshold but have no
    ground-truth label; they are excluded from training rather than assumed
    legitimate.
    """

    rows: list[tuple[FeatureVector, int]]
    windows: list[BlockWindow] = field(default_factory=list)
    unlabeled: list[str] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def vectors(self) -> list[FeatureVector]:
        return [fv for fv, _ in self.rows]

    @property
    def labels(self) -> list[int]:
        return [label for _, label in self.rows]

    def row_ids(self) -> list[tuple[str, int, int]]:
        return [(fv.token, fv.window.start, fv.window.end) for fv, _ in self.rows]


def load_labels(path: str | os.PathLike) -> dict[str, int]:
    """Read a label file into {token: 0/1}; conflicting duplicates are an error."""
    labels: dict[str, int] = {}
    with open(path, "r", encoding="utf-8") as handle:
        header = handle.readline().rstrip("\n")
        if header != LABEL_HEADER:
            raise LabelParseError(f"unrecognized label header: {header!r}")
        for line_no, line in enumerate(handle, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            fields = line.split(",")
            if len(fields) != 2:
                raise LabelParseError(f"line {line_no}: expected 2 columns")
            token, flag = fields
            if not _ADDRESS_RE.match(token):
                raise LabelParseError(f"line {line_no}: bad token address {token!r}")
            if flag not in ("0", "1"):
                raise LabelParseError(f"line {line_no}: suspicious must be 0 or 1")
            token = token.lower()
            value = int(flag)
            if token in labels and labels[token] != value:
                raise LabelConflictError(f"conflicting labels for {token}")
            labels[token] = value
    return labels


def write_labels(labels: dict[str, int], path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(LABEL_HEADER + "\n")
        for token, flag in labels.items():
            handle.write(f"{token},{flag}\n")


def join(
    features: Sequence[FeatureVector],
    labels: dict[str, int],
    min_nodes: int = DEFAULT_MIN_NODES,
) -> LabeledDataset:
    """Keep labeled rows with strictly more than ``min_nodes`` nodes.

    The threshold is strict: a 500-node graph is excluded at the default.
    Over-threshold tokens lacking a label are reported in ``unlabeled``.
    """
    rows: list[tuple[FeatureVector, int]] = []
    unlabeled: list[str] = []
    windows: list[BlockWindow] = []
    seen_rows: set[tuple[str, int]] = set()
    for fv in features:
        if fv.num_nodes <= min_nodes:
            continue
        key = (fv.token, fv.window.start)
        if key in seen_rows:
            raise ValueError(f"duplicate (token, window) row: {key}")
        seen_rows.add(key)
        label = labels.get(fv.token)
        if label is None:
            unlabeled.append(fv.token)
            continue
        rows.append((fv, label))
        if fv.window not in windows:
            windows.append(fv.window)
    return LabeledDataset(rows=rows, windows=windows, unlabeled=unlabeled)


@dataclass
class CorpusSummary:
    per_window: list[tuple[BlockWindow, int, int]]  # (window, rows, suspicious)
    pooled_rows: int
    pooled_suspicious: int
    unique_tokens: int
    unique_suspicious: int

    @property
    def pooled_fraction(self) -> float:
        return self.pooled_suspicious / self.pooled_rows if self.pooled_rows else 0.0

    @property
    def unique_fraction(self) -> float:
        return self.unique_suspicious / self.unique_tokens if self.unique_tokens else 0.0


def summarize(datasets: Iterable[LabeledDataset]) -> CorpusSummary:
    """Pooled and unique-token counts over per-window datasets.

    A token counts as suspicious at the unique level when any of its window
    rows is labeled suspicious; legitimate tokens recurring across windows
    is what pushes the pooled fraction below the unique one.
    """
    per_window: list[tuple[BlockWindow, int, int]] = []
    token_flag: dict[str, int] = {}
    pooled_rows = 0
    pooled_suspicious = 0
    for dataset in datasets:
        by_window: dict[BlockWindow, tuple[int, int]] = {}
        for fv, label in dataset.rows:
            rows, bad = by_window.get(fv.window, (0, 0))
            by_window[fv.window] = (rows + 1, bad + label)
            token_flag[fv.token] = max(token_flag.get(fv.token, 0), label)
            pooled_rows += 1
            pooled_suspicious += label
        per_window.extend((w, rows, bad) for w, (rows, bad) in sorted(
            by_window.items(), key=lambda item: item[0].start))
    return CorpusSummary(
        per_window=per_window,
        pooled_rows=pooled_rows,
        pooled_suspicious=pooled_suspicious,
        unique_tokens=len(token_flag),
        unique_suspicious=sum(token_flag.values()),
    )
