"""Capture-history count data.

A capture history is the subset of lists on which an individual was observed,
encoded as a bitmask over list indices 0..t-1 (list i in column order maps to
bit i).  A dataset is a set of list labels plus a count for every non-null
history that was actually observed.  The null history (bitmask 0) is the
unobservable "dark figure" cell and never carries a count.

Canonical cell ordering everywhere is (order, numeric bitmask), where the
order of a history is the number of lists it contains.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .errors import DataFormatError

MIN_LISTS = 3
# Beyond 16 lists the 2^t incidence tables and the 2^(t(t-1)/2) model space
# are outside the intended range of the method; reject rather than crawl.
MAX_LISTS = 16


def order_of(history: int) -> int:
    """Number of lists in the history (popcount of the bitmask)."""
    return history.bit_count()


def history_sort_key(history: int) -> tuple[int, int]:
    return (history.bit_count(), history)


@dataclass(frozen=True, order=True)
class ListPair:
    """Unordered pair of list indices, stored with i < j."""

    i: int
    j: int

    def __post_init__(self) -> None:
        if not (0 <= self.i < self.j):
            raise ValueError(f"pair indices must satisfy 0 <= i < j, got ({self.i}, {self.j})")

    @classmethod
    def of(cls, a: int, b: int) -> "ListPair":
        if a == b:
            raise ValueError(f"a pair needs two distinct lists, got ({a}, {b})")
        return cls(min(a, b), max(a, b))

    @property
    def mask(self) -> int:
        return (1 << self.i) | (1 << self.j)


def all_pairs(t: int) -> frozenset[ListPair]:
    """Every two-list pair for t lists."""
    return frozenset(ListPair(i, j) for i in range(t) for j in range(i + 1, t))


def _validate_label(label: str) -> str:
    label = label.strip()
    if not label:
        raise DataFormatError("empty list label")
    if any(ch in label for ch in ",:\n"):
        raise DataFormatError(f"list label {label!r} may not contain ',' ':' or newlines")
    return label


@dataclass(frozen=True)
class CaptureDataset:
    """List labels plus counts for each observed non-null capture history.

    Counts are canonicalized on construction: zero-count cells are dropped and
    keys are ordered by (order, bitmask).  Instances are immutable after
    construction and safe to share across concurrent readers; treat the
    ``counts`` mapping as read-only.
    """

    labels: tuple[str, ...]
    counts: Mapping[int, int]

    def __post_init__(self) -> None:
        labels = tuple(_validate_label(lab) for lab in self.labels)
        if len(set(labels)) != len(labels):
            raise DataFormatError("duplicate list labels")
        t = len(labels)
        if not MIN_LISTS <= t <= MAX_LISTS:
            raise DataFormatError(f"number of lists must be in [{MIN_LISTS}, {MAX_LISTS}], got {t}")
        canon: dict[int, int] = {}
        for history in sorted(self.counts, key=history_sort_key):
            count = self.counts[history]
            if not isinstance(history, (int, np.integer)) or not 0 <= history < (1 << t):
                raise DataFormatError(f"history {history!r} out of range for {t} lists")
            if (
                not isinstance(count, (int, np.integer))
                or isinstance(count, bool)
                or count < 0
            ):
                raise DataFormatError(f"count for history {history:#b} must be a nonnegative integer")
            if history == 0 and count > 0:
                raise DataFormatError("the null capture history cannot carry an observed count")
            if count > 0:
                canon[int(history)] = int(count)
        if sum(canon.values()) < 1:
            raise DataFormatError("dataset must contain at least one observed case")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "counts", canon)

    # -- basic views ---------------------------------------------------

    @property
    def t(self) -> int:
        return len(self.labels)

    @property
    def m(self) -> int:
        """Total number of observed cases."""
        return sum(self.counts.values())

    @property
    def histories(self) -> tuple[int, ...]:
        """Observed histories in canonical order."""
        return tuple(self.counts)

    def count(self, history: int) -> int:
        return self.counts.get(history, 0)

    def history_labels(self, history: int) -> tuple[str, ...]:
        return tuple(lab for i, lab in enumerate(self.labels) if history >> i & 1)

    def mask_of(self, names: Iterable[str]) -> int:
        mask = 0
        for name in names:
            try:
                mask |= 1 << self.labels.index(name)
            except ValueError:
                raise KeyError(f"unknown list label {name!r}") from None
        return mask

    def pair_of(self, text: str) -> ListPair:
        """Parse a colon-joined label pair such as ``LA:GP``."""
        parts = text.split(":")
        if len(parts) != 2:
            raise DataFormatError(f"expected 'label:label', got {text!r}")
        mask = self.mask_of(parts)
        if mask.bit_count() != 2:
            raise DataFormatError(f"pair {text!r} does not name two distinct lists")
        return ListPair.of(*(i for i in range(self.t) if mask >> i & 1))

    def pair_label(self, pair: ListPair) -> str:
        return f"{self.labels[pair.i]}:{self.labels[pair.j]}"

    # -- operations ----------------------------------------------------

    def marginal(self, omega: int) -> int:
        """Total cases observed on every list in ``omega`` (N* marginal).

        ``omega == 0`` returns the overall observed total, which does not
        include the dark figure.
        """
        if not 0 <= omega < (1 << self.t):
            raise ValueError(f"history {omega:#b} out of range for {self.t} lists")
        return sum(c for h, c in self.counts.items() if h & omega == omega)

    def nonoverlapping_pairs(self) -> frozenset[ListPair]:
        """Pairs of lists with no individual observed on both."""
        return frozenset(
            p for p in all_pairs(self.t) if self.marginal(p.mask) == 0
        )

    def overlapping_pairs(self) -> frozenset[ListPair]:
        return all_pairs(self.t) - self.nonoverlapping_pairs()

    def merge_lists(self, group: Iterable[int], new_label: str | None = None) -> "CaptureDataset":
        """Combine the lists in ``group`` into a single list.

        An individual is on the merged list iff it was on any list of the
        group.  The merged list takes the position of the lowest index in the
        group; the observed total is preserved.
        """
        group = frozenset(group)
        if len(group) < 2:
            raise ValueError("need at least two lists to merge")
        for i in group:
            if not 0 <= i < self.t:
                raise ValueError(f"list index {i} out of range for {self.t} lists")
        if new_label is None:
            new_label = "+".join(self.labels[i] for i in sorted(group))
        slot = min(group)
        index_map: dict[int, int] = {}
        new_labels: list[str] = []
        for i, lab in enumerate(self.labels):
            if i == slot:
                index_map[i] = len(new_labels)
                new_labels.append(new_label)
            elif i in group:
                index_map[i] = index_map[slot]
            else:
                index_map[i] = len(new_labels)
                new_labels.append(lab)
        merged: dict[int, int] = {}
        for history, count in self.counts.items():
            new_hist = 0
            for i in range(self.t):
                if history >> i & 1:
                    new_hist |= 1 << index_map[i]
            merged[new_hist] = merged.get(new_hist, 0) + count
        return CaptureDataset(tuple(new_labels), merged)

    # -- serialization -------------------------------------------------

    def to_csv(self) -> str:
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(list(self.labels) + ["count"])
        for history, count in self.counts.items():
            writer.writerow([history >> i & 1 for i in range(self.t)] + [count])
        return out.getvalue()

    def to_json_obj(self) -> dict:
        return {
            "labels": list(self.labels),
            "cells": [
                {"history": list(self.history_labels(h)), "count": c}
                for h, c in self.counts.items()
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj(), indent=2)

    @classmethod
    def from_json_obj(cls, obj: Mapping) -> "CaptureDataset":
        labels = tuple(obj["labels"])
        counts: dict[int, int] = {}
        for cell in obj["cells"]:
            mask = 0
            for name in cell["history"]:
                try:
                    mask |= 1 << labels.index(name)
                except ValueError:
                    raise DataFormatError(f"unknown list label {name!r}") from None
            counts[mask] = counts.get(mask, 0) + int(cell["count"])
        return cls(labels, counts)

    @classmethod
    def from_cells(cls, labels: Iterable[str], cells: Mapping[tuple[str, ...], int]) -> "CaptureDataset":
        """Build a dataset from label-tuple keyed counts (fixture helper)."""
        labels = tuple(labels)
        counts: dict[int, int] = {}
        for names, count in cells.items():
            mask = 0
            for name in names:
                mask |= 1 << labels.index(name)
            counts[mask] = counts.get(mask, 0) + count
        return cls(labels, counts)


def parse_dataset(text: str, format: str = "csv") -> CaptureDataset:
    """Parse capture-history count data.

    The CSV layout is a header row naming the t list columns plus a final
    ``count`` column, followed by rows of 0/1 indicators and a nonnegative
    integer count.  Rows repeating the same history are summed; zero-count
    rows are dropped.
    """
    if format != "csv":
        raise DataFormatError(f"unsupported format {format!r}")
    rows = list(csv.reader(io.StringIO(text)))
    rows = [row for row in rows if row and any(field.strip() for field in row)]
    if not rows:
        raise DataFormatError("empty input")
    header = [field.strip() for field in rows[0]]
    if len(header) < 2 or header[-1].lower() != "count":
        raise DataFormatError("header must name the list columns plus a final 'count' column")
    labels = tuple(header[:-1])
    t = len(labels)
    counts: dict[int, int] = {}
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != t + 1:
            raise DataFormatError(f"line {lineno}: expected {t + 1} fields, got {len(row)}")
        mask = 0
        for i, field in enumerate(row[:-1]):
            field = field.strip()
            if field == "1":
                mask |= 1 << i
            elif field != "0":
                raise DataFormatError(f"line {lineno}: indicator must be 0 or 1, got {field!r}")
        try:
            count = int(row[-1].strip())
        except ValueError:
            raise DataFormatError(f"line {lineno}: count must be an integer, got {row[-1]!r}") from None
        if count < 0:
            raise DataFormatError(f"line {lineno}: negative count {count}")
        if mask == 0 and count > 0:
            raise DataFormatError(f"line {lineno}: the all-zero history cannot carry a positive count")
        counts[mask] = counts.get(mask, 0) + count
    counts.pop(0, None)
    return CaptureDataset(labels, counts)


def marginal_total(dataset: CaptureDataset, omega: int) -> int:
    """N* marginal: cases appearing on every list in ``omega``."""
    return dataset.marginal(omega)


def nonoverlapping_pairs(dataset: CaptureDataset) -> frozenset[ListPair]:
    return dataset.nonoverlapping_pairs()


def merge_lists(dataset: CaptureDataset, group: Iterable[int], new_label: str | None = None) -> CaptureDataset:
    return dataset.merge_lists(group, new_label)
