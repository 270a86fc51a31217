"""Built-in published datasets.

Each fixture is the full table of observed capture-history counts for one of
the study datasets; the ``*5`` variants are derived from their parents by
merging lists, matching the published five-list analyses.
"""

from __future__ import annotations

from .histories import CaptureDataset

_ARTIFICIAL3 = {
    ("A",): 40,
    ("B",): 30,
    ("C",): 20,
    ("A", "B"): 6,
}

_UK_LABELS = ("LA", "NG", "PF", "GO", "GP", "NCA")
_UK = {
    ("LA",): 54,
    ("NG",): 463,
    ("PF",): 907,
    ("GO",): 695,
    ("GP",): 316,
    ("NCA",): 57,
    ("LA", "NG"): 15,
    ("LA", "PF"): 19,
    ("LA", "GO"): 3,
    ("NG", "PF"): 56,
    ("NG", "GO"): 19,
    ("NG", "GP"): 1,
    ("NG", "NCA"): 3,
    ("PF", "GO"): 69,
    ("PF", "GP"): 10,
    ("PF", "NCA"): 31,
    ("GO", "GP"): 8,
    ("GO", "NCA"): 6,
    ("GP", "NCA"): 1,
    ("LA", "NG", "PF"): 1,
    ("LA", "NG", "GO"): 1,
    ("NG", "PF", "GO"): 4,
    ("NG", "PF", "NCA"): 3,
    ("PF", "GO", "NCA"): 1,
    ("LA", "NG", "PF", "GO"): 1,
}

_NETHERLANDS_LABELS = ("I", "K", "O", "P", "R", "Z")
_NETHERLANDS = {
    ("I",): 352,
    ("K",): 1299,
    ("O",): 403,
    ("P",): 4466,
    ("R",): 650,
    ("Z",): 632,
    ("I", "O"): 1,
    ("I", "P"): 18,
    ("I", "R"): 3,
    ("I", "Z"): 16,
    ("K", "O"): 1,
    ("K", "P"): 44,
    ("K", "Z"): 4,
    ("O", "P"): 59,
    ("O", "R"): 2,
    ("O", "Z"): 57,
    ("P", "R"): 82,
    ("P", "Z"): 125,
    ("R", "Z"): 2,
    ("I", "O", "P"): 4,
    ("I", "P", "Z"): 4,
    ("O", "P", "R"): 2,
    ("O", "P", "Z"): 7,
    ("P", "R", "Z"): 1,
}

_NEW_ORLEANS_LABELS = ("A", "B", "C", "D", "E", "F", "G", "H")
_NEW_ORLEANS = {
    ("A",): 25,
    ("B",): 5,
    ("C",): 70,
    ("D",): 33,
    ("E",): 6,
    ("F",): 6,
    ("G",): 6,
    ("H",): 21,
    ("A", "C"): 1,
    ("A", "D"): 2,
    ("A", "E"): 1,
    ("B", "F"): 1,
    ("C", "D"): 1,
    ("C", "E"): 1,
    ("C", "G"): 1,
    ("D", "E"): 2,
    ("E", "H"): 1,
    ("A", "C", "G"): 1,
    ("A", "D", "E"): 1,
}

_WESTERN_LABELS = ("A", "B", "C", "D", "E")
_WESTERN = {
    ("A",): 52,
    ("B",): 90,
    ("C",): 114,
    ("D",): 45,
    ("E",): 21,
    ("A", "C"): 4,
    ("A", "D"): 2,
    ("A", "E"): 5,
    ("B", "C"): 6,
    ("B", "D"): 1,
    ("D", "E"): 3,
    ("A", "C", "E"): 1,
    ("B", "C", "D"): 1,
}

BUILTIN_NAMES = (
    "artificial3",
    "uk",
    "uk5",
    "netherlands",
    "netherlands5",
    "new_orleans",
    "new_orleans5",
    "western",
)


def builtin_dataset(name: str) -> CaptureDataset:
    """Return one of the bundled datasets by name."""
    if name == "artificial3":
        return CaptureDataset.from_cells(("A", "B", "C"), _ARTIFICIAL3)
    if name == "uk":
        return CaptureDataset.from_cells(_UK_LABELS, _UK)
    if name == "uk5":
        # the published five-list variant combines the police and national
        # crime agency lists
        d = builtin_dataset("uk")
        return d.merge_lists({d.labels.index("PF"), d.labels.index("NCA")})
    if name == "netherlands":
        return CaptureDataset.from_cells(_NETHERLANDS_LABELS, _NETHERLANDS)
    if name == "netherlands5":
        # combines the two smallest lists I and O
        d = builtin_dataset("netherlands")
        return d.merge_lists({d.labels.index("I"), d.labels.index("O")})
    if name == "new_orleans":
        return CaptureDataset.from_cells(_NEW_ORLEANS_LABELS, _NEW_ORLEANS)
    if name == "new_orleans5":
        # combines the four smallest lists (B, E, F, G)
        d = builtin_dataset("new_orleans")
        return d.merge_lists({d.labels.index(x) for x in ("B", "E", "F", "G")})
    if name == "western":
        return CaptureDataset.from_cells(_WESTERN_LABELS, _WESTERN)
    raise KeyError(f"unknown dataset {name!r}; available: {', '.join(BUILTIN_NAMES)}")
