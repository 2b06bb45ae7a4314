"""The 35-way phone union inventory and its phonetic class taxonomy.

This module is the single symbol authority for the whole package: the
inventory fixes symbol spelling, index order (silence first, then the
published table row order), and the coarse/fine class of every phone.
Composite symbols (affricates, diphthong-like clusters) decompose into
ordered lists of elementary phones; the decomposition table ships as an
editable JSON data file.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources

from .errors import FormatError, UnknownCompositeError, UnknownPhoneError

SILENCE = "sil"

# Row order and class assignment of the published 34-phone table; silence
# is prepended at index 0.  Tuples are (symbol, coarse class, fine class).
_TABLE = (
    ("l", "Approximants", "Approximants"),
    ("j", "Approximants", "Approximants"),
    ("w", "Approximants", "Approximants"),
    ("u", "Vowels", "Closed Vowels"),
    ("i", "Vowels", "Closed Vowels"),
    ("y", "Vowels", "Closed Vowels"),
    ("e", "Vowels", "Mid-open Vowels"),
    ("o", "Vowels", "Mid-open Vowels"),
    ("œ", "Vowels", "Mid-open Vowels"),      # œ
    ("ɛ", "Vowels", "Mid-open Vowels"),      # ɛ
    ("ɜ", "Vowels", "Mid-open Vowels"),      # ɜ
    ("a", "Vowels", "Open Vowels"),
    ("s", "Fricatives", "Sibilant Fricatives"),
    ("ʃ", "Fricatives", "Sibilant Fricatives"),   # ʃ
    ("z", "Fricatives", "Sibilant Fricatives"),
    ("ʒ", "Fricatives", "Sibilant Fricatives"),   # ʒ
    ("θ", "Fricatives", "Non-sibilant Fricatives"),  # θ
    ("ð", "Fricatives", "Non-sibilant Fricatives"),  # ð
    ("h", "Fricatives", "Non-sibilant Fricatives"),
    ("v", "Fricatives", "Non-sibilant Fricatives"),
    ("x", "Fricatives", "Non-sibilant Fricatives"),
    ("f", "Fricatives", "Non-sibilant Fricatives"),
    ("ɣ", "Fricatives", "Non-sibilant Fricatives"),  # ɣ
    ("n", "Nasals", "Nasals"),
    ("m", "Nasals", "Nasals"),
    ("ŋ", "Nasals", "Nasals"),               # ŋ
    ("ɲ", "Nasals", "Nasals"),               # ɲ
    ("r", "Rhotics", "Rhotics"),
    ("p", "Stops", "Unvoiced Stops"),
    ("t", "Stops", "Unvoiced Stops"),
    ("k", "Stops", "Unvoiced Stops"),
    ("b", "Stops", "Voiced Stops"),
    ("d", "Stops", "Voiced Stops"),
    ("g", "Stops", "Voiced Stops"),
)

COARSE_CLASSES = (
    "Approximants",
    "Vowels",
    "Fricatives",
    "Nasals",
    "Rhotics",
    "Stops",
    "Silence",
)

FINE_CLASSES = (
    "Approximants",
    "Closed Vowels",
    "Mid-open Vowels",
    "Open Vowels",
    "Sibilant Fricatives",
    "Non-sibilant Fricatives",
    "Nasals",
    "Rhotics",
    "Unvoiced Stops",
    "Voiced Stops",
    "Silence",
)

# Projection used by the refinement invariant: every fine class belongs to
# exactly one coarse class.
FINE_TO_COARSE = {
    "Approximants": "Approximants",
    "Closed Vowels": "Vowels",
    "Mid-open Vowels": "Vowels",
    "Open Vowels": "Vowels",
    "Sibilant Fricatives": "Fricatives",
    "Non-sibilant Fricatives": "Fricatives",
    "Nasals": "Nasals",
    "Rhotics": "Rhotics",
    "Unvoiced Stops": "Stops",
    "Voiced Stops": "Stops",
    "Silence": "Silence",
}

# ASCII spellings accepted on input and canonicalized on storage.  The
# schwa alias follows the published convention of folding it into [e].
ASCII_ALIASES = {
    "sh": "ʃ",
    "zh": "ʒ",
    "th": "θ",
    "dh": "ð",
    "gh": "ɣ",
    "ng": "ŋ",
    "ny": "ɲ",
    "oe": "œ",
    "eps": "ɛ",
    "er": "ɜ",
    "ə": "e",
    "schwa": "e",
}


@dataclass(frozen=True)
class Phone:
    symbol: str
    index: int
    coarse: str
    fine: str


class PhoneInventory:
    """Immutable mapping between phone symbols, indices and classes."""

    def __init__(self, phones: list[Phone]):
        if len(phones) != len({p.index for p in phones}):
            raise FormatError("phone indices must be unique")
        self._phones = tuple(sorted(phones, key=lambda p: p.index))
        for want, phone in enumerate(self._phones):
            if phone.index != want:
                raise FormatError(f"phone indices not contiguous at {want}")
        self._by_symbol = {p.symbol: p for p in self._phones}
        if len(self._by_symbol) != len(self._phones):
            raise FormatError("duplicate phone symbols")

    def __len__(self) -> int:
        return len(self._phones)

    def __iter__(self):
        return iter(self._phones)

    def __contains__(self, symbol: str) -> bool:
        return self.canonical(symbol) in self._by_symbol

    @property
    def symbols(self) -> tuple[str, ...]:
        return tuple(p.symbol for p in self._phones)

    @staticmethod
    def canonical(symbol: str) -> str:
        return ASCII_ALIASES.get(symbol, symbol)

    def phone(self, symbol: str) -> Phone:
        sym = self.canonical(symbol)
        try:
            return self._by_symbol[sym]
        except KeyError:
            raise UnknownPhoneError(f"unknown phone symbol: {symbol!r}") from None

    def by_index(self, index: int) -> Phone:
        if not 0 <= index < len(self._phones):
            raise UnknownPhoneError(f"phone index out of range: {index}")
        return self._phones[index]

    def index_of(self, symbol: str) -> int:
        return self.phone(symbol).index

    def class_of(self, symbol: str, granularity: str = "coarse") -> str:
        """Class label of a phone at ``coarse`` or ``fine`` granularity."""
        phone = self.phone(symbol)
        if granularity == "coarse":
            return phone.coarse
        if granularity == "fine":
            return phone.fine
        raise ValueError(f"granularity must be 'coarse' or 'fine', got {granularity!r}")

    def members_of(self, label: str, granularity: str) -> tuple[str, ...]:
        return tuple(
            p.symbol for p in self._phones if self.class_of(p.symbol, granularity) == label
        )

    def labels(self, level: str) -> tuple[str, ...]:
        """Label axis for a footprint level: phone symbols or class names."""
        if level == "phone":
            return self.symbols
        if level == "coarse":
            return COARSE_CLASSES
        if level == "fine":
            return FINE_CLASSES
        raise ValueError(f"level must be phone/coarse/fine, got {level!r}")

    def to_json(self) -> list[dict]:
        return [
            {"symbol": p.symbol, "index": p.index, "coarse": p.coarse, "fine": p.fine}
            for p in self._phones
        ]


def build_default_inventory() -> PhoneInventory:
    """The compiled-in inventory: silence at index 0, then table row order."""
    phones = [Phone(SILENCE, 0, "Silence", "Silence")]
    phones += [
        Phone(sym, i + 1, coarse, fine) for i, (sym, coarse, fine) in enumerate(_TABLE)
    ]
    return PhoneInventory(phones)


def load_inventory(path) -> PhoneInventory:
    """Load an inventory from a JSON array of {symbol,index,coarse,fine}."""
    with open(path, encoding="utf-8") as fh:
        entries = json.load(fh)
    if not isinstance(entries, list):
        raise FormatError(f"{path}: inventory file must hold a JSON array")
    phones = []
    for row in entries:
        try:
            sym = PhoneInventory.canonical(row["symbol"])
            coarse, fine = row["coarse"], row["fine"]
            if fine not in FINE_CLASSES or FINE_TO_COARSE[fine] != coarse:
                raise FormatError(
                    f"{path}: {sym!r} fine class {fine!r} does not refine {coarse!r}"
                )
            phones.append(Phone(sym, int(row["index"]), coarse, fine))
        except KeyError as exc:
            raise FormatError(f"{path}: inventory row missing field {exc}") from None
    return PhoneInventory(phones)


class CompositeTable:
    """Decomposition of composite symbols into elementary phone sequences."""

    def __init__(self, entries: dict[str, tuple[str, ...]], inventory: PhoneInventory):
        self._entries = {}
        for composite, parts in entries.items():
            parts = tuple(inventory.phone(p).symbol for p in parts)
            if len(parts) < 2:
                raise FormatError(
                    f"composite {composite!r} must decompose into >= 2 phones"
                )
            self._entries[composite] = parts
        self._inventory = inventory

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, symbol: str) -> bool:
        return symbol in self._entries

    @property
    def symbols(self) -> tuple[str, ...]:
        return tuple(sorted(self._entries))

    def decompose(self, symbol: str) -> tuple[str, ...]:
        try:
            return self._entries[symbol]
        except KeyError:
            raise UnknownCompositeError(f"not a composite symbol: {symbol!r}") from None


def load_composite_table(path, inventory: PhoneInventory | None = None) -> CompositeTable:
    inventory = inventory or build_default_inventory()
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    if not isinstance(raw, dict):
        raise FormatError(f"{path}: composite file must hold a JSON object")
    return CompositeTable({k: tuple(v) for k, v in raw.items()}, inventory)


def default_composite_table(inventory: PhoneInventory | None = None) -> CompositeTable:
    """The bundled 9-entry table (see ``data/composites.json``).

    Only the [tʃ] entry is attested; the remaining eight are plausible
    affricate/diphthong defaults and explicitly non-normative.
    """
    inventory = inventory or build_default_inventory()
    text = resources.files("phonoprint.data").joinpath("composites.json").read_text("utf-8")
    raw = json.loads(text)
    return CompositeTable({k: tuple(v) for k, v in raw.items()}, inventory)


def decompose(symbol: str, table: CompositeTable) -> tuple[str, ...]:
    return table.decompose(symbol)
