import json

import pytest

from phonoprint import inventory as inv
from phonoprint.errors import FormatError, UnknownCompositeError, UnknownPhoneError


@pytest.fixture(scope="module")
def default():
    return inv.build_default_inventory()


def test_inventory_has_35_phones_with_silence_first(default):
    assert len(default) == 35
    assert default.by_index(0).symbol == "sil"
    assert default.class_of("sil", "coarse") == "Silence"
    assert default.class_of("sil", "fine") == "Silence"


def test_index_symbol_bijection(default):
    for i in range(35):
        phone = default.by_index(i)
        assert default.index_of(phone.symbol) == i
    assert len(set(default.symbols)) == 35


def test_published_class_assignments(default):
    assert default.class_of("p", "fine") == "Unvoiced Stops"
    assert default.class_of("a", "coarse") == "Vowels"
    assert default.class_of("a", "fine") == "Open Vowels"
    assert default.class_of("s", "fine") == "Sibilant Fricatives"
    assert default.class_of("r", "fine") == "Rhotics"
    assert default.class_of("r", "coarse") == "Rhotics"
    assert default.class_of("b", "fine") == "Voiced Stops"
    assert default.class_of("m", "coarse") == "Nasals"


def test_fine_partition_sizes_in_row_order(default):
    # Fine classes partition the 34 non-silence phones; group sizes follow
    # the table row order.
    sizes = [
        len(default.members_of(label, "fine"))
        for label in inv.FINE_CLASSES
        if label != "Silence"
    ]
    assert sizes == [3, 3, 5, 1, 4, 7, 4, 1, 3, 3]
    assert sum(sizes) == 34


def test_fine_refines_coarse(default):
    for phone in default:
        assert inv.FINE_TO_COARSE[phone.fine] == phone.coarse


def test_ascii_aliases_canonicalize(default):
    assert default.phone("sh").symbol == "ʃ"
    assert default.phone("ng").symbol == "ŋ"
    # schwa folds into [e]
    assert default.phone("ə").symbol == "e"


def test_unknown_phone_raises(default):
    with pytest.raises(UnknownPhoneError):
        default.phone("q")
    with pytest.raises(ValueError):
        default.class_of("a", "medium")


def test_default_composites(default):
    table = inv.default_composite_table(default)
    assert len(table) == 9
    assert table.decompose("tʃ") == ("t", "ʃ")
    with pytest.raises(UnknownCompositeError):
        table.decompose("a")
    for symbol in table.symbols:
        parts = table.decompose(symbol)
        assert len(parts) >= 2
        for part in parts:
            assert part in default


def test_composite_table_round_trip(tmp_path, default):
    path = tmp_path / "composites.json"
    path.write_text(json.dumps({"ks": ["k", "s"]}), encoding="utf-8")
    table = inv.load_composite_table(path, default)
    assert table.decompose("ks") == ("k", "s")


def test_inventory_json_round_trip(tmp_path, default):
    path = tmp_path / "inventory.json"
    path.write_text(json.dumps(default.to_json(), ensure_ascii=False), encoding="utf-8")
    loaded = inv.load_inventory(path)
    assert loaded.symbols == default.symbols
    for phone in loaded:
        assert phone == default.by_index(phone.index)


def test_inventory_file_validation(tmp_path):
    bad = [{"symbol": "a", "index": 0, "coarse": "Stops", "fine": "Open Vowels"}]
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(bad), encoding="utf-8")
    with pytest.raises(FormatError):
        inv.load_inventory(path)
