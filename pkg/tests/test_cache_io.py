import json

import pytest

from smtrace_core.cache_io import dumps_table, load_table, loads_table, store_table
from smtrace_core.errors import CacheIntegrityError, VerificationError
from smtrace_core.series import QSeries
from smtrace_core.zagier_basis import GTable, build_table, solve_gD


@pytest.fixture(scope="module")
def small_table():
    return build_table(5, 12)


def test_dumps_then_loads_is_identity(small_table):
    text = dumps_table(small_table)
    header = json.loads(text.splitlines()[0])
    assert header["kind"] == "gtable"
    assert header["rows"] == {"1": "12", "4": "12", "5": "12"}
    loaded = loads_table(text)
    assert loaded.rows == small_table.rows
    assert loaded.windows == small_table.windows


def test_store_then_load(tmp_path, small_table):
    path = tmp_path / "cache" / "gtable.jsonl"
    store_table(small_table, path)
    assert path.exists()
    assert not list(path.parent.glob("*.tmp"))
    loaded = load_table(path)
    assert list(loaded.entries()) == list(small_table.entries())


def test_integers_are_decimal_strings(small_table):
    line = dumps_table(small_table).splitlines()[1]
    rec = json.loads(line)
    assert all(isinstance(v, str) for v in rec.values())


def test_corrupted_line_names_its_number(small_table):
    lines = dumps_table(small_table).splitlines()
    lines[2] = '{"D": "1", "d": oops}'
    with pytest.raises(CacheIntegrityError, match="line 3"):
        loads_table("\n".join(lines))


def test_edited_value_fails_hash(small_table):
    lines = dumps_table(small_table).splitlines()
    rec = json.loads(lines[2])
    rec["B"] = str(int(rec["B"]) + 1)
    lines[2] = json.dumps(rec, sort_keys=True)
    with pytest.raises(CacheIntegrityError, match="hash"):
        loads_table("\n".join(lines))


def test_entry_outside_declared_window(small_table):
    lines = dumps_table(small_table).splitlines()
    lines.append(json.dumps({"D": "1", "d": "99", "B": "0"}, sort_keys=True))
    with pytest.raises(CacheIntegrityError, match="outside"):
        loads_table("\n".join(lines))


def test_malformed_header():
    with pytest.raises(CacheIntegrityError, match="line 1"):
        loads_table("not json\n")
    with pytest.raises(CacheIntegrityError):
        loads_table("")


def test_disjoint_append_merges(tmp_path, small_table):
    path = tmp_path / "gtable.jsonl"
    store_table(small_table, path)
    extra = GTable()
    extra.add_row(8, solve_gD(8, 12))
    store_table(extra, path)
    loaded = load_table(path)
    assert sorted(loaded.windows) == [1, 4, 5, 8]
    assert loaded.value(8, 3) == -1707264


def test_conflicting_append_is_refused(tmp_path, small_table):
    path = tmp_path / "gtable.jsonl"
    store_table(small_table, path)
    bad = GTable()
    bad.add_row(1, solve_gD(1, 12) + QSeries({3: 1}, 13))
    with pytest.raises(VerificationError):
        store_table(bad, path)
    assert load_table(path).value(1, 3) == 248
