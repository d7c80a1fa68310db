"""SemEval-style WiC dataset and gold-tag files."""

from __future__ import annotations

import gzip
import json
import os
from importlib import resources
from typing import Iterable, Mapping

from .wic import WicInstance

SPAN_FIELDS = ("start1", "end1", "start2", "end2")
_TAGS = {"T": True, "TRUE": True, "F": False, "FALSE": False}


class DatasetError(ValueError):
    pass


def _read(source) -> bytes:
    if isinstance(source, (bytes, bytearray)):
        return bytes(source)
    if isinstance(source, (str, os.PathLike)):
        path = os.fspath(source)
        opener = gzip.open if path.endswith(".gz") else open
        with opener(path, "rb") as fh:
            return fh.read()
    return source.read()


def _load_json_array(source, what: str) -> list:
    try:
        data = json.loads(_read(source).decode("utf-8"))
    except UnicodeDecodeError as exc:
        raise DatasetError(f"{what}: invalid UTF-8 at byte {exc.start}") from None
    except json.JSONDecodeError as exc:
        raise DatasetError(f"{what}: invalid JSON ({exc})") from None
    if not isinstance(data, list):
        raise DatasetError(f"{what}: expected a JSON array")
    return data


def _offset(item: dict, iid: str, key: str) -> int:
    if key not in item:
        raise DatasetError(f"{iid}: missing field {key!r}")
    value = item[key]
    if isinstance(value, bool):
        raise DatasetError(f"{iid}: field {key!r} is not an integer offset")
    if isinstance(value, int):
        return value
    if isinstance(value, str):
        try:
            return int(value.strip())
        except ValueError:
            pass
    raise DatasetError(f"{iid}: field {key!r} is not an integer offset: {value!r}")


def _byte_to_char(sentence: str, offset: int, iid: str, key: str) -> int:
    encoded = sentence.encode("utf-8")
    if not 0 <= offset <= len(encoded):
        raise DatasetError(f"{iid}: field {key!r} out of bounds ({offset} > {len(encoded)} bytes)")
    try:
        return len(encoded[:offset].decode("utf-8"))
    except UnicodeDecodeError:
        raise DatasetError(f"{iid}: field {key!r} splits a UTF-8 character") from None


def parse_dataset(source, offsets: str = "char") -> list[WicInstance]:
    """Parse a JSON array of pair records into ``WicInstance`` objects.

    ``offsets="byte"`` reads span offsets as UTF-8 byte positions and converts
    them to character positions. Unknown fields are ignored.
    """
    if offsets not in ("char", "byte"):
        raise ValueError(f"offsets must be 'char' or 'byte', got {offsets!r}")
    items = _load_json_array(source, "dataset")
    instances = []
    seen = set()
    for pos, item in enumerate(items):
        if not isinstance(item, dict):
            raise DatasetError(f"record {pos}: expected an object")
        if "id" not in item:
            raise DatasetError(f"record {pos}: missing field 'id'")
        iid = str(item["id"])
        if iid in seen:
            raise DatasetError(f"{iid}: duplicate id")
        seen.add(iid)
        sentences = {}
        for key in ("sentence1", "sentence2"):
            if key not in item:
                raise DatasetError(f"{iid}: missing field {key!r}")
            if not isinstance(item[key], str):
                raise DatasetError(f"{iid}: field {key!r} must be a string")
            sentences[key] = item[key]
        spans = []
        for k in (1, 2):
            sentence = sentences[f"sentence{k}"]
            start = _offset(item, iid, f"start{k}")
            end = _offset(item, iid, f"end{k}")
            if offsets == "byte":
                start = _byte_to_char(sentence, start, iid, f"start{k}")
                end = _byte_to_char(sentence, end, iid, f"end{k}")
            if not 0 <= start < len(sentence):
                raise DatasetError(f"{iid}: field 'start{k}' out of bounds ({start}, length {len(sentence)})")
            if not start < end <= len(sentence):
                raise DatasetError(f"{iid}: field 'end{k}' out of bounds ({end}, start {start}, "
                                   f"length {len(sentence)})")
            spans.append((start, end))
        instances.append(WicInstance(iid, sentences["sentence1"], sentences["sentence2"],
                                     spans[0], spans[1]))
    return instances


def parse_gold(source) -> dict[str, bool]:
    """Parse ``[{"id": ..., "tag": "T"|"F"|"TRUE"|"FALSE"}]`` into id -> bool."""
    items = _load_json_array(source, "gold")
    gold: dict[str, bool] = {}
    for pos, item in enumerate(items):
        if not isinstance(item, dict) or "id" not in item or "tag" not in item:
            raise DatasetError(f"gold record {pos}: expected an object with 'id' and 'tag'")
        iid = str(item["id"])
        tag = str(item["tag"]).upper()
        if tag not in _TAGS:
            raise DatasetError(f"{iid}: unknown tag {item['tag']!r}")
        if iid in gold:
            raise DatasetError(f"{iid}: duplicate id in gold file")
        gold[iid] = _TAGS[tag]
    return gold


def attach_gold(instances: Iterable[WicInstance], gold: Mapping[str, bool]) -> list[WicInstance]:
    """Join tags onto instances; any id present on only one side is an error."""
    instances = list(instances)
    ids = {inst.id for inst in instances}
    no_tag = sorted(ids - set(gold))
    no_inst = sorted(set(gold) - ids)
    if no_tag or no_inst:
        parts = []
        if no_tag:
            parts.append(f"instances without gold: {', '.join(no_tag)}")
        if no_inst:
            parts.append(f"gold ids without instance: {', '.join(no_inst)}")
        raise DatasetError("; ".join(parts))
    return [WicInstance(i.id, i.sentence1, i.sentence2, i.span1, i.span2, gold[i.id])
            for i in instances]


def dump_dataset(instances: Iterable[WicInstance]) -> str:
    records = [
        {"id": i.id, "sentence1": i.sentence1, "sentence2": i.sentence2,
         "start1": i.span1[0], "end1": i.span1[1], "start2": i.span2[0], "end2": i.span2[1]}
        for i in instances
    ]
    return json.dumps(records, ensure_ascii=False, indent=1) + "\n"


def dump_gold(gold: Mapping[str, bool]) -> str:
    return json.dumps([{"id": k, "tag": "T" if v else "F"} for k, v in gold.items()],
                      ensure_ascii=False, indent=1) + "\n"


def mini_path(name: str = "") -> str:
    """Filesystem path of the bundled mini dataset directory (or a file in it)."""
    root = resources.files("wicdis").joinpath("data/mini")
    return os.fspath(root.joinpath(name) if name else root)
