"""CSV/JSON round-trip of commit records.

CSV columns (fixed order)::

    id, parent_ids, author_timestamp, message,
    files_added_gross, files_modified_gross, files_deleted_gross, files_renamed_gross,
    files_added_net, files_modified_net, files_deleted_net, files_renamed_net,
    lines_added_gross, lines_deleted_gross, lines_added_net, lines_deleted_net,
    keyword_counts, density, is_merge, is_initial, sojourn_seconds

``parent_ids`` is space separated, ``keyword_counts`` is ``kw=n`` pairs joined
by ``;`` in the original keyword order, booleans are ``0``/``1`` and an absent
sojourn time is an empty cell. Lines starting with ``#`` before the header
are metadata comments and are skipped on import. Extra columns (for example
``label``) are ignored by :func:`import_dataset`.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict
from pathlib import Path

from procscore.errors import EmptyDataset, InputError
from procscore.mining.records import COUNTER_FIELDS, CommitRecord

CSV_HEADER: tuple[str, ...] = (
    "id", "parent_ids", "author_timestamp", "message",
    *COUNTER_FIELDS,
    "keyword_counts", "density", "is_merge", "is_initial", "sojourn_seconds",
)


def _resolve_format(path: Path, fmt: str | None) -> str:
    fmt = (fmt or path.suffix.lstrip(".") or "csv").lower()
    if fmt not in ("csv", "json"):
        raise InputError(f"unsupported dataset format {fmt!r}")
    return fmt


def record_to_row(record: CommitRecord) -> dict[str, str]:
    row = {
        "id": record.id,
        "parent_ids": " ".join(record.parent_ids),
        "author_timestamp": str(record.author_timestamp),
        "message": record.message,
        "keyword_counts": ";".join(f"{k}={v}" for k, v in record.keyword_counts.items()),
        "density": repr(float(record.density)),
        "is_merge": "1" if record.is_merge else "0",
        "is_initial": "1" if record.is_initial else "0",
        "sojourn_seconds": "" if record.sojourn_seconds is None else str(record.sojourn_seconds),
    }
    for name in COUNTER_FIELDS:
        row[name] = str(getattr(record, name))
    return row


def row_to_record(row: dict[str, str]) -> CommitRecord:
    try:
        kw = {}
        if row["keyword_counts"]:
            for pair in row["keyword_counts"].split(";"):
                key, value = pair.split("=")
                kw[key] = int(value)
        sojourn = row["sojourn_seconds"]
        return CommitRecord(
            id=row["id"],
            parent_ids=tuple(row["parent_ids"].split()),
            author_timestamp=int(row["author_timestamp"]),
            message=row["message"],
            keyword_counts=kw,
            density=float(row["density"]),
            is_merge=row["is_merge"] in ("1", "true", "True"),
            is_initial=row["is_initial"] in ("1", "true", "True"),
            sojourn_seconds=None if sojourn in ("", None) else int(sojourn),
            **{name: int(row[name]) for name in COUNTER_FIELDS},
        )
    except (KeyError, ValueError) as exc:
        raise InputError(f"malformed commit row {row.get('id', '?')}: {exc}") from None


def record_to_json(record: CommitRecord) -> dict:
    data = asdict(record)
    data["parent_ids"] = list(record.parent_ids)
    return data


def record_from_json(data: dict) -> CommitRecord:
    data = dict(data)
    data["parent_ids"] = tuple(data["parent_ids"])
    return CommitRecord(**data)


def export_dataset(records, path, format: str | None = None, comment: str | None = None,
                   extra_columns: dict[str, list[str]] | None = None) -> Path:
    """Write records as CSV or JSON; ``comment`` becomes a leading ``#`` line (CSV)
    or a top-level ``meta`` entry (JSON)."""
    records = list(records)
    if not records:
        raise EmptyDataset("refusing to export an empty dataset")
    path = Path(path)
    fmt = _resolve_format(path, format)
    extra_columns = extra_columns or {}
    if fmt == "csv":
        buf = io.StringIO()
        if comment:
            buf.write(f"# {comment}\n")
        writer = csv.DictWriter(buf, fieldnames=[*CSV_HEADER, *extra_columns], lineterminator="\r\n")
        writer.writeheader()
        for i, record in enumerate(records):
            row = record_to_row(record)
            for name, values in extra_columns.items():
                row[name] = values[i]
            writer.writerow(row)
        text = buf.getvalue()
    else:
        items = []
        for i, record in enumerate(records):
            item = record_to_json(record)
            for name, values in extra_columns.items():
                item[name] = values[i]
            items.append(item)
        doc = {"meta": comment, "records": items} if comment else items
        text = json.dumps(doc, indent=2, sort_keys=False) + "\n"
    try:
        path.write_text(text, encoding="utf-8", newline="")
    except OSError as exc:
        raise InputError(f"cannot write {path}: {exc}") from None
    return path


def read_rows(path) -> list[dict]:
    """Raw rows (CSV dicts or JSON objects) including any extra columns."""
    path = Path(path)
    fmt = _resolve_format(path, None)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from None
    if fmt == "json":
        doc = json.loads(text)
        return list(doc["records"] if isinstance(doc, dict) else doc)
    lines = text.splitlines(keepends=True)
    while lines and lines[0].startswith("#"):
        lines.pop(0)
    return list(csv.DictReader(io.StringIO("".join(lines), newline="")))


def import_dataset(path) -> list[CommitRecord]:
    path = Path(path)
    rows = read_rows(path)
    if path.suffix.lower() == ".json":
        fields = set(CommitRecord.__dataclass_fields__)
        return [record_from_json({k: v for k, v in r.items() if k in fields}) for r in rows]
    return [row_to_record(r) for r in rows]
