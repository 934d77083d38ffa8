"""Streaming extraction of human and place records from entity dumps.

The dump may be line-delimited JSON (one entity per line) or the
array-wrapped form (leading ``[``, per-line entries with trailing commas,
trailing ``]``).  Parsing is line-at-a-time so peak memory tracks the
largest single entity, not the dump length.
"""

from __future__ import annotations

import csv
import json
from collections.abc import Callable, Iterable, Iterator
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import IO

from .models import (
    Gender,
    GenderKind,
    HumanRecord,
    PlaceRecord,
    Precision,
    UNKNOWN_GENDER,
    YearValue,
    check_pid,
    check_qid,
    qid_num,
)

_RANK_ORDER = {"preferred": 0, "normal": 1, "deprecated": 2}

# Wikibase time precision codes: 9 = year, 8 = decade, 7 = century,
# 6 = millennium; anything day/month-level is still year-exact for us.
_PRECISION_BY_CODE = {
    6: Precision.MILLENNIUM,
    7: Precision.CENTURY,
    8: Precision.DECADE,
}


class DumpFormatError(ValueError):
    """Raised in strict mode on a malformed dump line, or on non-UTF-8 input."""

    def __init__(self, message: str, line_number: int | None = None,
                 byte_offset: int | None = None):
        super().__init__(message)
        self.line_number = line_number
        self.byte_offset = byte_offset


class RecordsFileError(ValueError):
    """Raised for a structurally invalid records CSV; carries the row number."""

    def __init__(self, message: str, row: int | None = None):
        super().__init__(message if row is None else f"row {row}: {message}")
        self.row = row


@dataclass
class PropertyConfig:
    """Property/value vocabulary of the dump; defaults match Wikidata."""

    instance_of: str = "P31"
    human_value: str = "Q5"
    gender: str = "P21"
    birth_date: str = "P569"
    death_date: str = "P570"
    place_of_birth: str = "P19"
    citizenship: str = "P27"
    ethnic_group: str = "P172"
    country_of_place: str = "P17"
    country_value: str = "Q6256"
    gender_values: dict[str, GenderKind] = field(default_factory=lambda: {
        "Q6581097": GenderKind.MALE,
        "Q6581072": GenderKind.FEMALE,
        "Q1052281": GenderKind.TRANS_FEMALE,
        "Q2449503": GenderKind.TRANS_MALE,
        "Q1097630": GenderKind.INTERSEX,
        "Q48270": GenderKind.GENDERQUEER,
        "Q1399232": GenderKind.FAAFAFINE,
        "Q3277905": GenderKind.KATHOEY,
    })
    # Gender value ids known to denote a nonbinary identity but without a
    # dedicated class; they map to OTHER_NONBINARY instead of UNKNOWN.
    nonbinary_values: set[str] = field(default_factory=set)

    def __post_init__(self) -> None:
        for name in ("instance_of", "gender", "birth_date", "death_date",
                     "place_of_birth", "citizenship", "ethnic_group",
                     "country_of_place"):
            check_pid(getattr(self, name))
        check_qid(self.human_value)
        check_qid(self.country_value)
        for qid in list(self.gender_values) + list(self.nonbinary_values):
            check_qid(qid)

    def classify_gender(self, value_id: str) -> Gender:
        """Total mapping: unknown ids become OTHER_NONBINARY or UNKNOWN."""
        kind = self.gender_values.get(value_id)
        if kind is not None:
            return Gender(kind)
        if value_id in self.nonbinary_values:
            return Gender(GenderKind.OTHER_NONBINARY, value_id)
        return UNKNOWN_GENDER

    @classmethod
    def load(cls, path: str | Path) -> "PropertyConfig":
        """Read ``key = value`` overrides; unknown keys are rejected.

        ``gender_values`` entries use ``gender.<QID> = <kind token>``;
        ``nonbinary.<QID> = true`` adds a flagged nonbinary id.
        """
        config = cls()
        scalar_keys = {f.name for f in fields(cls)} - {"gender_values", "nonbinary_values"}
        for raw in Path(path).read_text(encoding="utf-8").splitlines():
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            key, _, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if key in scalar_keys:
                setattr(config, key, value)
            elif key.startswith("gender."):
                config.gender_values[check_qid(key[len("gender."):])] = GenderKind(value)
            elif key.startswith("nonbinary."):
                config.nonbinary_values.add(check_qid(key[len("nonbinary."):]))
            else:
                raise ValueError(f"unknown property config key: {key!r}")
        config.__post_init__()
        return config


@dataclass
class IngestStats:
    entities_seen: int = 0
    humans: int = 0
    places: int = 0
    skipped: int = 0
    malformed: int = 0
    gender_tie_flags: int = 0
    malformed_lines: list[tuple[int, str]] = field(default_factory=list)

    def merge(self, other: "IngestStats") -> None:
        self.entities_seen += other.entities_seen
        self.humans += other.humans
        self.places += other.places
        self.skipped += other.skipped
        self.malformed += other.malformed
        self.gender_tie_flags += other.gender_tie_flags
        self.malformed_lines.extend(other.malformed_lines)


def _ranked_value_ids(entity: dict, prop: str) -> list[str]:
    """Entity-value ids of the given property's claims, best rank first.

    Deprecated claims are dropped; preferred claims, when present, shadow
    normal ones.  Within a rank, dump order is preserved.
    """
    groups: dict[int, list[str]] = {0: [], 1: []}
    for claim in entity.get("claims", {}).get(prop, []):
        rank = _RANK_ORDER.get(claim.get("rank", "normal"), 1)
        if rank >= 2:
            continue
        snak = claim.get("mainsnak", {})
        value = snak.get("datavalue", {}).get("value")
        if isinstance(value, dict) and isinstance(value.get("id"), str):
            groups[rank].append(value["id"])
    return groups[0] if groups[0] else groups[1]


def _ranked_time_values(entity: dict, prop: str) -> list[dict]:
    groups: dict[int, list[dict]] = {0: [], 1: []}
    for claim in entity.get("claims", {}).get(prop, []):
        rank = _RANK_ORDER.get(claim.get("rank", "normal"), 1)
        if rank >= 2:
            continue
        value = claim.get("mainsnak", {}).get("datavalue", {}).get("value")
        if isinstance(value, dict) and "time" in value:
            groups[rank].append(value)
    return groups[0] if groups[0] else groups[1]


def _parse_time(value: dict) -> YearValue | None:
    """Extract the signed year from a Wikibase time value like ``+1952-03-11T...``."""
    time = value.get("time", "")
    if not time or time[0] not in "+-":
        return None
    digits = time[1:].split("-", 1)[0].split("T", 1)[0]
    if not digits.isdigit():
        return None
    year = int(digits) * (-1 if time[0] == "-" else 1)
    code = value.get("precision", 9)
    if code >= 9:
        precision = Precision.YEAR
    else:
        precision = _PRECISION_BY_CODE.get(code, Precision.COARSER)
    return YearValue(year, precision)


def _first_date(entity: dict, prop: str) -> YearValue | None:
    for value in _ranked_time_values(entity, prop):
        parsed = _parse_time(value)
        if parsed is not None:
            return parsed
    return None


def _wikipedia_sitelinks(entity: dict) -> frozenset[str]:
    links = entity.get("sitelinks", {})
    return frozenset(code.lower() for code in links if code.lower().endswith("wiki"))


def classify_entity(
    entity: dict, config: PropertyConfig
) -> HumanRecord | PlaceRecord | None:
    """Map one parsed entity to a record, or ``None`` for an irrelevant entity."""
    entity_id = entity.get("id")
    if not isinstance(entity_id, str):
        raise ValueError("entity without an id")
    check_qid(entity_id)

    instance_ids = _ranked_value_ids(entity, config.instance_of)
    if config.human_value in instance_ids:
        flags: list[str] = []
        gender_ids = _ranked_value_ids(entity, config.gender)
        gender = UNKNOWN_GENDER
        if gender_ids:
            gender = config.classify_gender(gender_ids[0])
            if len(set(gender_ids)) > 1:
                flags.append("gender_tie")
        birth = _first_date(entity, config.birth_date)
        death = _first_date(entity, config.death_date)
        if birth is not None and birth.precision is not Precision.YEAR:
            flags.append("coarse_birth")
        if death is not None and death.precision is not Precision.YEAR:
            flags.append("coarse_death")
        pobs = _ranked_value_ids(entity, config.place_of_birth)
        return HumanRecord(
            id=entity_id,
            gender=gender,
            birth=birth,
            death=death,
            place_of_birth=pobs[0] if pobs else None,
            citizenships=frozenset(_ranked_value_ids(entity, config.citizenship)),
            ethnic_groups=frozenset(_ranked_value_ids(entity, config.ethnic_group)),
            sitelinks=_wikipedia_sitelinks(entity),
            flags=tuple(flags),
        )

    countries = _ranked_value_ids(entity, config.country_of_place)
    is_country = config.country_value in instance_ids
    if is_country or countries:
        return PlaceRecord(
            id=entity_id,
            is_country=is_country,
            containing_country=countries[0] if countries else None,
        )
    return None


def _dump_lines(source: IO[bytes]) -> Iterator[tuple[int, str]]:
    """Yield (line_number, payload) pairs, unwrapping the array dump form."""
    offset = 0
    for number, raw in enumerate(source, start=1):
        try:
            text = raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise DumpFormatError(
                f"non-UTF-8 input at byte offset {offset + exc.start}",
                byte_offset=offset + exc.start,
            ) from exc
        offset += len(raw)
        line = text.strip()
        if line in ("", "[", "]"):
            continue
        yield number, line.rstrip(",")


def stream_entities(
    dump_source: IO[bytes],
    config: PropertyConfig | None = None,
    sink: Callable[[HumanRecord | PlaceRecord], None] | None = None,
    *,
    strict: bool = False,
    threads: int = 1,
    chunk_size: int = 2048,
) -> IngestStats:
    """Stream a dump, pushing each extracted record into ``sink``.

    Lines parse independently, so with ``threads > 1`` they are decoded in
    parallel per chunk; emission order and stats are unchanged.
    """
    config = config or PropertyConfig()
    stats = IngestStats()

    def handle(item: tuple[int, str]) -> HumanRecord | PlaceRecord | str | None:
        number, line = item
        try:
            return classify_entity(json.loads(line), config)
        except (json.JSONDecodeError, ValueError) as exc:
            return f"{exc}"

    def consume(item: tuple[int, str], outcome) -> None:
        number = item[0]
        stats.entities_seen += 1
        if isinstance(outcome, str):
            stats.malformed += 1
            stats.malformed_lines.append((number, outcome))
            if strict:
                raise DumpFormatError(
                    f"malformed entity at line {number}: {outcome}", line_number=number
                )
        elif isinstance(outcome, HumanRecord):
            stats.humans += 1
            if "gender_tie" in outcome.flags:
                stats.gender_tie_flags += 1
            if sink is not None:
                sink(outcome)
        elif isinstance(outcome, PlaceRecord):
            stats.places += 1
            if sink is not None:
                sink(outcome)
        else:
            stats.skipped += 1

    lines = _dump_lines(dump_source)
    if threads <= 1:
        for item in lines:
            consume(item, handle(item))
        return stats

    with ThreadPoolExecutor(max_workers=threads) as pool:
        while True:
            chunk = list(_take(lines, chunk_size))
            if not chunk:
                break
            for item, outcome in zip(chunk, pool.map(handle, chunk)):
                consume(item, outcome)
    return stats


def _take(iterator: Iterator, n: int) -> Iterator:
    for _ in range(n):
        try:
            yield next(iterator)
        except StopIteration:
            return


def build_place_index(places: Iterable[PlaceRecord]) -> dict[str, PlaceRecord]:
    return {place.id: place for place in places}


def resolve_country(
    record: HumanRecord, places: dict[str, PlaceRecord]
) -> str | None:
    """Birthplace country: the birthplace itself if it is a country, else
    its containing country, else ``None``."""
    if record.place_of_birth is None:
        return None
    place = places.get(record.place_of_birth)
    if place is None:
        return None
    if place.is_country:
        return place.id
    return place.containing_country


RECORD_COLUMNS = [
    "qid", "gender", "birth_year", "birth_precision", "death_year",
    "death_precision", "pob_qid", "country_qid", "citizen_qids",
    "ethnic_qids", "sitelinks",
]


def _year_fields(value: YearValue | None) -> tuple[str, str]:
    if value is None:
        return "", ""
    return str(value.year), value.precision.value


def write_records(records: Iterable[HumanRecord], path: str | Path) -> int:
    """Write the canonical records CSV, sorted by numeric id; returns the count."""
    rows = sorted(records, key=lambda r: qid_num(r.id))
    seen: set[str] = set()
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(RECORD_COLUMNS)
        for index, record in enumerate(rows, start=2):
            if record.id in seen:
                raise RecordsFileError(f"duplicate id {record.id}", row=index)
            seen.add(record.id)
            birth_year, birth_precision = _year_fields(record.birth)
            death_year, death_precision = _year_fields(record.death)
            writer.writerow([
                record.id,
                record.gender.token(),
                birth_year,
                birth_precision,
                death_year,
                death_precision,
                record.place_of_birth or "",
                record.country or "",
                "|".join(sorted(record.citizenships)),
                "|".join(sorted(record.ethnic_groups)),
                "|".join(sorted(record.sitelinks)),
            ])
    return len(rows)


def _parse_year(year: str, precision: str, row: int) -> YearValue | None:
    if not year and not precision:
        return None
    try:
        return YearValue(int(year), Precision(precision))
    except ValueError as exc:
        raise RecordsFileError(f"bad year fields ({year!r}, {precision!r})", row=row) from exc


def _split_multi(cell: str) -> frozenset[str]:
    return frozenset(part for part in cell.split("|") if part)


def read_records(path: str | Path) -> list[HumanRecord]:
    records: list[HumanRecord] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header != RECORD_COLUMNS:
            raise RecordsFileError(f"bad header {header!r}", row=1)
        for index, cells in enumerate(reader, start=2):
            if len(cells) != len(RECORD_COLUMNS):
                raise RecordsFileError(
                    f"expected {len(RECORD_COLUMNS)} columns, got {len(cells)}", row=index
                )
            (qid, gender, birth_year, birth_precision, death_year,
             death_precision, pob, country, citizens, ethnics, sitelinks) = cells
            if qid in seen:
                raise RecordsFileError(f"duplicate id {qid}", row=index)
            seen.add(qid)
            try:
                records.append(HumanRecord(
                    id=qid,
                    gender=Gender.from_token(gender),
                    birth=_parse_year(birth_year, birth_precision, index),
                    death=_parse_year(death_year, death_precision, index),
                    place_of_birth=pob or None,
                    citizenships=_split_multi(citizens),
                    ethnic_groups=_split_multi(ethnics),
                    country=country or None,
                    sitelinks=_split_multi(sitelinks),
                ))
            except RecordsFileError:
                raise
            except ValueError as exc:
                raise RecordsFileError(str(exc), row=index) from exc
    return records
