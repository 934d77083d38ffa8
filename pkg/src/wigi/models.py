"""Core record types shared across the pipeline."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum

_QID_RE = re.compile(r"^Q[1-9][0-9]*$")
_PID_RE = re.compile(r"^P[1-9][0-9]*$")


class InvalidIdError(ValueError):
    pass


def check_qid(value: str) -> str:
    """Validate a Q-item identifier and return it unchanged."""
    if not _QID_RE.match(value):
        raise InvalidIdError(f"not a valid entity id: {value!r}")
    return value


def check_pid(value: str) -> str:
    if not _PID_RE.match(value):
        raise InvalidIdError(f"not a valid property id: {value!r}")
    return value


def qid_num(value: str) -> int:
    """Numeric suffix of a Q-id, used for stable sorting."""
    return int(value[1:])


class GenderKind(Enum):
    MALE = "male"
    FEMALE = "female"
    TRANS_FEMALE = "transfemale"
    TRANS_MALE = "transmale"
    INTERSEX = "intersex"
    GENDERQUEER = "genderqueer"
    FAAFAFINE = "faafafine"
    KATHOEY = "kathoey"
    OTHER_NONBINARY = "nonbinary"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class Gender:
    """A gender classification; ``entity`` is set only for OTHER_NONBINARY."""

    kind: GenderKind
    entity: str | None = None

    def __post_init__(self) -> None:
        if self.kind is GenderKind.OTHER_NONBINARY:
            if self.entity is None:
                raise ValueError("OTHER_NONBINARY requires the source entity id")
            check_qid(self.entity)
        elif self.entity is not None:
            raise ValueError(f"{self.kind} carries no entity id")

    @property
    def is_known(self) -> bool:
        return self.kind is not GenderKind.UNKNOWN

    @property
    def is_nonbinary(self) -> bool:
        return self.kind not in (GenderKind.MALE, GenderKind.FEMALE, GenderKind.UNKNOWN)

    def token(self) -> str:
        if self.kind is GenderKind.OTHER_NONBINARY:
            return f"nonbinary:{self.entity}"
        return self.kind.value

    @classmethod
    def from_token(cls, token: str) -> "Gender":
        if token.startswith("nonbinary:"):
            return cls(GenderKind.OTHER_NONBINARY, token.split(":", 1)[1])
        try:
            return cls(GenderKind(token))
        except ValueError:
            raise ValueError(f"unknown gender token: {token!r}") from None


MALE = Gender(GenderKind.MALE)
FEMALE = Gender(GenderKind.FEMALE)
UNKNOWN_GENDER = Gender(GenderKind.UNKNOWN)


class Precision(Enum):
    YEAR = "year"
    DECADE = "decade"
    CENTURY = "century"
    MILLENNIUM = "millennium"
    COARSER = "coarser"


@dataclass(frozen=True)
class YearValue:
    """A possibly imprecise year in astronomical numbering (year 0 exists)."""

    year: int
    precision: Precision = Precision.YEAR


@dataclass(frozen=True)
class HumanRecord:
    id: str
    gender: Gender = UNKNOWN_GENDER
    birth: YearValue | None = None
    death: YearValue | None = None
    place_of_birth: str | None = None
    citizenships: frozenset[str] = frozenset()
    ethnic_groups: frozenset[str] = frozenset()
    country: str | None = None
    sitelinks: frozenset[str] = frozenset()
    flags: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self) -> None:
        check_qid(self.id)
        for code in self.sitelinks:
            if code != code.lower() or not code.endswith("wiki"):
                raise ValueError(f"bad sitelink code {code!r} on {self.id}")


@dataclass(frozen=True)
class PlaceRecord:
    id: str
    is_country: bool = False
    containing_country: str | None = None
