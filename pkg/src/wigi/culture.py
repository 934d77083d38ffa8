"""Inglehart-Welzel cultural cluster mapping and the consensus rule."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .models import HumanRecord


class CultureCluster(Enum):
    ENGLISH_SPEAKING = "EnglishSpeaking"
    LATIN_AMERICA = "LatinAmerica"
    CATHOLIC_EUROPE = "CatholicEurope"
    PROTESTANT_EUROPE = "ProtestantEurope"
    AFRICAN = "African"
    ISLAMIC = "Islamic"
    SOUTH_ASIAN = "SouthAsian"
    ORTHODOX = "Orthodox"
    CONFUCIAN = "Confucian"
    # Constructed-language editions get their own bucket in the language
    # analyses; Unassigned is reported separately, never tallied as a culture.
    CONSTRUCTED = "Constructed"
    UNASSIGNED = "Unassigned"


CONCRETE_CLUSTERS = tuple(
    c for c in CultureCluster if c is not CultureCluster.UNASSIGNED
)


class ConsensusOutcome(Enum):
    UNANIMOUS = "unanimous"
    MAJORITY = "majority"
    CONFLICTED = "conflicted"
    NO_DATA = "no_data"


class AtlasFormatError(ValueError):
    def __init__(self, message: str, path: str | Path, row: int):
        super().__init__(f"{path}, row {row}: {message}")
        self.row = row


@dataclass
class CultureAtlas:
    entity_map: dict[str, CultureCluster] = field(default_factory=dict)
    language_map: dict[str, CultureCluster] = field(default_factory=dict)
    duplicate_warnings: int = 0


def _load_map(path: str | Path) -> tuple[dict[str, CultureCluster], int]:
    mapping: dict[str, CultureCluster] = {}
    duplicates = 0
    for row, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise AtlasFormatError("expected key<TAB>cluster", path, row)
        key, cluster_name = parts[0].strip(), parts[1].strip()
        try:
            cluster = CultureCluster(cluster_name)
        except ValueError:
            raise AtlasFormatError(f"unknown cluster {cluster_name!r}", path, row) from None
        if cluster is CultureCluster.UNASSIGNED:
            raise AtlasFormatError("Unassigned cannot be mapped explicitly", path, row)
        if key in mapping:
            duplicates += 1
        mapping[key] = cluster
    return mapping, duplicates


def load_atlas(entity_map_path: str | Path, language_map_path: str | Path) -> CultureAtlas:
    """Load the two tab-separated mapping files; duplicate keys are last-wins."""
    entity_map, dup_e = _load_map(entity_map_path)
    language_map, dup_l = _load_map(language_map_path)
    return CultureAtlas(entity_map, language_map, dup_e + dup_l)


def _variable_vote(
    values: frozenset[str] | set[str], atlas: CultureAtlas
) -> CultureCluster | None:
    """One variable's vote: its single supported cluster, or abstain.

    A variable whose mapped values span several clusters abstains, so a noisy
    multi-citizenship record cannot dominate the consensus.
    """
    clusters = {atlas.entity_map[v] for v in values if v in atlas.entity_map}
    if len(clusters) == 1:
        return next(iter(clusters))
    return None


def consensus_votes(record: HumanRecord, atlas: CultureAtlas) -> list[CultureCluster]:
    """Votes cast by the country, citizenship, and ethnicity variables."""
    country = frozenset((record.country,)) if record.country else frozenset()
    votes = [
        _variable_vote(country, atlas),
        _variable_vote(record.citizenships, atlas),
        _variable_vote(record.ethnic_groups, atlas),
    ]
    return [v for v in votes if v is not None]


def resolve_consensus(
    votes: list[CultureCluster],
) -> tuple[CultureCluster, ConsensusOutcome]:
    """Unanimity, else strict majority, else Unassigned."""
    if not votes:
        return CultureCluster.UNASSIGNED, ConsensusOutcome.NO_DATA
    counts = Counter(votes)
    if len(counts) == 1:
        return votes[0], ConsensusOutcome.UNANIMOUS
    cluster, top = counts.most_common(1)[0]
    if top * 2 > len(votes):
        return cluster, ConsensusOutcome.MAJORITY
    return CultureCluster.UNASSIGNED, ConsensusOutcome.CONFLICTED


def consensus_culture(
    record: HumanRecord, atlas: CultureAtlas
) -> tuple[CultureCluster, ConsensusOutcome]:
    return resolve_consensus(consensus_votes(record, atlas))


def language_culture(wiki_code: str, atlas: CultureAtlas) -> CultureCluster:
    return atlas.language_map.get(wiki_code, CultureCluster.UNASSIGNED)
