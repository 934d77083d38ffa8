"""Gender tallies, time series, national scores, calibration, and the
per-language analyses."""

from __future__ import annotations

from collections import Counter, defaultdict
from collections.abc import Callable, Iterable
from dataclasses import dataclass, field

from .culture import CultureAtlas, CultureCluster
from .models import Gender, GenderKind, HumanRecord, Precision, qid_num
from .stats import CorrelationResult, OlsFit, ols, pearson, spearman

DECADE = 10
CENTURY = 100
MILLENNIUM = 1000

FEMALE_SET = frozenset({GenderKind.FEMALE})
MALE_SET = frozenset({GenderKind.MALE})
NONBINARY_SET = frozenset(
    k for k in GenderKind
    if k not in (GenderKind.MALE, GenderKind.FEMALE, GenderKind.UNKNOWN)
)


class UndefinedRatioError(ValueError):
    pass


class CalibrationError(ValueError):
    pass


@dataclass
class GenderTally:
    counts: Counter = field(default_factory=Counter)

    def add(self, gender: Gender, n: int = 1) -> None:
        self.counts[gender.kind] += n

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    @property
    def known_total(self) -> int:
        return self.total - self.counts.get(GenderKind.UNKNOWN, 0)

    def merge(self, other: "GenderTally") -> "GenderTally":
        merged = Counter(self.counts)
        merged.update(other.counts)
        return GenderTally(merged)

    def __getitem__(self, kind: GenderKind) -> int:
        return self.counts.get(kind, 0)


def gender_ratio(tally: GenderTally, class_set: Iterable[GenderKind] = FEMALE_SET) -> float:
    """Share of the given classes among known-gender records."""
    known = tally.known_total
    if known == 0:
        raise UndefinedRatioError("no known-gender records in tally")
    return sum(tally[k] for k in class_set) / known


def bucket_of(year: int, width: int) -> int:
    """Start year of the bucket containing ``year`` (floor toward -inf)."""
    return (year // width) * width


@dataclass
class RatioSeries:
    bucket_width: int
    anchor: str  # "birth" or "death"
    points: dict[int, GenderTally] = field(default_factory=dict)

    def sorted_points(self) -> list[tuple[int, GenderTally]]:
        return sorted(self.points.items())


def tally_records(records: Iterable[HumanRecord]) -> GenderTally:
    tally = GenderTally()
    for record in records:
        tally.add(record.gender)
    return tally


def build_series(
    records: Iterable[HumanRecord],
    anchor: str = "birth",
    width: int = DECADE,
    record_filter: Callable[[HumanRecord], bool] | None = None,
) -> RatioSeries:
    """Bucket known-date records into a gender time series.

    Only dates at Year precision are bucketed; coarser dates are excluded
    from the series (the records themselves are untouched).
    """
    if anchor not in ("birth", "death"):
        raise ValueError(f"anchor must be 'birth' or 'death', got {anchor!r}")
    series = RatioSeries(width, anchor)
    for record in records:
        if record_filter is not None and not record_filter(record):
            continue
        date = record.birth if anchor == "birth" else record.death
        if date is None or date.precision is not Precision.YEAR:
            continue
        bucket = bucket_of(date.year, width)
        tally = series.points.get(bucket)
        if tally is None:
            tally = series.points[bucket] = GenderTally()
        tally.add(record.gender)
    return series


@dataclass(frozen=True)
class NationalScore:
    country: str
    female_ratio: float
    n: int
    start_decade: int


def national_scores(
    records: Iterable[HumanRecord],
    start_decade: int,
    min_count: int = 10,
    *,
    use_citizenship: bool = False,
) -> list[NationalScore]:
    """Per-country female ratio over known-gender records born in or after
    ``start_decade``; sorted descending by ratio, ties by country id."""
    tallies: dict[str, GenderTally] = defaultdict(GenderTally)
    for record in records:
        if record.birth is None or record.birth.precision is not Precision.YEAR:
            continue
        if bucket_of(record.birth.year, DECADE) < start_decade:
            continue
        if not record.gender.is_known:
            continue
        countries = record.citizenships if use_citizenship else (
            (record.country,) if record.country else ()
        )
        for country in countries:
            tallies[country].add(record.gender)
    scores = [
        NationalScore(country, gender_ratio(tally), tally.known_total, start_decade)
        for country, tally in tallies.items()
        if tally.known_total >= min_count
    ]
    scores.sort(key=lambda s: (-s.female_ratio, qid_num(s.country)))
    return scores


def calibrate_start_decade(
    records: Iterable[HumanRecord],
    external: dict[str, float],
    grid: Iterable[int],
    min_count: int = 10,
    min_shared: int = 5,
    *,
    use_citizenship: bool = False,
) -> tuple[int, float, float]:
    """Grid-search the start decade maximizing Spearman correlation with an
    external national index; ties resolve to the earliest decade."""
    records = list(records)
    decades = sorted(set(grid))
    if not decades:
        raise CalibrationError("empty calibration grid")
    best: tuple[int, CorrelationResult] | None = None
    for decade in decades:
        scores = national_scores(records, decade, min_count,
                                 use_citizenship=use_citizenship)
        shared = [(s.female_ratio, external[s.country])
                  for s in scores if s.country in external]
        if len(shared) < min_shared:
            raise CalibrationError(
                f"only {len(shared)} countries shared with the external index "
                f"at decade {decade} (need {min_shared})"
            )
        result = spearman([w for w, _ in shared], [e for _, e in shared])
        if best is None or result.coefficient > best[1].coefficient:
            best = (decade, result)
    decade, result = best
    return decade, result.coefficient, result.p_value


def population_correlation(
    series: RatioSeries, population: Iterable[tuple[int, float]]
) -> CorrelationResult:
    """Pearson r between per-bucket biography totals and population totals."""
    pop_by_bucket: dict[int, float] = defaultdict(float)
    for year, count in population:
        pop_by_bucket[bucket_of(int(year), series.bucket_width)] += float(count)
    shared = sorted(set(series.points) & set(pop_by_bucket))
    if len(shared) < 3:
        raise ValueError(f"only {len(shared)} overlapping buckets (need 3)")
    biographies = [series.points[b].total for b in shared]
    populations = [pop_by_bucket[b] for b in shared]
    return pearson(biographies, populations)


DEFAULT_WIKI_EXCLUSIONS = frozenset({
    # codes ending in "wiki" that are not language Wikipedias
    "commonswiki", "specieswiki", "metawiki", "mediawikiwiki", "wikidatawiki",
    "incubatorwiki", "outreachwiki", "sourceswiki", "foundationwiki",
    "wikimaniawiki", "betawikiversity",
})


def wikipedia_sitelinks(
    record: HumanRecord, exclusions: frozenset[str] = DEFAULT_WIKI_EXCLUSIONS
) -> frozenset[str]:
    return frozenset(code for code in record.sitelinks if code not in exclusions)


@dataclass(frozen=True)
class LanguageStats:
    wiki: str
    total: int
    female_ratio: float | None
    nonbinary_ratio: float | None


def by_language(
    records: Iterable[HumanRecord],
    top_n: int = 50,
    exclusions: frozenset[str] = DEFAULT_WIKI_EXCLUSIONS,
) -> list[LanguageStats]:
    """Per-wiki gender breakdown; a record counts once toward every wiki in
    its sitelinks.  Restricted to the ``top_n`` wikis by biography count."""
    tallies: dict[str, GenderTally] = defaultdict(GenderTally)
    for record in records:
        for wiki in wikipedia_sitelinks(record, exclusions):
            tallies[wiki].add(record.gender)
    top = sorted(tallies.items(), key=lambda kv: (-kv[1].total, kv[0]))[:top_n]
    stats = []
    for wiki, tally in top:
        if tally.known_total > 0:
            female = gender_ratio(tally, FEMALE_SET)
            nonbinary = gender_ratio(tally, NONBINARY_SET)
        else:
            female = nonbinary = None
        stats.append(LanguageStats(wiki, tally.total, female, nonbinary))
    return stats


@dataclass(frozen=True)
class UniquenessDelta:
    wiki: str
    unique_female_ratio: float
    many_female_ratio: float
    delta: float
    unique_count: int


def uniqueness_deltas(
    records: Iterable[HumanRecord],
    min_count: int = 10,
    exclusions: frozenset[str] = DEFAULT_WIKI_EXCLUSIONS,
) -> tuple[list[UniquenessDelta], list[str]]:
    """Per wiki, the female-ratio difference between items existing only in
    that wiki and items that also exist elsewhere.

    Wikis where either partition has no known-gender items are omitted and
    listed in the returned warnings.
    """
    unique: dict[str, GenderTally] = defaultdict(GenderTally)
    many: dict[str, GenderTally] = defaultdict(GenderTally)
    for record in records:
        links = wikipedia_sitelinks(record, exclusions)
        target = unique if len(links) == 1 else many
        for wiki in links:
            target[wiki].add(record.gender)
    deltas = []
    warnings = []
    for wiki in sorted(set(unique) | set(many)):
        u, m = unique.get(wiki, GenderTally()), many.get(wiki, GenderTally())
        if u.known_total < max(min_count, 1) or m.known_total < max(min_count, 1):
            warnings.append(
                f"{wiki}: undefined or underpowered partition "
                f"(unique n={u.known_total}, many n={m.known_total})"
            )
            continue
        uf, mf = gender_ratio(u), gender_ratio(m)
        deltas.append(UniquenessDelta(wiki, uf, mf, uf - mf, u.known_total))
    deltas.sort(key=lambda d: (-d.delta, d.wiki))
    return deltas, warnings


def sitelink_culture_aggregate(
    records: Iterable[HumanRecord],
    atlas: CultureAtlas,
    exclusions: frozenset[str] = DEFAULT_WIKI_EXCLUSIONS,
) -> dict[CultureCluster, GenderTally]:
    """Tally each item once per cluster in which it has at least one
    sitelink; items with no mapped sitelink fall under Unassigned."""
    tallies: dict[CultureCluster, GenderTally] = defaultdict(GenderTally)
    for record in records:
        links = wikipedia_sitelinks(record, exclusions)
        if not links:
            continue
        clusters = {atlas.language_map.get(w, CultureCluster.UNASSIGNED) for w in links}
        if clusters != {CultureCluster.UNASSIGNED}:
            clusters.discard(CultureCluster.UNASSIGNED)
        for cluster in clusters:
            tallies[cluster].add(record.gender)
    return dict(tallies)


@dataclass(frozen=True)
class SizeStats:
    wiki: str
    mean_bytes_male: float
    mean_bytes_female: float
    n_male: int
    n_female: int


@dataclass(frozen=True)
class SizeAnalysis:
    stats: list[SizeStats]
    fit: OlsFit
    unjoined_rows: int


def article_size_stats(
    records: Iterable[HumanRecord],
    sizes: Iterable[tuple[str, str, int]],
    top_n: int = 25,
    min_count: int = 10,
    exclusions: frozenset[str] = DEFAULT_WIKI_EXCLUSIONS,
) -> SizeAnalysis:
    """Mean article bytes by binary gender per wiki, with an OLS fit of the
    female mean on the male mean across wikis.

    The sizes table is keyed ``(wiki, title)`` where the title is the item's
    Q-id, matching the records file.
    """
    records = list(records)
    gender_by_id: dict[str, Gender] = {}
    wikis_by_id: dict[str, frozenset[str]] = {}
    wiki_totals: Counter = Counter()
    for record in records:
        links = wikipedia_sitelinks(record, exclusions)
        gender_by_id[record.id] = record.gender
        wikis_by_id[record.id] = links
        for wiki in links:
            wiki_totals[wiki] += 1

    sums: dict[str, dict[GenderKind, list[float]]] = defaultdict(
        lambda: {GenderKind.MALE: [0.0, 0], GenderKind.FEMALE: [0.0, 0]}
    )
    unjoined = 0
    for wiki, title, nbytes in sizes:
        gender = gender_by_id.get(title)
        if gender is None or wiki not in wikis_by_id.get(title, frozenset()):
            unjoined += 1
            continue
        if gender.kind not in (GenderKind.MALE, GenderKind.FEMALE):
            continue
        cell = sums[wiki][gender.kind]
        cell[0] += float(nbytes)
        cell[1] += 1

    top = {w for w, _ in wiki_totals.most_common()[:top_n]} if top_n else set(sums)
    top_sorted = sorted(top, key=lambda w: (-wiki_totals[w], w))
    stats = []
    for wiki in top_sorted:
        male_sum, male_n = sums.get(wiki, {}).get(GenderKind.MALE, (0.0, 0))
        female_sum, female_n = sums.get(wiki, {}).get(GenderKind.FEMALE, (0.0, 0))
        if male_n < min_count or female_n < min_count:
            continue
        stats.append(SizeStats(wiki, male_sum / male_n, female_sum / female_n,
                               male_n, female_n))
    # Fewer than two qualifying wikis propagates the OLS n < 2 error.
    fit = ols([s.mean_bytes_male for s in stats],
              [s.mean_bytes_female for s in stats])
    return SizeAnalysis(stats, fit, unjoined)
