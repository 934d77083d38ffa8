import random

import pytest

from wigi.culture import CultureCluster
from wigi.indicators import (
    CalibrationError,
    GenderTally,
    UndefinedRatioError,
    article_size_stats,
    build_series,
    bucket_of,
    by_language,
    calibrate_start_decade,
    gender_ratio,
    national_scores,
    population_correlation,
    sitelink_culture_aggregate,
    tally_records,
    uniqueness_deltas,
    FEMALE_SET,
    NONBINARY_SET,
)
from wigi.models import Gender, GenderKind, Precision, YearValue
from wigi.stats import ZeroVarianceError, spearman

from conftest import rec


def tally(**counts):
    t = GenderTally()
    for token, n in counts.items():
        t.add(Gender(GenderKind(token)), n)
    return t


class TestGenderRatio:
    def test_known_split_normalization(self):
        t = tally(male=844, female=156)
        assert gender_ratio(t, FEMALE_SET) == pytest.approx(0.156)

    def test_all_female(self):
        assert gender_ratio(tally(female=5), FEMALE_SET) == 1.0

    def test_unknown_only_errors(self):
        with pytest.raises(UndefinedRatioError):
            gender_ratio(tally(unknown=9), FEMALE_SET)

    def test_unknown_excluded_from_denominator(self):
        t = tally(male=844, female=156, unknown=120)
        assert gender_ratio(t, FEMALE_SET) == pytest.approx(0.156)

    def test_ratios_partition_unity(self):
        t = tally(male=7, female=2, intersex=1, genderqueer=1, unknown=4)
        male = gender_ratio(t, {GenderKind.MALE})
        female = gender_ratio(t, FEMALE_SET)
        nonbinary = gender_ratio(t, NONBINARY_SET)
        assert male + female + nonbinary == pytest.approx(1.0, abs=1e-12)

    def test_merge_commutative_associative(self):
        a, b, c = tally(male=1), tally(female=2, unknown=1), tally(male=4)
        assert a.merge(b).counts == b.merge(a).counts
        assert a.merge(b).merge(c).counts == a.merge(b.merge(c)).counts


class TestBucketOf:
    def test_decade(self):
        assert bucket_of(1887, 10) == 1880

    def test_bce_floors_toward_minus_infinity(self):
        assert bucket_of(-44, 10) == -50

    def test_century(self):
        assert bucket_of(2000, 100) == 2000

    def test_millennium(self):
        assert bucket_of(1999, 1000) == 1000


class TestBuildSeries:
    def test_single_bucket_ratio(self):
        records = [rec(f"Q{i}", "female", birth=1905) for i in range(1, 4)]
        records += [rec(f"Q{i}", "male", birth=1905) for i in range(4, 11)]
        series = build_series(records, "birth", 10)
        assert list(series.points) == [1900]
        assert gender_ratio(series.points[1900], FEMALE_SET) == pytest.approx(0.3)

    def test_permutation_invariance(self):
        records = [rec(f"Q{i}", "female" if i % 3 else "male", birth=1900 + i)
                   for i in range(1, 50)]
        series_a = build_series(records, "birth", 10)
        random.Random(1).shuffle(records)
        series_b = build_series(records, "birth", 10)
        assert {k: v.counts for k, v in series_a.points.items()} \
            == {k: v.counts for k, v in series_b.points.items()}

    def test_coarse_precision_excluded(self):
        records = [rec("Q1", birth=YearValue(1800, Precision.CENTURY)),
                   rec("Q2", birth=1805)]
        series = build_series(records, "birth", 10)
        assert series.points[1800].total == 1

    def test_death_anchor(self):
        series = build_series([rec("Q1", death=1850)], "death", 10)
        assert list(series.points) == [1850]

    def test_chunked_merge_equals_whole(self):
        records = [rec(f"Q{i}", "female" if i % 2 else "male", birth=1880 + i % 40)
                   for i in range(1, 200)]
        whole = build_series(records, "birth", 10)
        first = build_series(records[:77], "birth", 10)
        second = build_series(records[77:], "birth", 10)
        merged = {}
        for part in (first, second):
            for bucket, t in part.points.items():
                merged[bucket] = merged.get(bucket, GenderTally()).merge(t)
        assert {k: v.counts for k, v in whole.points.items()} \
            == {k: v.counts for k, v in merged.items()}


def country_cohort(country, females, males, start_year, qid_base):
    records = []
    for i in range(females):
        records.append(rec(f"Q{qid_base + i}", "female", birth=start_year + i % 5,
                           country=country))
    for i in range(males):
        records.append(rec(f"Q{qid_base + females + i}", "male",
                           birth=start_year + i % 5, country=country))
    return records


class TestNationalScores:
    def test_simple_score(self):
        records = country_cohort("Q30", 3, 7, 1950, 1)
        (score,) = national_scores(records, 1900, min_count=5)
        assert score.country == "Q30"
        assert score.female_ratio == pytest.approx(0.3)
        assert score.n == 10

    def test_min_count_threshold(self):
        records = country_cohort("Q30", 2, 3, 1950, 1)
        assert national_scores(records, 1900, min_count=10) == []

    def test_sorted_descending_with_id_ties(self):
        records = country_cohort("Q30", 5, 5, 1950, 1)
        records += country_cohort("Q16", 5, 5, 1950, 100)
        records += country_cohort("Q17", 9, 1, 1950, 200)
        scores = national_scores(records, 1900, min_count=5)
        assert [s.country for s in scores] == ["Q17", "Q16", "Q30"]

    def test_start_decade_monotone_subsets(self):
        records = country_cohort("Q30", 10, 10, 1905, 1)
        records += country_cohort("Q30", 5, 5, 1955, 500)
        early = national_scores(records, 1900, min_count=1)[0].n
        late = national_scores(records, 1950, min_count=1)[0].n
        assert late < early

    def test_citizenship_mode(self):
        records = [rec(f"Q{i}", "female", birth=1950, citizenships=("Q30",))
                   for i in range(1, 12)]
        assert national_scores(records, 1900, min_count=5) == []
        scores = national_scores(records, 1900, min_count=5, use_citizenship=True)
        assert scores[0].country == "Q30"


def calibration_fixture():
    """Post-1910 ratios track the external index exactly; a 1900s cohort
    scrambles the ranking when included."""
    external = {f"Q{k}": float(k) for k in range(1, 7)}
    records = []
    base = 1000
    for k in range(1, 7):
        records += country_cohort(f"Q{k}", 2 * k, 20 - 2 * k, 1915, base)
        base += 100
        # inversion cohort born 1900-1904
        records += country_cohort(f"Q{k}", 2 * (7 - k) * 3, 6 * k, 1900, base)
        base += 100
    return records, external


class TestCalibration:
    def test_returns_constructed_peak(self):
        records, external = calibration_fixture()
        decade, rho, p = calibrate_start_decade(records, external,
                                                [1890, 1900, 1910], min_count=5)
        assert decade == 1910
        assert rho == pytest.approx(1.0)

    def test_matches_exhaustive_oracle(self):
        records, external = calibration_fixture()
        grid = [1890, 1900, 1910]
        best = None
        for d in grid:
            scores = national_scores(records, d, min_count=5)
            shared = [(s.female_ratio, external[s.country]) for s in scores
                      if s.country in external]
            result = spearman([w for w, _ in shared], [e for _, e in shared])
            if best is None or result.coefficient > best[1]:
                best = (d, result.coefficient)
        assert calibrate_start_decade(records, external, grid, min_count=5)[:2] == best

    def test_ties_resolve_to_earliest(self):
        # all births are after 1915, so the 1900 and 1910 start decades see
        # the same cohort and tie at rho 1.0
        records = []
        base = 1000
        for k in range(1, 7):
            records += country_cohort(f"Q{k}", 2 * k, 20 - 2 * k, 1915, base)
            base += 100
        index = {f"Q{k}": float(k) for k in range(1, 7)}
        decade, rho, _ = calibrate_start_decade(records, index, [1910, 1900],
                                                min_count=5)
        assert rho == pytest.approx(1.0)
        assert decade == 1900

    def test_too_few_shared_countries(self):
        records = country_cohort("Q30", 10, 10, 1950, 1)
        with pytest.raises(CalibrationError, match="1 countries"):
            calibrate_start_decade(records, {"Q30": 1.0}, [1900], min_count=5)


class TestPopulationCorrelation:
    def test_proportional(self):
        records = []
        for i, year in enumerate((1900, 1910, 1920, 1930)):
            records += [rec(f"Q{i * 100 + j}", birth=year) for j in range(1, 2 + i)]
        series = build_series(records, "birth", 10)
        population = [(1900, 10.0), (1910, 20.0), (1920, 30.0), (1930, 40.0)]
        assert population_correlation(series, population).coefficient \
            == pytest.approx(1.0)

    def test_anti_proportional(self):
        records = []
        for i, year in enumerate((1900, 1910, 1920)):
            records += [rec(f"Q{i * 100 + j}", birth=year) for j in range(1, 2 + i)]
        series = build_series(records, "birth", 10)
        population = [(1900, 30.0), (1910, 20.0), (1920, 10.0)]
        assert population_correlation(series, population).coefficient \
            == pytest.approx(-1.0)

    def test_too_few_buckets(self):
        series = build_series([rec("Q1", birth=1900)], "birth", 10)
        with pytest.raises(ValueError, match="overlapping"):
            population_correlation(series, [(1900, 1.0), (1910, 2.0)])


class TestByLanguage:
    def test_record_counts_in_every_sitelink(self):
        records = [rec("Q1", "female", sitelinks=("enwiki", "zhwiki"))]
        stats = by_language(records, top_n=10)
        assert {s.wiki for s in stats} == {"enwiki", "zhwiki"}
        assert all(s.total == 1 for s in stats)

    def test_top_n_restriction(self):
        records = [rec(f"Q{i}", sitelinks=("enwiki",)) for i in range(1, 6)]
        records += [rec(f"Q{i}", sitelinks=("dewiki",)) for i in range(6, 9)]
        stats = by_language(records, top_n=1)
        assert [s.wiki for s in stats] == ["enwiki"]

    def test_non_wikipedia_codes_excluded(self):
        records = [rec("Q1", sitelinks=("enwiki", "commonswiki"))]
        assert {s.wiki for s in by_language(records, 10)} == {"enwiki"}


class TestUniqueness:
    def test_delta_computation(self):
        records = []
        qid = 1
        # unique on enwiki: 2F/2M
        for gender in ("female", "female", "male", "male"):
            records.append(rec(f"Q{qid}", gender, sitelinks=("enwiki",)))
            qid += 1
        # many on enwiki: 1F/3M
        for gender in ("female", "male", "male", "male"):
            records.append(rec(f"Q{qid}", gender, sitelinks=("enwiki", "dewiki")))
            qid += 1
        deltas, _ = uniqueness_deltas(records, min_count=1)
        en = next(d for d in deltas if d.wiki == "enwiki")
        assert en.unique_female_ratio == pytest.approx(0.5)
        assert en.many_female_ratio == pytest.approx(0.25)
        assert en.delta == pytest.approx(0.25)
        assert en.unique_count == 4

    def test_identical_partitions_zero_delta(self):
        records = [rec("Q1", "female", sitelinks=("enwiki",)),
                   rec("Q2", "male", sitelinks=("enwiki",)),
                   rec("Q3", "female", sitelinks=("enwiki", "dewiki")),
                   rec("Q4", "male", sitelinks=("enwiki", "dewiki"))]
        deltas, _ = uniqueness_deltas(records, min_count=1)
        en = next(d for d in deltas if d.wiki == "enwiki")
        assert en.delta == pytest.approx(0.0)

    def test_all_unique_wiki_omitted_with_warning(self):
        records = [rec("Q1", "female", sitelinks=("enwiki",)),
                   rec("Q2", "male", sitelinks=("enwiki",))]
        deltas, warnings = uniqueness_deltas(records, min_count=1)
        assert deltas == []
        assert any("enwiki" in w for w in warnings)

    def test_partition_property(self):
        records = [rec(f"Q{i}", sitelinks=("enwiki",) if i % 2 else ("enwiki", "dewiki"))
                   for i in range(1, 21)]
        unique_n = sum(1 for r in records if len(r.sitelinks) == 1)
        many_n = sum(1 for r in records if len(r.sitelinks) > 1)
        assert unique_n + many_n == sum(1 for r in records if r.sitelinks)


class TestSitelinkCultureAggregate:
    def test_counts_once_per_cluster(self, atlas):
        records = [rec("Q1", "female", sitelinks=("enwiki", "zhwiki", "jawiki"))]
        aggregate = sitelink_culture_aggregate(records, atlas)
        assert aggregate[CultureCluster.ENGLISH_SPEAKING].total == 1
        assert aggregate[CultureCluster.CONFUCIAN].total == 1
        assert CultureCluster.UNASSIGNED not in aggregate

    def test_unmapped_sitelinks_go_to_unassigned(self, atlas):
        records = [rec("Q1", sitelinks=("xxwiki",))]
        aggregate = sitelink_culture_aggregate(records, atlas)
        assert aggregate[CultureCluster.UNASSIGNED].total == 1

    def test_constructed_included(self, atlas):
        records = [rec("Q1", sitelinks=("eowiki",))]
        aggregate = sitelink_culture_aggregate(records, atlas)
        assert aggregate[CultureCluster.CONSTRUCTED].total == 1


class TestArticleSizes:
    @staticmethod
    def fixture_records(per_wiki):
        records, sizes, qid = [], [], 1
        for wiki, male_bytes, female_bytes in per_wiki:
            for _ in range(10):
                records.append(rec(f"Q{qid}", "male", sitelinks=(wiki,)))
                sizes.append((wiki, f"Q{qid}", male_bytes))
                qid += 1
            for _ in range(10):
                records.append(rec(f"Q{qid}", "female", sitelinks=(wiki,)))
                sizes.append((wiki, f"Q{qid}", female_bytes))
                qid += 1
        return records, sizes

    def test_exact_linear_relation(self):
        records, sizes = self.fixture_records(
            [("enwiki", 1000, 900), ("dewiki", 2000, 1800)])
        analysis = article_size_stats(records, sizes, top_n=10, min_count=5)
        assert analysis.fit.slope == pytest.approx(0.9)
        assert analysis.fit.r_squared == pytest.approx(1.0)
        assert analysis.unjoined_rows == 0

    def test_single_wiki_raises(self):
        records, sizes = self.fixture_records([("enwiki", 1000, 900)])
        with pytest.raises(ValueError, match="at least 2"):
            article_size_stats(records, sizes, top_n=10, min_count=5)

    def test_unjoined_rows_counted(self):
        records, sizes = self.fixture_records(
            [("enwiki", 1000, 900), ("dewiki", 2000, 1800)])
        sizes.append(("enwiki", "Q99999", 5))
        sizes.append(("frwiki", "Q1", 5))
        analysis = article_size_stats(records, sizes, top_n=10, min_count=5)
        assert analysis.unjoined_rows == 2


class TestTallyRecords:
    def test_totals(self):
        records = [rec("Q1", "male"), rec("Q2", "female"), rec("Q3", "unknown")]
        t = tally_records(records)
        assert t.total == 3
        assert t.known_total == 2
