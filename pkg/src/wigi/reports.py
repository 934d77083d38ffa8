"""Report emission: one CSV (and optional figure) per analysis."""

from __future__ import annotations

import csv
import hashlib
import json
import logging
from collections import Counter
from pathlib import Path

from . import figures
from .celebrity import (
    DirectoryCorpus,
    build_observations,
    celebrity_matrix,
    celebrity_regression,
    load_lexicon,
)
from .config import PipelineConfig
from .culture import (
    CONCRETE_CLUSTERS,
    CultureAtlas,
    CultureCluster,
    consensus_culture,
    load_atlas,
)
from .indicators import (
    DECADE,
    FEMALE_SET,
    NONBINARY_SET,
    GenderTally,
    UndefinedRatioError,
    article_size_stats,
    build_series,
    by_language,
    calibrate_start_decade,
    gender_ratio,
    national_scores,
    population_correlation,
    tally_records,
    uniqueness_deltas,
)
from .models import GenderKind, HumanRecord, qid_num
from .stats import (
    UnreachableTargetError,
    ZeroVarianceError,
    chi_squared,
    fit_exponential,
    solve_parity_year,
)

log = logging.getLogger(__name__)

REPORT_NAMES = (
    "tallies", "series", "wigi", "compare", "fit", "culture",
    "language", "uniqueness", "sizes", "celebrity",
)

# Buckets at or past this decade are marked provisional: very recent
# cohorts are inherently under-notable and their ratios unstable.
PROVISIONAL_FROM = 1990


class ReportInputError(ValueError):
    pass


def _fmt_ratio(value: float | None) -> str:
    return "" if value is None else f"{value:.4f}"


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _safe_ratio(tally: GenderTally, class_set) -> float | None:
    try:
        return gender_ratio(tally, class_set)
    except UndefinedRatioError:
        return None


def load_external_index(path: str | Path) -> dict[str, float]:
    index: dict[str, float] = {}
    with open(path, encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header != ["country_qid", "score"]:
            raise ReportInputError(f"{path}: expected header country_qid,score")
        for row, cells in enumerate(reader, start=2):
            if len(cells) != 2:
                raise ReportInputError(f"{path}, row {row}: expected 2 columns")
            index[cells[0]] = float(cells[1])
    return index


def load_population(path: str | Path) -> list[tuple[int, float]]:
    table: list[tuple[int, float]] = []
    with open(path, encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header != ["year", "population"]:
            raise ReportInputError(f"{path}: expected header year,population")
        for cells in reader:
            table.append((int(cells[0]), float(cells[1])))
    return table


def load_sizes(path: str | Path) -> list[tuple[str, str, int]]:
    rows: list[tuple[str, str, int]] = []
    with open(path, encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header != ["wiki", "title", "bytes"]:
            raise ReportInputError(f"{path}: expected header wiki,title,bytes")
        for cells in reader:
            rows.append((cells[0], cells[1], int(cells[2])))
    return rows


class ReportRunner:
    def __init__(self, records: list[HumanRecord], config: PipelineConfig,
                 out_dir: str | Path):
        self.records = records
        self.config = config
        self.out = Path(out_dir)
        self.out.mkdir(parents=True, exist_ok=True)
        self.warnings: list[str] = []
        self.written: list[str] = []
        self._atlas: CultureAtlas | None = None

    # -- helpers -----------------------------------------------------------

    @property
    def atlas(self) -> CultureAtlas:
        if self._atlas is None:
            self._atlas = load_atlas(self.config.resolved_entity_atlas(),
                                     self.config.resolved_language_atlas())
        return self._atlas

    def _emit(self, name: str, header: list[str], rows: list[list]) -> Path:
        path = self.out / f"{name}.csv"
        _write_csv(path, header, rows)
        self.written.append(path.name)
        return path

    def _warn(self, message: str) -> None:
        self.warnings.append(message)
        log.warning("%s", message)

    def _figure(self, render, *args) -> None:
        if not self.config.figures:
            return
        try:
            name = render(self.out, *args)
        except Exception as exc:  # figures never fail the CSV path
            self._warn(f"figure rendering failed: {exc}")
            return
        if name:
            self.written.append(name)

    # -- individual reports ------------------------------------------------

    def report_tallies(self) -> None:
        tally = tally_records(self.records)
        total = tally.total
        known = tally.known_total
        rows = []
        for kind in GenderKind:
            count = tally[kind]
            if count == 0:
                continue
            share_known = (
                "" if kind is GenderKind.UNKNOWN or known == 0
                else _fmt_ratio(count / known)
            )
            rows.append([kind.value, count,
                         _fmt_ratio(count / total if total else None), share_known])
        self._emit("tallies", ["gender", "count", "share_of_total", "share_of_known"], rows)

    def _series_rows(self, anchor: str) -> list[list]:
        series = build_series(self.records, anchor, DECADE)
        rows = []
        for bucket, tally in series.sorted_points():
            rows.append([
                bucket,
                tally[GenderKind.MALE],
                tally[GenderKind.FEMALE],
                sum(tally[k] for k in NONBINARY_SET),
                tally[GenderKind.UNKNOWN],
                tally.total,
                _fmt_ratio(_safe_ratio(tally, FEMALE_SET)),
                _fmt_ratio(_safe_ratio(tally, NONBINARY_SET)),
                int(bucket >= PROVISIONAL_FROM),
            ])
        return rows

    def report_series(self) -> None:
        header = ["bucket", "male", "female", "nonbinary", "unknown", "total",
                  "female_ratio", "nonbinary_ratio", "provisional"]
        birth_rows = self._series_rows("birth")
        death_rows = self._series_rows("death")
        self._emit("series_birth", header, birth_rows)
        self._emit("series_death", header, death_rows)
        if self.config.population:
            series = build_series(self.records, "birth", DECADE)
            try:
                result = population_correlation(
                    series, load_population(self.config.population))
                self._emit("population_correlation",
                           ["pearson_r", "n_buckets", "p_value"],
                           [[_fmt_ratio(result.coefficient), result.n,
                             f"{result.p_value:.6g}"]])
            except (ValueError, ZeroVarianceError) as exc:
                self._warn(f"population correlation unavailable: {exc}")
        self._figure(figures.render_series, birth_rows, death_rows)

    def report_wigi(self) -> None:
        scores = national_scores(
            self.records, self.config.wigi_start_decade, self.config.min_count,
            use_citizenship=self.config.use_citizenship,
        )
        rows = [[rank, s.country, _fmt_ratio(s.female_ratio), s.n, s.start_decade]
                for rank, s in enumerate(scores, start=1)]
        self._emit("wigi", ["rank", "country_qid", "female_ratio", "n", "start_decade"], rows)
        self._figure(figures.render_wigi, scores)

    def report_compare(self) -> None:
        if not self.config.external_indices:
            raise ReportInputError("compare requires at least one external_index.<NAME> path")
        grid = list(self.config.calibration_grid())
        rows = []
        for name in sorted(self.config.external_indices):
            external = load_external_index(self.config.external_indices[name])
            best_decade, best_rho, best_p = calibrate_start_decade(
                self.records, external, grid, self.config.min_count,
                use_citizenship=self.config.use_citizenship,
            )
            for decade in grid:
                scores = national_scores(self.records, decade, self.config.min_count,
                                         use_citizenship=self.config.use_citizenship)
                shared = [(s.female_ratio, external[s.country])
                          for s in scores if s.country in external]
                from .stats import spearman
                result = spearman([w for w, _ in shared], [e for _, e in shared])
                rows.append([
                    name, decade, _fmt_ratio(result.coefficient),
                    f"{result.p_value:.6g}", len(shared),
                    int(decade == best_decade),
                ])
        self._emit("compare",
                   ["index", "start_decade", "spearman_rho", "p_value",
                    "n_shared", "calibrated"], rows)

    def report_fit(self) -> None:
        series = build_series(self.records, "birth", DECADE)
        points = []
        for bucket, tally in series.sorted_points():
            if not self.config.fit_start <= bucket <= self.config.fit_end:
                continue
            ratio = _safe_ratio(tally, FEMALE_SET)
            if ratio is not None:
                points.append((bucket, ratio))
        if len(points) < 5:
            raise ReportInputError(
                f"only {len(points)} usable decade points in "
                f"[{self.config.fit_start}, {self.config.fit_end}] (need 5)"
            )
        fit = fit_exponential(points)
        try:
            parity = f"{solve_parity_year(fit, self.config.parity_target):.1f}"
        except UnreachableTargetError as exc:
            parity = ""
            self._warn(f"parity year unreachable: {exc}")
        self._emit("fit",
                   ["a", "b", "c", "d", "rss", "converged", "out_of_range",
                    "parity_target", "parity_year"],
                   [[f"{fit.a:.6g}", f"{fit.b:.6g}", f"{fit.c:.6g}", f"{fit.d:.6g}",
                     f"{fit.rss:.6g}", int(fit.converged), int(fit.out_of_range),
                     _fmt_ratio(self.config.parity_target), parity]])
        self._figure(figures.render_fit, points, fit)

    def report_culture(self) -> None:
        cluster_tallies: dict[CultureCluster, GenderTally] = {}
        outcome_counts: Counter = Counter()
        cluster_of: dict[str, CultureCluster] = {}
        for record in self.records:
            cluster, outcome = consensus_culture(record, self.atlas)
            outcome_counts[outcome.value] += 1
            cluster_of[record.id] = cluster
            cluster_tallies.setdefault(cluster, GenderTally()).add(record.gender)

        rows = []
        for cluster in list(CONCRETE_CLUSTERS) + [CultureCluster.UNASSIGNED]:
            tally = cluster_tallies.get(cluster)
            if tally is None:
                continue
            rows.append([
                cluster.value, tally.total,
                _fmt_ratio(_safe_ratio(tally, FEMALE_SET)),
                _fmt_ratio(_safe_ratio(tally, NONBINARY_SET)),
            ])
        self._emit("culture", ["culture", "total", "female_ratio", "nonbinary_ratio"], rows)
        self._emit("culture_outcomes", ["outcome", "count"],
                   [[k, v] for k, v in sorted(outcome_counts.items())])

        # gender x culture independence test over clusters with known genders
        table = []
        for cluster in CONCRETE_CLUSTERS:
            tally = cluster_tallies.get(cluster)
            if tally is None or tally.known_total == 0:
                continue
            male = tally[GenderKind.MALE]
            female = tally[GenderKind.FEMALE]
            nonbinary = sum(tally[k] for k in NONBINARY_SET)
            table.append([male, female + nonbinary])
        usable = [row for row in table if sum(row) > 0]
        if len(usable) >= 2 and all(any(col) for col in zip(*usable)):
            result = chi_squared(usable)
            self._emit("culture_chi2", ["statistic", "df", "p_value"],
                       [[f"{result.statistic:.4f}", result.df, f"{result.p_value:.6g}"]])
        else:
            self._warn("culture chi-squared skipped: degenerate margins")

        # per-culture decade series (gender x culture x time)
        series_rows = []
        for cluster in list(CONCRETE_CLUSTERS) + [CultureCluster.UNASSIGNED]:
            series = build_series(
                self.records, "birth", DECADE,
                record_filter=lambda r, c=cluster: cluster_of[r.id] is c,
            )
            for bucket, tally in series.sorted_points():
                series_rows.append([
                    cluster.value, bucket, tally.total,
                    _fmt_ratio(_safe_ratio(tally, FEMALE_SET)),
                    _fmt_ratio(_safe_ratio(tally, NONBINARY_SET)),
                    int(bucket >= PROVISIONAL_FROM),
                ])
        self._emit("culture_series",
                   ["culture", "bucket", "total", "female_ratio",
                    "nonbinary_ratio", "provisional"], series_rows)
        self._figure(figures.render_culture, rows)

    def report_language(self) -> None:
        stats = by_language(self.records, self.config.top_n_languages)
        rows = [[s.wiki, s.total, _fmt_ratio(s.female_ratio), _fmt_ratio(s.nonbinary_ratio)]
                for s in stats]
        self._emit("language", ["wiki", "total", "female_ratio", "nonbinary_ratio"], rows)
        self._figure(figures.render_language, stats)

    def report_uniqueness(self) -> None:
        deltas, warnings = uniqueness_deltas(self.records, self.config.min_count)
        for message in warnings:
            self._warn(f"uniqueness: {message}")
        rows = [[d.wiki, _fmt_ratio(d.unique_female_ratio),
                 _fmt_ratio(d.many_female_ratio), _fmt_ratio(d.delta), d.unique_count]
                for d in deltas]
        self._emit("uniqueness",
                   ["wiki", "unique_female_ratio", "many_female_ratio",
                    "delta", "unique_count"], rows)
        # language-aggregated-by-culture view of the sitelink dimension
        from .indicators import sitelink_culture_aggregate
        aggregate = sitelink_culture_aggregate(self.records, self.atlas)
        agg_rows = []
        for cluster in list(CONCRETE_CLUSTERS) + [CultureCluster.UNASSIGNED]:
            tally = aggregate.get(cluster)
            if tally is None:
                continue
            agg_rows.append([cluster.value, tally.total,
                             _fmt_ratio(_safe_ratio(tally, FEMALE_SET))])
        self._emit("language_culture", ["culture", "total", "female_ratio"], agg_rows)
        self._figure(figures.render_uniqueness, deltas)

    def report_sizes(self) -> None:
        if not self.config.sizes:
            raise ReportInputError("sizes report requires the sizes table path")
        analysis = article_size_stats(
            self.records, load_sizes(self.config.sizes),
            self.config.top_n_sizes, self.config.min_count,
        )
        rows = [[s.wiki, f"{s.mean_bytes_male:.2f}", f"{s.mean_bytes_female:.2f}",
                 s.n_male, s.n_female] for s in analysis.stats]
        self._emit("sizes",
                   ["wiki", "mean_bytes_male", "mean_bytes_female",
                    "n_male", "n_female"], rows)
        fit = analysis.fit
        self._emit("sizes_fit",
                   ["slope", "intercept", "r_squared", "n_wikis", "unjoined_rows"],
                   [[f"{fit.slope:.6g}", f"{fit.intercept:.6g}",
                     _fmt_ratio(fit.r_squared), fit.n, analysis.unjoined_rows]])
        if analysis.unjoined_rows:
            self._warn(f"sizes: {analysis.unjoined_rows} rows did not join to any record")
        self._figure(figures.render_sizes, analysis)

    def report_celebrity(self) -> None:
        if not self.config.corpus_dir:
            raise ReportInputError("celebrity report requires the corpus directory")
        lexicon = load_lexicon(self.config.resolved_lexicon(),
                               window=self.config.window,
                               preferred_wiki=self.config.preferred_wiki)
        observations, skipped = build_observations(
            self.records, DirectoryCorpus(self.config.corpus_dir), lexicon,
            (self.config.celebrity_start, self.config.celebrity_end),
        )
        if skipped:
            self._warn(f"celebrity: {skipped} records lacked article text")
        matrix = celebrity_matrix(observations)
        rows = [[wiki, decade, gender, c, t, _fmt_ratio(c / t)]
                for (wiki, decade, gender), (c, t) in sorted(matrix.items())]
        self._emit("celebrity_matrix",
                   ["wiki", "decade", "gender", "celebrities", "total", "share"], rows)
        fit = celebrity_regression(observations, self.config.baseline_wiki)
        reg_rows = []
        for i, name in enumerate(fit.feature_names):
            reg_rows.append([
                name, f"{fit.coefficients[i]:.4f}", f"{fit.standard_errors[i]:.4f}",
                f"{fit.z_scores[i]:.3f}", f"{fit.p_values[i]:.4f}",
            ])
        self._emit("celebrity_regression", ["feature", "coef", "se", "z", "p_value"], reg_rows)
        self._emit("celebrity_fit_info",
                   ["log_likelihood", "converged", "separation", "n"],
                   [[f"{fit.log_likelihood:.6g}", int(fit.converged),
                     int(fit.separation_flag), len(observations)]])
        self._figure(figures.render_celebrity, matrix)

    # -- orchestration -------------------------------------------------------

    def available(self, name: str) -> bool:
        if name == "compare":
            return bool(self.config.external_indices)
        if name == "sizes":
            return bool(self.config.sizes)
        if name == "celebrity":
            return bool(self.config.corpus_dir)
        return True

    def run(self, which: str) -> None:
        if which == "all":
            for name in REPORT_NAMES:
                if self.available(name):
                    getattr(self, f"report_{name}")()
                else:
                    self._warn(f"skipping {name}: required inputs not configured")
            self.write_manifest()
            return
        if which not in REPORT_NAMES:
            raise ReportInputError(f"unknown report {which!r}")
        getattr(self, f"report_{which}")()
        self.write_manifest()

    def write_manifest(self) -> None:
        inputs = {}
        for label, path in [
            ("records", self.config.records),
            ("entity_atlas", str(self.config.resolved_entity_atlas())),
            ("language_atlas", str(self.config.resolved_language_atlas())),
            ("population", self.config.population),
            ("sizes", self.config.sizes),
            ("lexicon", str(self.config.resolved_lexicon())),
        ]:
            if path and Path(path).is_file():
                digest = hashlib.sha256(Path(path).read_bytes()).hexdigest()
                inputs[label] = {"path": str(path), "sha256": digest}
        manifest = {
            "inputs": inputs,
            "thresholds": {
                "min_count": self.config.min_count,
                "top_n_languages": self.config.top_n_languages,
                "top_n_sizes": self.config.top_n_sizes,
                "calibration_grid": [self.config.grid_start, self.config.grid_end,
                                     self.config.grid_step],
                "celebrity_decades": [self.config.celebrity_start,
                                      self.config.celebrity_end],
                "window": self.config.window,
                "wigi_start_decade": self.config.wigi_start_decade,
            },
            "outputs": sorted(self.written),
            "warnings": self.warnings,
        }
        path = self.out / "manifest.json"
        path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n",
                        encoding="utf-8")
