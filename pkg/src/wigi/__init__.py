"""Biography gender-gap analytics: dump ingestion, culture mapping,
inequality indicators, a deterministic stat kit, and the celebrity probe."""

__version__ = "0.1.0"

from .culture import CultureCluster, consensus_culture, language_culture, load_atlas
from .indicators import (
    GenderTally,
    NationalScore,
    RatioSeries,
    build_series,
    bucket_of,
    by_language,
    calibrate_start_decade,
    gender_ratio,
    national_scores,
    population_correlation,
    sitelink_culture_aggregate,
    uniqueness_deltas,
)
from .ingest import (
    IngestStats,
    PropertyConfig,
    read_records,
    resolve_country,
    stream_entities,
    write_records,
)
from .models import Gender, GenderKind, HumanRecord, PlaceRecord, Precision, YearValue
from .stats import (
    chi_squared,
    fit_exponential,
    logistic_fit,
    ols,
    pearson,
    solve_parity_year,
    spearman,
)
