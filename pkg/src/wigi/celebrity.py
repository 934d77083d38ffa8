"""Celebrity detection from article openings and the associated
gender/language/decade logistic regression."""

from __future__ import annotations

import re
from collections import defaultdict
from collections.abc import Iterable
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol

import numpy as np

from .indicators import DECADE, bucket_of, wikipedia_sitelinks
from .models import Gender, GenderKind, HumanRecord, Precision
from .stats import LogitFit, logistic_fit

_COMMENT_RE = re.compile(r"<!--.*?(?:-->|$)", re.DOTALL)
_REF_RE = re.compile(r"<ref[^>/]*/\s*>|<ref[^>]*>.*?(?:</ref\s*>|$)", re.DOTALL | re.IGNORECASE)
_LINK_RE = re.compile(r"\[\[([^\[\]|]*)(?:\|([^\[\]]*))?\]\]")
_WS_RE = re.compile(r"\s+")


def _strip_templates(text: str) -> tuple[str, bool]:
    """Remove nested ``{{...}}`` blocks; unbalanced opens strip to the end."""
    out: list[str] = []
    depth = 0
    i = 0
    n = len(text)
    while i < n:
        if text.startswith("{{", i):
            depth += 1
            i += 2
        elif depth and text.startswith("}}", i):
            depth -= 1
            i += 2
        elif depth:
            i += 1
        else:
            out.append(text[i])
            i += 1
    return "".join(out), depth > 0


def strip_wikitext_flagged(raw: str) -> tuple[str, bool]:
    """Plain text of a wikitext fragment plus an unbalanced-markup flag."""
    text = _COMMENT_RE.sub("", raw)
    text = _REF_RE.sub("", text)
    text, unbalanced = _strip_templates(text)
    while True:
        replaced = _LINK_RE.sub(lambda m: m.group(2) if m.group(2) is not None else m.group(1), text)
        if replaced == text:
            break
        text = replaced
    text = text.replace("'''", "").replace("''", "")
    text = _WS_RE.sub(" ", text).strip()
    return text, unbalanced


def strip_wikitext(raw: str) -> str:
    return strip_wikitext_flagged(raw)[0]


def is_celebrity(text: str, terms: Iterable[str], window: int = 200) -> bool:
    """True iff some term starts within the first ``window`` characters.

    The window counts Unicode scalar values.  Matching is substring on
    case-folded text, which for caseless scripts reduces to a raw match.
    """
    limit = min(window, len(text))
    for term in terms:
        if not term:
            continue
        folded = term.casefold()
        # casefold can change lengths, so compare per start position over a
        # slice generous enough to absorb any expansion
        span = 3 * len(term) + 3
        for start in range(limit):
            if text[start:start + span].casefold().startswith(folded):
                return True
    return False


@dataclass
class CelebrityLexicon:
    terms: dict[str, list[str]] = field(default_factory=dict)
    window: int = 200
    preferred_wiki: str = "enwiki"

    def __post_init__(self) -> None:
        if self.window <= 0:
            raise ValueError("window must be positive")
        for wiki, terms in self.terms.items():
            if not terms:
                raise ValueError(f"empty term list for {wiki}")


class LexiconFormatError(ValueError):
    pass


def load_lexicon(path: str | Path, *, window: int = 200,
                 preferred_wiki: str = "enwiki") -> CelebrityLexicon:
    """Parse a sectioned term file: ``[wiki_code]`` headers, one term per
    line, ``#`` comments."""
    terms: dict[str, list[str]] = {}
    current: str | None = None
    for row, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
            terms.setdefault(current, [])
        elif current is None:
            raise LexiconFormatError(f"row {row}: term before any [wiki] header")
        else:
            terms[current].append(line)
    return CelebrityLexicon(terms, window, preferred_wiki)


class ArticleCorpus(Protocol):
    def get_text(self, wiki: str, title: str) -> str | None: ...


class DirectoryCorpus:
    """Frozen corpus laid out as ``<root>/<wiki>/<title>.txt``."""

    def __init__(self, root: str | Path):
        self.root = Path(root)

    def get_text(self, wiki: str, title: str) -> str | None:
        path = self.root / wiki / f"{title}.txt"
        if not path.is_file():
            return None
        return path.read_text(encoding="utf-8")


@dataclass(frozen=True)
class CelebrityObservation:
    qid: str
    wiki: str
    gender: Gender
    birth_decade: int
    is_celebrity: bool


def build_observations(
    records: Iterable[HumanRecord],
    corpus: ArticleCorpus,
    lexicon: CelebrityLexicon,
    decade_range: tuple[int, int] = (1930, 1989),
) -> tuple[list[CelebrityObservation], int]:
    """Match each eligible record against the lexicon of its article's wiki.

    The preferred wiki's article is used when that sitelink exists; otherwise
    the first configured local wiki (lexicon order) that has text.  Returns
    the observations plus the count of records skipped for missing text.
    """
    low, high = decade_range
    observations: list[CelebrityObservation] = []
    skipped = 0
    configured = list(lexicon.terms)
    for record in records:
        if not record.gender.is_known:
            continue
        if record.birth is None or record.birth.precision is not Precision.YEAR:
            continue
        decade = bucket_of(record.birth.year, DECADE)
        if not low <= decade <= high:
            continue
        links = wikipedia_sitelinks(record)
        candidates = [w for w in configured if w in links]
        if lexicon.preferred_wiki in candidates:
            candidates.remove(lexicon.preferred_wiki)
            candidates.insert(0, lexicon.preferred_wiki)
        if not candidates:
            continue
        chosen = None
        for wiki in candidates:
            text = corpus.get_text(wiki, record.id)
            if text is not None:
                chosen = (wiki, text)
                break
        if chosen is None:
            skipped += 1
            continue
        wiki, text = chosen
        stripped = strip_wikitext(text)
        observations.append(CelebrityObservation(
            record.id, wiki, record.gender, decade,
            is_celebrity(stripped, lexicon.terms[wiki], lexicon.window),
        ))
    return observations, skipped


def celebrity_matrix(
    observations: Iterable[CelebrityObservation],
) -> dict[tuple[str, int, str], tuple[int, int]]:
    """(wiki, decade, gender token) -> (celebrity count, total count)."""
    cells: dict[tuple[str, int, str], list[int]] = defaultdict(lambda: [0, 0])
    for obs in observations:
        cell = cells[(obs.wiki, obs.birth_decade, obs.gender.token())]
        cell[0] += int(obs.is_celebrity)
        cell[1] += 1
    return {key: (c, t) for key, (c, t) in cells.items()}


def celebrity_regression(
    observations: list[CelebrityObservation],
    baseline_wiki: str = "dewiki",
) -> LogitFit:
    """Logit of celebrity status on wiki indicators (baseline wiki absorbed
    in the intercept), a female indicator, and the numeric birth decade."""
    wikis = sorted({obs.wiki for obs in observations})
    if len(wikis) < 2:
        raise ValueError(f"need observations from at least 2 wikis, got {len(wikis)}")
    indicator_wikis = [w for w in wikis if w != baseline_wiki]
    rows = []
    labels = []
    for obs in observations:
        row = [1.0 if obs.wiki == w else 0.0 for w in indicator_wikis]
        row.append(1.0 if obs.gender.kind is GenderKind.FEMALE else 0.0)
        row.append(float(obs.birth_decade))
        rows.append(row)
        labels.append(int(obs.is_celebrity))
    if len({r[-2] for r in rows}) < 2:
        raise ValueError("need both female and non-female observations")
    names = tuple(indicator_wikis) + ("female", "decade")
    return logistic_fit(np.array(rows), np.array(labels), feature_names=names)
