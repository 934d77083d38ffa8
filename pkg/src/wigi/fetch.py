"""Rate-limited article fetcher with a disk cache.

Network access is opt-in; the default posture is offline, in which case a
cache miss is an error rather than a request.
"""

from __future__ import annotations

import os
import re
import tempfile
import time
import urllib.parse
from dataclasses import dataclass
from pathlib import Path


class FetchError(Exception):
    pass


class MissingPageError(FetchError):
    def __init__(self, wiki: str, title: str):
        super().__init__(f"no page {title!r} on {wiki}")


class OfflineError(FetchError):
    def __init__(self, wiki: str, title: str):
        super().__init__(f"offline and not cached: ({wiki}, {title})")


@dataclass
class ClientConfig:
    cache_dir: str | Path = "article-cache"
    user_agent: str = ""
    offline: bool = True
    min_interval: float = 1.0  # seconds between requests per host
    max_retries: int = 3
    timeout: float = 30.0
    suffix: str = ".wikitext"


_SAFE_TITLE_RE = re.compile(r"[^A-Za-z0-9._-]")


def _cache_path(config: ClientConfig, wiki: str, title: str) -> Path:
    safe = _SAFE_TITLE_RE.sub(lambda m: f"%{ord(m.group(0)):04X}", title)
    return Path(config.cache_dir) / wiki / f"{safe}{config.suffix}"


def _wiki_host(wiki: str) -> str:
    if not wiki.endswith("wiki"):
        raise FetchError(f"not a Wikipedia code: {wiki!r}")
    return f"{wiki[:-4]}.wikipedia.org"


class ArticleClient:
    """Fetches raw wikitext by (wiki, title), caching each page on disk."""

    def __init__(self, config: ClientConfig | None = None):
        self.config = config or ClientConfig()
        self._last_request: dict[str, float] = {}

    def fetch_article(self, wiki: str, title: str) -> str:
        cached = _cache_path(self.config, wiki, title)
        if cached.is_file():
            return cached.read_text(encoding="utf-8")
        if self.config.offline:
            raise OfflineError(wiki, title)
        text = self._fetch_remote(wiki, title)
        self._store(cached, text)
        return text

    def get_text(self, wiki: str, title: str) -> str | None:
        """Corpus-protocol adapter: missing pages become ``None``."""
        try:
            return self.fetch_article(wiki, title)
        except MissingPageError:
            return None

    def _store(self, path: Path, text: str) -> None:
        # write-temp-then-rename so concurrent readers never see a torn file
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as handle:
                handle.write(text)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise

    def _throttle(self, host: str) -> None:
        last = self._last_request.get(host)
        if last is not None:
            wait = self.config.min_interval - (time.monotonic() - last)
            if wait > 0:
                time.sleep(wait)
        self._last_request[host] = time.monotonic()

    def _fetch_remote(self, wiki: str, title: str) -> str:
        import requests

        if not self.config.user_agent:
            raise FetchError("an identifying user-agent string is required for network use")
        host = _wiki_host(wiki)
        url = f"https://{host}/w/index.php?" + urllib.parse.urlencode(
            {"action": "raw", "title": title}
        )
        delay = 1.0
        for attempt in range(self.config.max_retries + 1):
            self._throttle(host)
            try:
                response = requests.get(
                    url, headers={"User-Agent": self.config.user_agent},
                    timeout=self.config.timeout,
                )
            except requests.RequestException as exc:
                if attempt == self.config.max_retries:
                    raise FetchError(f"request failed for ({wiki}, {title}): {exc}") from exc
                time.sleep(delay)
                delay *= 2.0
                continue
            if response.status_code == 404:
                raise MissingPageError(wiki, title)
            if response.ok:
                return response.text
            if attempt == self.config.max_retries:
                raise FetchError(
                    f"HTTP {response.status_code} for ({wiki}, {title})"
                )
            time.sleep(delay)
            delay *= 2.0
        raise FetchError(f"retries exhausted for ({wiki}, {title})")
