"""Matplotlib renderings of the report CSVs, written next to them.

Every function takes the already-computed report data, writes one PNG into
the output directory, and returns its file name.  Rendering is best-effort;
the CSV outputs are the canonical artifacts.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt


def _save(fig, out_dir: Path, name: str) -> str:
    fig.tight_layout()
    fig.savefig(out_dir / name, dpi=120)
    plt.close(fig)
    return name


def render_series(out_dir: Path, birth_rows: list[list], death_rows: list[list]) -> str:
    fig, ax = plt.subplots(figsize=(8, 4.5))
    for rows, label in ((birth_rows, "by birth year"), (death_rows, "by death year")):
        points = [(r[0], float(r[6])) for r in rows if r[6] != ""]
        if points:
            ax.plot([p[0] for p in points], [p[1] for p in points],
                    marker=".", linewidth=1, label=label)
    ax.set_xlabel("decade")
    ax.set_ylabel("female ratio")
    ax.set_title("Female ratio of biographies over time")
    ax.legend()
    return _save(fig, out_dir, "series.png")


def render_wigi(out_dir: Path, scores) -> str:
    top = scores[:20]
    fig, ax = plt.subplots(figsize=(7, max(3, 0.3 * len(top))))
    ax.barh([s.country for s in reversed(top)],
            [s.female_ratio for s in reversed(top)])
    ax.set_xlabel("female ratio")
    ax.set_title("National female-biography ratio (top 20)")
    return _save(fig, out_dir, "wigi.png")


def render_fit(out_dir: Path, points, fit) -> str:
    import numpy as np

    fig, ax = plt.subplots(figsize=(7, 4.5))
    xs = [p[0] for p in points]
    ax.scatter(xs, [p[1] for p in points], s=12, label="observed")
    grid = np.linspace(min(xs), max(xs) + 60, 300)
    ax.plot(grid, fit.predict(grid), color="tab:red", linewidth=1,
            label="exponential fit")
    ax.axhline(0.5, color="grey", linestyle=":", linewidth=0.8)
    ax.set_xlabel("birth decade")
    ax.set_ylabel("female ratio")
    ax.set_title("Exponential fit of the female ratio")
    ax.legend()
    return _save(fig, out_dir, "fit.png")


def render_culture(out_dir: Path, rows: list[list]) -> str:
    usable = [(r[0], float(r[2])) for r in rows if r[2] != ""]
    fig, ax = plt.subplots(figsize=(8, 4.5))
    ax.bar([name for name, _ in usable], [v for _, v in usable])
    ax.set_ylabel("female ratio")
    ax.set_title("Female ratio of biographies by culture")
    ax.tick_params(axis="x", rotation=45)
    return _save(fig, out_dir, "culture.png")


def render_language(out_dir: Path, stats) -> str:
    usable = [s for s in stats if s.female_ratio is not None]
    fig, ax = plt.subplots(figsize=(8, 5))
    ax.scatter([s.total for s in usable], [s.female_ratio for s in usable], s=16)
    for s in usable:
        ax.annotate(s.wiki, (s.total, s.female_ratio), fontsize=6,
                    xytext=(2, 2), textcoords="offset points")
    ax.set_xscale("log")
    ax.set_xlabel("biography count")
    ax.set_ylabel("female ratio")
    ax.set_title("Female ratio by Wikipedia language")
    return _save(fig, out_dir, "language.png")


def render_uniqueness(out_dir: Path, deltas) -> str:
    fig, ax = plt.subplots(figsize=(8, max(3, 0.25 * len(deltas))))
    ax.barh([d.wiki for d in reversed(deltas)], [d.delta for d in reversed(deltas)])
    ax.axvline(0, color="grey", linewidth=0.8)
    ax.set_xlabel("unique minus many female ratio")
    ax.set_title("Language-unique vs language-many female ratio")
    return _save(fig, out_dir, "uniqueness.png")


def render_sizes(out_dir: Path, analysis) -> str:
    import numpy as np

    fig, ax = plt.subplots(figsize=(6.5, 6))
    xs = [s.mean_bytes_male for s in analysis.stats]
    ys = [s.mean_bytes_female for s in analysis.stats]
    ax.scatter(xs, ys, s=16)
    for s in analysis.stats:
        ax.annotate(s.wiki, (s.mean_bytes_male, s.mean_bytes_female), fontsize=6,
                    xytext=(2, 2), textcoords="offset points")
    grid = np.linspace(min(xs), max(xs), 50)
    fit = analysis.fit
    ax.plot(grid, fit.slope * grid + fit.intercept, color="tab:red", linewidth=1,
            label=f"slope {fit.slope:.2f}, R² {fit.r_squared:.3f}")
    ax.set_xlabel("mean male article bytes")
    ax.set_ylabel("mean female article bytes")
    ax.set_title("Mean article size by binary gender")
    ax.legend()
    return _save(fig, out_dir, "sizes.png")


def render_celebrity(out_dir: Path, matrix: dict) -> str:
    import numpy as np

    wikis = sorted({key[0] for key in matrix})
    decades = sorted({key[1] for key in matrix})
    genders = sorted({key[2] for key in matrix})
    fig, axes = plt.subplots(1, max(len(genders), 1),
                             figsize=(3.2 * max(len(genders), 1), 4),
                             squeeze=False)
    for ax, gender in zip(axes[0], genders):
        grid = np.full((len(decades), len(wikis)), np.nan)
        for (wiki, decade, g), (c, t) in matrix.items():
            if g == gender and t:
                grid[decades.index(decade), wikis.index(wiki)] = c / t
        image = ax.imshow(grid, aspect="auto", origin="lower", vmin=0, vmax=1,
                          cmap="viridis")
        ax.set_xticks(range(len(wikis)), wikis, rotation=90, fontsize=6)
        ax.set_yticks(range(len(decades)), decades, fontsize=6)
        ax.set_title(gender, fontsize=8)
    fig.colorbar(image, ax=axes[0], shrink=0.8, label="celebrity share")
    fig.suptitle("Celebrity share by wiki, decade, gender")
    return _save(fig, out_dir, "celebrity.png")
