"""Squared-distance similarity between component score profiles.

The diversity index between two entities is the sum of squared differences of
their component scores over a chosen component subset (all four by default);
lower means more alike. Rankings and the full pairwise matrix are exact brute
force, which is plenty for a few thousand entities.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable, Mapping, Sequence

import numpy as np

from .errors import EntityLookupError, ParameterError
from .pca import ScoreSet

DEFAULT_COMPONENTS = frozenset({0, 1, 2, 3})


@dataclass
class SdiRanking:
    """Entities nearest to a query, ascending by diversity index."""

    query_id: str
    entries: list[tuple[str, float]]
    components_used: frozenset[int]


def _checked_components(
    components: Iterable[int] | None, k: int
) -> tuple[int, ...]:
    comps = DEFAULT_COMPONENTS if components is None else frozenset(components)
    if not comps:
        raise ParameterError("component set must not be empty")
    out_of_range = [c for c in comps if not 0 <= c < k]
    if out_of_range:
        raise ParameterError(
            f"component indices {sorted(out_of_range)} out of range for {k} scores"
        )
    return tuple(sorted(comps))


def sdi(
    a: Sequence[float],
    b: Sequence[float],
    components: Iterable[int] | None = None,
    weights: Mapping[int, float] | None = None,
) -> float:
    """Sum of squared score differences over the chosen components.

    Symmetric in its arguments and exactly zero for identical profiles.
    ``weights`` (default all ones) scales each component's squared term; the
    unweighted form is the canonical index.
    """
    k = min(len(a), len(b))
    comps = _checked_components(components, k)
    total = 0.0
    for c in comps:
        d = float(a[c]) - float(b[c])
        term = d * d
        if weights is not None:
            term *= weights.get(c, 1.0)
        total += term
    return total


def rank_similar(
    scores: ScoreSet,
    query_id: str,
    top: int,
    components: Iterable[int] | None = None,
) -> SdiRanking:
    """The ``top`` entities with the smallest index against the query.

    Ties break lexicographically by entity id, so the ranking is independent
    of input row order. The query itself is excluded.
    """
    if top < 1:
        raise ParameterError(f"top must be >= 1, got {top}")
    if query_id not in scores.entity_ids:
        raise EntityLookupError(f"unknown query entity {query_id!r}")
    comps = _checked_components(components, scores.k)
    query_row = scores.row(query_id)
    ranked = sorted(
        (
            (sdi(query_row, scores.scores[i], comps), entity_id)
            for i, entity_id in enumerate(scores.entity_ids)
            if entity_id != query_id
        ),
    )
    return SdiRanking(
        query_id=query_id,
        entries=[(entity_id, value) for value, entity_id in ranked[:top]],
        components_used=frozenset(comps),
    )


def pairwise_sdi(
    scores: ScoreSet, components: Iterable[int] | None = None
) -> np.ndarray:
    """Full symmetric matrix of indices; zero diagonal.

    Each upper-triangle entry is computed with the scalar formula and
    mirrored, so the matrix agrees exactly with independent pairwise calls.
    """
    n = len(scores.entity_ids)
    if n < 2:
        raise ParameterError("pairwise computation needs at least 2 entities")
    comps = _checked_components(components, scores.k)
    matrix = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            value = sdi(scores.scores[i], scores.scores[j], comps)
            matrix[i, j] = value
            matrix[j, i] = value
    return matrix


def ranking_to_csv(
    ranking: SdiRanking,
    names: Mapping[str, str],
    destination: str | Path | IO[str],
) -> None:
    """Write ``rank, entity_id, entity_name, sdi`` rows, full precision."""
    own = isinstance(destination, (str, Path))
    fh = open(destination, "w", encoding="utf-8", newline="") if own else destination
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["rank", "entity_id", "entity_name", "sdi"])
        for rank, (entity_id, value) in enumerate(ranking.entries, start=1):
            writer.writerow([rank, entity_id, names.get(entity_id, ""), repr(value)])
    finally:
        if own:
            fh.close()


def ranking_to_json(ranking: SdiRanking, names: Mapping[str, str]) -> str:
    doc = {
        "query_id": ranking.query_id,
        "components_used": sorted(ranking.components_used),
        "entries": [
            {
                "rank": rank,
                "entity_id": entity_id,
                "entity_name": names.get(entity_id, ""),
                "sdi": value,
            }
            for rank, (entity_id, value) in enumerate(ranking.entries, start=1)
        ],
    }
    return json.dumps(doc, indent=2) + "\n"
