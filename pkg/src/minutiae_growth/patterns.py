"""Minutiae point patterns and matched pairs.

Minutia locations are 2-D pixel coordinates handled algebraically as complex
numbers ``x + 1j*y``.  All types are immutable value objects: the coordinate
arrays are frozen after construction, so instances can be shared freely
across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterator, Sequence

import numpy as np

from .errors import InvalidInputError

#: A pattern marked "centered" must have its coordinate mean within this
#: distance of the origin.
CENTER_TOL = 1e-9

Identifier = int | str


def _as_complex_points(points) -> np.ndarray:
    """Coerce an (n, 2) real array or a complex sequence to complex points."""
    z = np.asarray(points)
    if z.ndim == 2 and z.shape[1] == 2:
        z = z[:, 0] + 1j * z[:, 1]
    z = np.array(z, dtype=np.complex128, copy=True).reshape(-1)
    if z.size == 0:
        raise InvalidInputError("a minutia pattern needs at least one point")
    if not (np.all(np.isfinite(z.real)) and np.all(np.isfinite(z.imag))):
        raise InvalidInputError("minutia coordinates must be finite")
    z.setflags(write=False)
    return z


@dataclass(frozen=True)
class MinutiaPattern:
    """Ordered minutia locations of one imprint.

    Parameters
    ----------
    points : array_like
        Either a complex sequence or an (n, 2) real array of ``(x, y)``
        pixel coordinates.
    finger_id, impression_id : int or str
        Identifiers of the finger and the impression.
    centered : bool
        Whether the pattern has been centered at its coordinate mean.
    """

    points: np.ndarray
    finger_id: Identifier = 0
    impression_id: Identifier = 0
    centered: bool = False

    def __post_init__(self):
        z = _as_complex_points(self.points)
        object.__setattr__(self, "points", z)
        if self.centered and abs(z.mean()) > CENTER_TOL:
            raise InvalidInputError(
                "pattern marked centered has |mean| = %g > %g"
                % (abs(z.mean()), CENTER_TOL)
            )

    def __len__(self) -> int:
        return self.points.size

    @property
    def xy(self) -> np.ndarray:
        """The pattern as an (n, 2) real array of (x, y) coordinates."""
        return np.column_stack([self.points.real, self.points.imag])


def center_pattern(pattern: MinutiaPattern) -> MinutiaPattern:
    """Subtract the coordinate mean so the pattern is centered at the origin.

    Idempotent: a pattern already marked centered is returned unchanged, so
    ``center_pattern(center_pattern(x))`` equals ``center_pattern(x)``
    exactly.
    """
    if pattern.centered:
        return pattern
    z = pattern.points - pattern.points.mean()
    return replace(pattern, points=z, centered=True)


@dataclass(frozen=True)
class MatchedPair:
    """A template pattern and a query pattern with index-wise correspondence.

    ``template.points[j]`` and ``query.points[j]`` are the same physical
    minutia observed in the two imprints.  Loaders accept any common length
    ``n >= 1``; growth estimation additionally requires ``n >= 3``.
    """

    template: MinutiaPattern
    query: MinutiaPattern

    def __post_init__(self):
        if len(self.template) != len(self.query):
            raise InvalidInputError(
                "template and query must have equal length, got %d vs %d"
                % (len(self.template), len(self.query))
            )

    @property
    def n(self) -> int:
        """Number of matched minutiae."""
        return len(self.template)

    @property
    def finger_id(self) -> Identifier:
        return self.query.finger_id

    @property
    def impression_id(self) -> Identifier:
        return self.query.impression_id

    def centered(self) -> "MatchedPair":
        """Both patterns centered (the estimator's first step)."""
        return MatchedPair(center_pattern(self.template), center_pattern(self.query))


def _id_sort_key(value: Identifier):
    # ints order before strings; avoids int/str comparison errors on mixed ids
    if isinstance(value, int):
        return (0, value, "")
    return (1, 0, str(value))


def pair_key(pair: MatchedPair):
    """Canonical sort key for pairs: (finger_id, impression_id)."""
    return (_id_sort_key(pair.finger_id), _id_sort_key(pair.impression_id))


@dataclass(frozen=True)
class StudyDataset:
    """All matched pairs of a study, indexed by (finger, impression)."""

    pairs: tuple[MatchedPair, ...]
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        pairs = tuple(sorted(self.pairs, key=pair_key))
        index = {}
        for pair in pairs:
            key = (pair.finger_id, pair.impression_id)
            if key in index:
                raise InvalidInputError(
                    "duplicate (finger_id, impression_id) = %r" % (key,)
                )
            index[key] = pair
        object.__setattr__(self, "pairs", pairs)
        object.__setattr__(self, "_index", index)

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self) -> Iterator[MatchedPair]:
        return iter(self.pairs)

    def get(self, finger_id: Identifier, impression_id: Identifier) -> MatchedPair:
        return self._index[(finger_id, impression_id)]

    @property
    def finger_ids(self) -> tuple[Identifier, ...]:
        seen = []
        for pair in self.pairs:
            if pair.finger_id not in seen:
                seen.append(pair.finger_id)
        return tuple(seen)
