"""Directional statistics on the circle of doubled axis angles.

Axis data gamma in [0, pi) are mapped to the full circle by doubling, so
that the axes gamma and gamma + pi coincide.  All routines below operate on
such doubled angles ``theta = 2*gamma`` reduced to [-pi, pi).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, UndefinedMeanError
from .estimator import wrap_angle

#: Resultant lengths below this leave the extrinsic mean undefined.
MEAN_UNDEFINED_TOL = 1e-12


@dataclass(frozen=True)
class AngleSample:
    """A sample of angles on the circle, reduced to [-pi, pi).

    For axis data, construct with :meth:`from_axis_angles` which doubles the
    input angles first.
    """

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64).reshape(-1)
        if values.size == 0:
            raise InvalidInputError("angle sample must be non-empty")
        if not np.all(np.isfinite(values)):
            raise InvalidInputError("angle sample must be finite")
        values = np.asarray(wrap_angle(values))
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_axis_angles(cls, gammas) -> "AngleSample":
        """Double axis angles onto the circle: gamma -> 2*gamma in [-pi, pi)."""
        return cls(2.0 * np.asarray(gammas, dtype=np.float64))

    def __len__(self) -> int:
        return self.values.size

    def rotated(self, shift: float) -> "AngleSample":
        return AngleSample(self.values + shift)


@dataclass(frozen=True)
class CircularSummary:
    """Resultant length, extrinsic mean and estimated concentration.

    ``extrinsic_mean`` is None (and ``mean_defined`` False) when the
    resultant length is below :data:`MEAN_UNDEFINED_TOL`.
    """

    resultant_length: float
    extrinsic_mean: float | None
    kappa: float

    @property
    def mean_defined(self) -> bool:
        return self.extrinsic_mean is not None


def _resultant(values: np.ndarray) -> complex:
    return complex(np.exp(1j * values).sum())


def resultant_length(sample: AngleSample) -> float:
    """Length of the mean unit vector, R_hat = |sum exp(i theta_j)| / m.

    Equals 1 for perfectly concentrated samples and approaches 0 for
    uniformly spread ones.
    """
    values = sample.values
    return abs(_resultant(values)) / values.size


def extrinsic_mean(sample: AngleSample) -> float:
    """Argument of the summed unit vectors, taken in [-pi, pi).

    This is the maximum-likelihood location of a von Mises sample.  Raises
    :class:`UndefinedMeanError` when the resultant nearly vanishes.
    """
    values = sample.values
    total = _resultant(values)
    if abs(total) / values.size < MEAN_UNDEFINED_TOL:
        raise UndefinedMeanError(
            "resultant length %.3g leaves the mean undefined"
            % (abs(total) / values.size)
        )
    return float(wrap_angle(np.angle(total)))


def bessel_i0(kappa: float) -> float:
    """Modified Bessel function of the first kind of order zero.

    Computed by the power series sum_k ((kappa/2)^(2k)) / (k!)^2 with
    term-ratio stopping at relative 1e-15; for the concentrations arising
    here (kappa*R <~ 50) the series converges in a few dozen terms.
    """
    if not (isinstance(kappa, (int, float)) and math.isfinite(kappa)) or kappa < 0:
        raise InvalidInputError("kappa must be a finite non-negative real")
    x = float(kappa) * float(kappa) / 4.0
    term = 1.0
    total = 1.0
    k = 0
    while True:
        k += 1
        term *= x / (k * k)
        total += term
        if term <= 1e-15 * total:
            return total


def _bessel_i0_scaled(kappa: float) -> float:
    """exp(-kappa) * I0(kappa), safe against overflow for large kappa."""
    if kappa < 650.0:
        return bessel_i0(kappa) * math.exp(-kappa)
    # asymptotic expansion, relative error < 1e-10 for kappa > 650
    r = 1.0 / (8.0 * kappa)
    return (1.0 + r + 4.5 * r * r + 37.5 * r**3) / math.sqrt(2.0 * math.pi * kappa)


def kappa_hat(resultant: float) -> float:
    """Approximate von Mises concentration from a resultant length.

    Piecewise approximation with breakpoints 0.53 and 0.85:

        2R + R^3 + (5/6)R^5               for R < 0.53
        -0.4 + 1.39R + 0.43 / (1 - R)     for 0.53 <= R < 0.85
        1 / (2(1 - R))                    for R >= 0.85

    ``resultant`` must lie in [0, 1); at 1 the concentration diverges.
    """
    r = float(resultant)
    if not (0.0 <= r < 1.0):
        raise InvalidInputError("resultant length must lie in [0, 1), got %g" % r)
    if r < 0.53:
        return 2.0 * r + r**3 + (5.0 / 6.0) * r**5
    if r < 0.85:
        return -0.4 + 1.39 * r + 0.43 / (1.0 - r)
    return 1.0 / (2.0 * (1.0 - r))


def von_mises_halfcircle_density(gamma, mu: float, kappa: float):
    """Von Mises density for axis data, against d(gamma)/pi on [-pi/2, pi/2).

    density(gamma) = exp(kappa * cos(2*gamma - mu)) / I0(kappa)

    with central doubled angle ``mu`` and concentration ``kappa >= 0``; it
    integrates to one over the half circle.  Vectorized in ``gamma``.
    """
    if not math.isfinite(mu):
        raise InvalidInputError("mu must be finite")
    if not (math.isfinite(kappa) and kappa >= 0):
        raise InvalidInputError("kappa must be a finite non-negative real")
    gamma = np.asarray(gamma, dtype=np.float64)
    out = np.exp(kappa * np.cos(2.0 * gamma - mu)) / bessel_i0(kappa)
    return float(out) if out.ndim == 0 else out


def summarize(sample: AngleSample) -> CircularSummary:
    """Resultant length, extrinsic mean (if defined) and kappa_hat.

    The concentration estimate clamps the resultant just below one so that
    perfectly concentrated samples yield a large finite kappa.
    """
    r = resultant_length(sample)
    mean = None
    if r >= MEAN_UNDEFINED_TOL:
        mean = extrinsic_mean(sample)
    return CircularSummary(
        resultant_length=r,
        extrinsic_mean=mean,
        kappa=kappa_hat(min(r, 1.0 - 1e-12)),
    )


def rose_bins(sample: AngleSample, bin_count: int = 24) -> list[tuple[float, int]]:
    """Equal-width histogram bins of [-pi, pi) for a rose diagram.

    Returns ``bin_count`` pairs (bin center, count); the counts sum to the
    sample size.
    """
    if bin_count < 2:
        raise InvalidInputError("bin_count must be >= 2, got %d" % bin_count)
    width = 2.0 * math.pi / bin_count
    index = np.floor((sample.values + math.pi) / width).astype(int)
    index = np.clip(index, 0, bin_count - 1)
    counts = np.bincount(index, minlength=bin_count)
    centers = -math.pi + (np.arange(bin_count) + 0.5) * width
    return [(float(c), int(n)) for c, n in zip(centers, counts)]
