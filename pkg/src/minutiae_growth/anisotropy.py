"""Hypothesis tests for the presence and the axis of anisotropic growth.

Five tests consume distributions of the fitted growth parameters:

==============  ============================================  =====================
test id         statistic                                     null hypothesis
==============  ============================================  =====================
rayleigh        2 m R_hat^2 of the doubled axis angles        growth is isotropic
tau_ks          two-sample Kolmogorov-Smirnov D on tau_hat    growth is isotropic
joint           scaled max-coordinate vs a confidence rect    growth is isotropic
distal_vm       |extrinsic mean| vs a von Mises critical      growth is not distal
                angle delta
distal_boot     bootstrap-studentized squared extrinsic mean  growth is not distal
==============  ============================================  =====================

The two distal tests are neighborhood tests: they reject only when the
growth axis provably lies within the alignment accuracy ``epsilon = 2*eta``
of the target axis (on the doubled-angle scale), and they generalize to any
target axis via :attr:`DistalTestConfig.axis`.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from statistics import NormalDist

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from .circular import (
    MEAN_UNDEFINED_TOL,
    AngleSample,
    _bessel_i0_scaled,
    extrinsic_mean,
    kappa_hat,
    resultant_length,
)
from .errors import (
    DegenerateConfigurationError,
    InvalidInputError,
    UndefinedMeanError,
)
from .estimator import MatchedPair, full_procrustes, wrap_angle

_NORMAL = NormalDist()


def chi2_2_quantile(q: float) -> float:
    """Quantile of the chi-squared distribution with 2 degrees of freedom."""
    if not (0.0 < q < 1.0):
        raise InvalidInputError("quantile level must lie in (0, 1)")
    return -2.0 * math.log(1.0 - q)


def chi2_2_sf(x: float) -> float:
    """Upper tail probability of a chi-squared(2) variable."""
    return math.exp(-x / 2.0)


def _check_alpha(alpha: float):
    if not (0.0 < alpha < 1.0):
        raise InvalidInputError("alpha must lie in (0, 1), got %r" % (alpha,))


@dataclass(frozen=True)
class TestReport:
    """Outcome of one hypothesis test.

    ``decision`` is "reject" exactly when the test's rejection rule holds
    for (statistic, threshold); ``config`` snapshots the inputs needed to
    reproduce the run.
    """

    test_id: str
    statistic: float
    threshold: float
    p_value: float | None
    decision: str
    alpha: float
    epsilon: float | None = None
    seed: int | None = None
    config: dict = field(default_factory=dict)

    @property
    def reject(self) -> bool:
        return self.decision == "reject"

    def to_dict(self) -> dict:
        def _jsonable(x):
            if isinstance(x, float) and not math.isfinite(x):
                return repr(x)
            return x

        return {
            "test_id": self.test_id,
            "statistic": _jsonable(self.statistic),
            "threshold": _jsonable(self.threshold),
            "p_value": self.p_value,
            "decision": self.decision,
            "alpha": self.alpha,
            "epsilon": self.epsilon,
            "seed": self.seed,
            "config": self.config,
        }

    def to_json(self, indent: int = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)


def _decision(reject: bool) -> str:
    return "reject" if reject else "retain"


# ---------------------------------------------------------------------------
# Rayleigh test for uniformity of the doubled axis angles.
# ---------------------------------------------------------------------------


def rayleigh_statistic(sample: AngleSample, m: int | None = None) -> float:
    """Rayleigh statistic 2 m R_hat^2 for m doubled angles."""
    if m is None:
        m = len(sample)
    if m != len(sample):
        raise InvalidInputError(
            "m = %d does not match the sample size %d" % (m, len(sample))
        )
    if m < 2:
        raise InvalidInputError("the Rayleigh statistic needs m >= 2")
    r = resultant_length(sample)
    return 2.0 * m * r * r


def test_rayleigh(
    sample: AngleSample, m: int | None = None, alpha: float = 0.05
) -> TestReport:
    """Reject isotropic growth when 2 m R_hat^2 exceeds the chi2(2) quantile.

    Under uniformity the statistic is asymptotically chi-squared with two
    degrees of freedom, whose tail has the closed form exp(-x/2).
    """
    _check_alpha(alpha)
    statistic = rayleigh_statistic(sample, m)
    threshold = chi2_2_quantile(1.0 - alpha)
    p_value = chi2_2_sf(statistic)
    return TestReport(
        test_id="rayleigh",
        statistic=statistic,
        threshold=threshold,
        p_value=p_value,
        decision=_decision(statistic > threshold),
        alpha=alpha,
        config={"m": len(sample)},
    )


# ---------------------------------------------------------------------------
# Sphericity of residual scatter.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SphericityStat:
    """Likelihood-ratio sphericity statistic of a 2x2 covariance.

    rho = 2 n log(a_hat / g_hat) with a_hat the arithmetic and g_hat the
    geometric mean of the two eigenvalues; zero exactly when the covariance
    is isotropic.
    """

    rho: float
    n: int
    eigenvalues: tuple[float, float]


def sphericity_rho(residual_covariance, n: int) -> SphericityStat:
    """Sphericity statistic of a symmetric positive-definite 2x2 matrix."""
    cov = np.asarray(residual_covariance, dtype=np.float64)
    if cov.shape != (2, 2) or not np.all(np.isfinite(cov)):
        raise InvalidInputError("covariance must be a finite 2x2 matrix")
    if abs(cov[0, 1] - cov[1, 0]) > 1e-9 * (1.0 + np.abs(cov).max()):
        raise InvalidInputError("covariance must be symmetric")
    ell = np.linalg.eigvalsh(cov)
    if ell[0] <= 0.0:
        raise InvalidInputError("covariance must be positive definite")
    l1, l2 = float(ell[1]), float(ell[0])
    a_hat = (l1 + l2) / 2.0
    g_hat = math.sqrt(l1 * l2)
    return SphericityStat(
        rho=2.0 * n * math.log(a_hat / g_hat), n=int(n), eigenvalues=(l1, l2)
    )


def pair_sphericity(pair: MatchedPair) -> SphericityStat:
    """Sphericity of the Full Procrustes residual scatter of a matched pair.

    The residuals z'_j - lam e^{i beta} z_j after optimal similarity
    alignment capture the remaining anisotropic distortion; their empirical
    covariance (maximum-likelihood normalization 1/n) feeds
    :func:`sphericity_rho`.
    """
    centered = pair.centered()
    beta, lam = full_procrustes(centered)
    residual = centered.query.points - lam * np.exp(1j * beta) * centered.template.points
    pts = np.column_stack([residual.real, residual.imag])
    pts = pts - pts.mean(axis=0)
    cov = pts.T @ pts / pair.n
    return sphericity_rho(cov, pair.n)


# ---------------------------------------------------------------------------
# Two-sample Kolmogorov-Smirnov test on the anisotropy rates.
# ---------------------------------------------------------------------------


def _ks_effective_factor(n1: int, n2: int) -> float:
    # small-sample correction of the effective-size factor (Stephens 1970);
    # the uncorrected sqrt(n1 n2/(n1+n2)) is visibly miscalibrated at n ~ 56
    en = math.sqrt(n1 * n2 / (n1 + n2))
    return en + 0.12 + 0.11 / en


def ks_two_sample(x, y) -> tuple[float, float]:
    """Two-sample KS statistic and asymptotic p-value.

    D is the sup-distance between the two right-continuous empirical CDFs;
    the p-value evaluates the Kolmogorov distribution at D scaled by the
    small-sample-corrected effective-size factor.
    """
    x = np.sort(np.asarray(x, dtype=np.float64))
    y = np.sort(np.asarray(y, dtype=np.float64))
    if x.size == 0 or y.size == 0:
        raise InvalidInputError("both samples must be non-empty")
    pooled = np.concatenate([x, y])
    cdf_x = np.searchsorted(x, pooled, side="right") / x.size
    cdf_y = np.searchsorted(y, pooled, side="right") / y.size
    d = float(np.max(np.abs(cdf_x - cdf_y)))
    return d, kolmogorov_sf(_ks_effective_factor(x.size, y.size) * d)


def kolmogorov_sf(t: float) -> float:
    """Survival function of the Kolmogorov distribution.

    Q(t) = 2 sum_{k>=1} (-1)^(k-1) exp(-2 k^2 t^2), clamped to [0, 1].
    """
    if t < 0.04:
        # the alternating series needs O(1/t) terms here while the true
        # value is 1 up to O(exp(-pi^2/(8 t^2))) < 1e-300
        return 1.0
    total = 0.0
    sign = 1.0
    for k in range(1, 201):
        term = math.exp(-2.0 * (k * t) ** 2)
        total += sign * term
        if term < 1e-16:
            break
        sign = -sign
    return min(max(2.0 * total, 0.0), 1.0)


def kolmogorov_quantile(q: float) -> float:
    """Value t with Q(t) = 1 - q, i.e. the q-quantile of the distribution."""
    if not (0.0 < q < 1.0):
        raise InvalidInputError("quantile level must lie in (0, 1)")
    return float(brentq(lambda t: kolmogorov_sf(t) - (1.0 - q), 0.04, 10.0, xtol=1e-12))


def test_tau_ks(tau_hat, tau_ref, alpha: float = 0.05) -> TestReport:
    """Reject isotropic growth when tau_hat and a no-growth reference sample
    have significantly different distributions (two-sample KS test)."""
    _check_alpha(alpha)
    tau_hat = np.asarray(tau_hat, dtype=np.float64)
    tau_ref = np.asarray(tau_ref, dtype=np.float64)
    d, p_value = ks_two_sample(tau_hat, tau_ref)
    factor = _ks_effective_factor(tau_hat.size, tau_ref.size)
    threshold = kolmogorov_quantile(1.0 - alpha) / factor
    return TestReport(
        test_id="tau_ks",
        statistic=d,
        threshold=threshold,
        p_value=p_value,
        decision=_decision(p_value < alpha),
        alpha=alpha,
        config={"n1": int(tau_hat.size), "n2": int(tau_ref.size)},
    )


# ---------------------------------------------------------------------------
# Joint confidence rectangle for (R_hat, sum rho).
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConfidenceRectangle:
    """A rectangle aligned with the covariance eigenvectors of replicates.

    Membership: |<theta - center, axes[i]>| <= eigenvalues[i] * scale for
    both axes (closed rectangle).
    """

    center: np.ndarray
    axes: np.ndarray  # rows e1, e2, orthonormal
    eigenvalues: tuple[float, float]
    scale: float

    @property
    def half_widths(self) -> tuple[float, float]:
        return (self.eigenvalues[0] * self.scale, self.eigenvalues[1] * self.scale)

    def scaled_max_coordinate(self, theta) -> float:
        theta = np.asarray(theta, dtype=np.float64)
        coords = self.axes @ (theta - self.center)
        return float(np.max(np.abs(coords) / np.asarray(self.eigenvalues)))

    def contains(self, theta) -> bool:
        return self.scaled_max_coordinate(theta) <= self.scale


def build_confidence_rectangle(replicates, alpha: float = 0.05) -> ConfidenceRectangle:
    """Smallest eigen-aligned rectangle containing floor((1-alpha) N) replicates.

    The centered replicates are projected on the eigenvectors of their
    empirical covariance and scaled by the eigenvalues; the rectangle scale
    is the floor((1-alpha) N)-th order statistic of the per-replicate
    scaled max-coordinate, so membership on the input replicates is exact
    by construction.
    """
    _check_alpha(alpha)
    theta = np.asarray(replicates, dtype=np.float64)
    if theta.ndim != 2 or theta.shape[1] != 2:
        raise InvalidInputError("replicates must be an (N, 2) array")
    n = theta.shape[0]
    if n < 10:
        raise InvalidInputError("need at least 10 replicates, got %d" % n)
    center = theta.mean(axis=0)
    centered = theta - center
    cov = centered.T @ centered / (n - 1)
    eigenvalues, vectors = np.linalg.eigh(cov)
    if eigenvalues[0] <= 0.0:
        raise DegenerateConfigurationError(
            "replicates are collinear; rectangle axes are undefined"
        )
    # descending order: e1 with the largest eigenvalue first
    order = [1, 0]
    axes = vectors.T[order]
    ell = eigenvalues[order]
    scores = np.max(np.abs(centered @ axes.T) / ell, axis=1)
    k = int(math.floor((1.0 - alpha) * n))
    if k < 1:
        raise InvalidInputError("alpha too large: no replicate would be covered")
    scale = float(np.sort(scores)[k - 1])
    axes = axes.copy()
    axes.setflags(write=False)
    center = center.copy()
    center.setflags(write=False)
    return ConfidenceRectangle(
        center=center,
        axes=axes,
        eigenvalues=(float(ell[0]), float(ell[1])),
        scale=scale,
    )


def test_joint(theta_hat, rect: ConfidenceRectangle, alpha: float = 0.05) -> TestReport:
    """Reject isotropic growth when (R_hat, sum rho) falls outside the rectangle."""
    _check_alpha(alpha)
    statistic = rect.scaled_max_coordinate(theta_hat)
    return TestReport(
        test_id="joint",
        statistic=statistic,
        threshold=rect.scale,
        p_value=None,
        decision=_decision(statistic > rect.scale),
        alpha=alpha,
        config={
            "center": [float(v) for v in rect.center],
            "eigenvalues": list(rect.eigenvalues),
            "scale": rect.scale,
        },
    )


# ---------------------------------------------------------------------------
# Neighborhood tests for the growth axis.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DistalTestConfig:
    """Configuration of the axis (neighborhood) tests.

    ``eta`` is the alignment precision on the axis-angle scale; the doubled
    scale accuracy is ``epsilon = 2 * eta``.  ``axis`` is the target axis
    angle, 0 for the distal (horizontal) axis.
    """

    eta: float = 0.075
    alpha: float = 0.05
    bootstrap_b: int = 100
    axis: float = 0.0

    def __post_init__(self):
        _check_alpha(self.alpha)
        if not (0.0 < self.epsilon < math.pi / 2.0):
            raise InvalidInputError(
                "epsilon = 2*eta must lie in (0, pi/2), got %g" % self.epsilon
            )
        if self.bootstrap_b < 1:
            raise InvalidInputError("bootstrap_b must be >= 1")

    @property
    def epsilon(self) -> float:
        return 2.0 * self.eta


def solve_delta(kappa_times_r: float, epsilon: float, alpha: float) -> float | None:
    """Critical angle delta in (0, epsilon) of the von Mises axis test.

    Solves, for a von Mises location mu_bar with concentration
    c = kappa_hat * R_hat centered at the accuracy boundary epsilon,

        P(|mu_bar| > delta) = 1 - alpha,

    equivalently  integral_{-delta}^{delta} exp(c cos(m - epsilon)) dm
    = 2 pi alpha I0(c),  by bisection with adaptive quadrature to 1e-8.
    Returns None when no solution exists below epsilon; the test then never
    rejects, which keeps it conservative.
    """
    _check_alpha(alpha)
    if not (0.0 < epsilon < math.pi / 2.0):
        raise InvalidInputError("epsilon must lie in (0, pi/2), got %g" % epsilon)
    c = float(kappa_times_r)
    if not (math.isfinite(c) and c >= 0.0):
        raise InvalidInputError("kappa*R must be a finite non-negative real")

    if c > 1e6:
        # the conditional law is effectively N(epsilon, 1/c)
        delta = epsilon + _NORMAL.inv_cdf(alpha) / math.sqrt(c)
        return delta if 0.0 < delta < epsilon else None

    target = 2.0 * math.pi * alpha * _bessel_i0_scaled(c)

    def mass(delta: float) -> float:
        value, _ = quad(
            lambda m: math.exp(c * (math.cos(m - epsilon) - 1.0)),
            -delta,
            delta,
            epsabs=1e-13,
            epsrel=1e-11,
        )
        return value - target

    if mass(epsilon) <= 0.0:
        return None
    return float(brentq(mass, 0.0, epsilon, xtol=1e-12, rtol=8.9e-16))


def _shifted_mean(sample: AngleSample, axis: float) -> float:
    """Extrinsic mean measured relative to the doubled target axis."""
    total = np.exp(1j * (sample.values - 2.0 * axis)).sum()
    if abs(total) / len(sample) < MEAN_UNDEFINED_TOL:
        raise UndefinedMeanError("resultant length ~ 0; axis test undefined")
    return float(wrap_angle(np.angle(total)))


def test_distal_vm(sample: AngleSample, cfg: DistalTestConfig) -> TestReport:
    """Parametric neighborhood test for growth along the target axis.

    Conditioned on the resultant length, the extrinsic mean of a von Mises
    sample is again von Mises around the same location with concentration
    kappa times the resultant length |sum exp(i theta_j)| = m * R_hat (the
    un-normalized resultant; with the normalized one the test would be far
    too conservative and lose its boundary level).  The test rejects the
    null "growth is not along the axis" when |mu_bar| < delta with delta
    from :func:`solve_delta`.
    """
    mu_bar = _shifted_mean(sample, cfg.axis)
    r = resultant_length(sample)
    kappa = kappa_hat(min(r, 1.0 - 1e-12))
    kappa_times_r = kappa * len(sample) * r
    delta = solve_delta(kappa_times_r, cfg.epsilon, cfg.alpha)
    reject = delta is not None and abs(mu_bar) < delta
    return TestReport(
        test_id="distal_vm",
        statistic=abs(mu_bar),
        threshold=0.0 if delta is None else delta,
        p_value=None,
        decision=_decision(reject),
        alpha=cfg.alpha,
        epsilon=cfg.epsilon,
        config={
            "m": len(sample),
            "axis": cfg.axis,
            "mu_bar": mu_bar,
            "resultant": r,
            "kappa_hat": kappa,
            "kappa_times_r": kappa_times_r,
            "delta": delta,
        },
    )


def test_distal_boot(
    sample: AngleSample,
    cfg: DistalTestConfig,
    rng: int | np.random.Generator,
) -> TestReport:
    """Nonparametric neighborhood test via a bootstrap-studentized statistic.

    B with-replacement resamples yield the variance V* of the squared
    extrinsic mean; T = (mu_bar^2 - epsilon^2) / sqrt(V*) is compared with
    the standard normal alpha-quantile.  When all resample means coincide
    (V* ~ 0) the decision falls back to the sign of mu_bar^2 - epsilon^2.
    """
    if len(sample) < 5:
        raise InvalidInputError("bootstrap test needs a sample of size >= 5")
    if cfg.bootstrap_b < 50:
        raise InvalidInputError("bootstrap_b must be >= 50")
    seed = rng if isinstance(rng, (int, np.integer)) else None
    generator = np.random.default_rng(rng) if seed is not None else rng

    mu_bar = _shifted_mean(sample, cfg.axis)
    shifted = wrap_angle(sample.values - 2.0 * cfg.axis)
    m = len(sample)
    idx = generator.integers(0, m, size=(cfg.bootstrap_b, m))
    resample_means = np.angle(np.exp(1j * shifted[idx]).sum(axis=1))
    squares = resample_means**2
    v_star = float(np.var(squares, ddof=1))

    threshold = _NORMAL.inv_cdf(cfg.alpha)
    degenerate = v_star < 1e-16
    if degenerate:
        diff = mu_bar**2 - cfg.epsilon**2
        statistic = -math.inf if diff < 0 else (0.0 if diff == 0 else math.inf)
    else:
        statistic = (mu_bar**2 - cfg.epsilon**2) / math.sqrt(v_star)
    if math.isinf(statistic):
        p_value = 0.0 if statistic < 0 else 1.0
    else:
        p_value = _NORMAL.cdf(statistic)
    return TestReport(
        test_id="distal_boot",
        statistic=statistic,
        threshold=threshold,
        p_value=p_value,
        decision=_decision(statistic < threshold),
        alpha=cfg.alpha,
        epsilon=cfg.epsilon,
        seed=int(seed) if seed is not None else None,
        config={
            "m": m,
            "axis": cfg.axis,
            "B": cfg.bootstrap_b,
            "mu_bar": mu_bar,
            "v_star": v_star,
            "degenerate_bootstrap": degenerate,
        },
    )


def study_theta(dataset, table) -> np.ndarray:
    """Assemble the joint statistic theta = (R_hat, sum rho) of a study.

    ``table`` holds the growth estimates of ``dataset``; the resultant is
    taken over the doubled fitted axis angles and rho sums the per-pair
    Full Procrustes residual sphericity.
    """
    sample = AngleSample(table.doubled_gammas())
    rho_total = 0.0
    for row in table:
        pair = dataset.get(row.finger_id, row.impression_id)
        rho_total += pair_sphericity(pair).rho
    return np.array([resultant_length(sample), rho_total])
