"""Local-surrogate forecast explanations.

A forecast's horizon-1 instance is perturbed with Gaussian noise scaled by the
training stds, each sample is weighted by a Gaussian proximity kernel over
standardized distance, and a kernel-weighted ridge surrogate is fit. The
surrogate's coefficients, ordered by absolute weight, are the attribution
list; its weighted R² on the same samples is the fidelity score. Features the
audience may not see are redacted from the visible list but still count
toward fidelity.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Any, Callable, Mapping, Sequence

import numpy as np

from .errors import DegenerateLocalityError, UsageError
from .validation import check_feature_vector, check_positive

MIN_SAMPLES = 50
DEFAULT_N_SAMPLES = 1000
DEFAULT_SURROGATE_LAMBDA = 0.01
DEFAULT_KERNEL_SIGMA_FACTOR = 0.75

LOW_QUALITY_MEAN = 2.5
LOW_QUALITY_MIN_RATINGS = 3
LOW_FIDELITY_R2 = 0.5
#: implicit dismissals count half an evidence unit toward the low-quality flag
DISMISSAL_EVIDENCE = 0.5
EVIDENCE_THRESHOLD = 3.0
LOW_RATING_BELOW = 3


def default_sigma(n_features: int) -> float:
    return DEFAULT_KERNEL_SIGMA_FACTOR * math.sqrt(n_features)


def perturb(
    instance: Mapping[str, float],
    stds: Mapping[str, float],
    n: int,
    seed: int,
) -> list[dict[str, float]]:
    """Draw ``n`` Gaussian perturbations of ``instance`` scaled per-feature.

    Zero-std features are copied unchanged; lag features are clamped at zero.
    Deterministic for a fixed seed.
    """
    if n < MIN_SAMPLES:
        raise UsageError(f"need at least {MIN_SAMPLES} perturbation samples, got {n}")
    instance = check_feature_vector(instance)
    names = list(instance)
    for name in names:
        if stds.get(name, 0.0) < 0:
            raise UsageError(f"std for feature {name!r} must be nonnegative")
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal((n, len(names)))
    samples = []
    for i in range(n):
        z = {}
        for j, name in enumerate(names):
            std = stds.get(name, 0.0)
            v = instance[name] if std == 0.0 else instance[name] + noise[i, j] * std
            if name.startswith("lag_"):
                v = max(0.0, v)
            z[name] = float(v)
        samples.append(z)
    return samples


def kernel_weight(
    instance: Mapping[str, float],
    sample: Mapping[str, float],
    sigma: float,
    stds: Mapping[str, float],
) -> float:
    """exp(-d²/σ²) over the standardized Euclidean distance; zero-std features
    are excluded from the distance."""
    check_positive(sigma, "kernel width")
    d2 = 0.0
    for name, x in instance.items():
        std = stds.get(name, 0.0)
        if std == 0.0:
            continue
        d2 += ((sample[name] - x) / std) ** 2
    return float(math.exp(-d2 / (sigma * sigma)))


def fit_surrogate(
    Z: np.ndarray,
    f: np.ndarray,
    weights: np.ndarray,
    lam: float,
) -> tuple[float, np.ndarray, float]:
    """Kernel-weighted ridge with an unpenalized intercept.

    Minimizes sum_i pi_i (f_i - w.z_i - b)^2 + lam * ||w||^2 and returns
    (intercept, coefficients, weighted R^2). R^2 is 1 by convention when the
    weighted variance of ``f`` is zero.
    """
    Z = np.asarray(Z, dtype=float)
    f = np.asarray(f, dtype=float)
    pi = np.asarray(weights, dtype=float)
    n, p = Z.shape
    if n < MIN_SAMPLES:
        raise UsageError(f"need at least {MIN_SAMPLES} samples, got {n}")
    if lam < 0:
        raise UsageError("surrogate ridge strength must be nonnegative")
    total = float(np.sum(pi))
    if total <= 0.0:
        raise DegenerateLocalityError("all perturbation samples have zero kernel weight")
    # normal equations of the penalized objective, intercept block unpenalized
    A = np.zeros((p + 1, p + 1))
    A[0, 0] = total
    A[0, 1:] = pi @ Z
    A[1:, 0] = A[0, 1:]
    A[1:, 1:] = Z.T @ (Z * pi[:, None]) + lam * np.eye(p)
    b = np.zeros(p + 1)
    b[0] = float(pi @ f)
    b[1:] = Z.T @ (pi * f)
    try:
        sol = np.linalg.solve(A, b)
    except np.linalg.LinAlgError:
        sol, *_ = np.linalg.lstsq(A, b, rcond=None)
    intercept = float(sol[0])
    coef = sol[1:]
    fitted = intercept + Z @ coef
    f_bar = b[0] / total
    sse = float(np.sum(pi * (f - fitted) ** 2))
    sst = float(np.sum(pi * (f - f_bar) ** 2))
    # zero weighted variance (constant response) counts as a perfect fit
    scale = total * max(1.0, float(np.max(np.abs(f))) ** 2) if len(f) else 1.0
    r2 = 1.0 if sst <= 1e-12 * scale else 1.0 - sse / sst
    return intercept, coef, r2


@dataclass(frozen=True)
class Explanation:
    explanation_id: str
    forecast_id: str
    instance: Mapping[str, float]
    intercept: float
    #: (feature, weight) sorted by |weight| descending, before redaction
    attributions: tuple[tuple[str, float], ...]
    fidelity_r2: float
    kernel_sigma: float
    n_samples: int
    seed: int
    audience_role: str
    redacted_features: tuple[str, ...]

    def visible_attributions(self) -> list[dict[str, Any]]:
        """Attribution list for the audience: redacted entries keep their rank
        but expose neither name nor weight."""
        out = []
        redacted = set(self.redacted_features)
        for name, weight in self.attributions:
            if name in redacted:
                out.append({"feature": "redacted"})
            else:
                out.append({"feature": name, "weight": round(weight, 6)})
        return out

    def to_payload(self) -> dict[str, Any]:
        return {
            "explanation_id": self.explanation_id,
            "forecast_id": self.forecast_id,
            "attributions": self.visible_attributions(),
            "intercept": round(self.intercept, 6),
            "fidelity_r2": round(self.fidelity_r2, 6),
            "kernel_sigma": self.kernel_sigma,
            "n_samples": self.n_samples,
            "seed": self.seed,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_payload(), sort_keys=True)


class LocalSurrogateExplainer:
    """Pipeline: perturb -> kernel-weight -> weighted ridge -> ranked attributions."""

    def __init__(
        self,
        n_samples: int = DEFAULT_N_SAMPLES,
        surrogate_lambda: float = DEFAULT_SURROGATE_LAMBDA,
        sigma: float | None = None,
    ):
        self.n_samples = n_samples
        self.surrogate_lambda = surrogate_lambda
        self.sigma = sigma

    def explain_instance(
        self,
        instance: Mapping[str, float],
        predict_fn: Callable[[Mapping[str, float]], float],
        stds: Mapping[str, float],
        seed: int,
    ) -> tuple[float, list[tuple[str, float]], float, float]:
        """Returns (intercept, ranked attributions, fidelity R², sigma used)."""
        instance = check_feature_vector(instance)
        names = list(instance)
        sigma = self.sigma if self.sigma is not None else default_sigma(len(names))
        check_positive(sigma, "kernel width")
        samples = perturb(instance, stds, self.n_samples, seed)
        Z = np.array([[z[name] for name in names] for z in samples])
        f = np.array([float(predict_fn(z)) for z in samples])
        pi = np.array([kernel_weight(instance, z, sigma, stds) for z in samples])
        intercept, coef, r2 = fit_surrogate(Z, f, pi, self.surrogate_lambda)
        ranked = sorted(
            zip(names, (float(c) for c in coef)),
            key=lambda item: (-abs(item[1]), item[0]),
        )
        return intercept, ranked, r2, sigma


@dataclass(frozen=True)
class QualityReport:
    explanation_id: str
    mean_rating: float | None
    n_ratings: int
    fidelity_r2: float
    evidence: float
    flags: tuple[str, ...]


def explanation_quality(
    explanation: Explanation,
    feedback_events: Sequence[Any],
) -> QualityReport:
    """Quality report from explicit ratings and implicit dismissals.

    ``low_quality`` raises when the mean rating is poor over enough ratings,
    or when the dismissal/low-rating evidence counter reaches its threshold
    with at least one explicit low rating. ``low_fidelity`` flags a weak
    surrogate fit regardless of feedback.
    """
    ratings = [
        float(e.value) for e in feedback_events
        if e.signal_kind == "rating" and e.target_id == explanation.explanation_id
    ]
    dismissals = sum(
        1 for e in feedback_events
        if e.signal_kind == "dismissed" and e.target_id == explanation.explanation_id
    )
    low_ratings = sum(1 for r in ratings if r < LOW_RATING_BELOW)
    evidence = DISMISSAL_EVIDENCE * dismissals + float(low_ratings)
    mean = sum(ratings) / len(ratings) if ratings else None
    flags = []
    if mean is not None and len(ratings) >= LOW_QUALITY_MIN_RATINGS and mean < LOW_QUALITY_MEAN:
        flags.append("low_quality")
    elif evidence >= EVIDENCE_THRESHOLD and low_ratings >= 1:
        flags.append("low_quality")
    if explanation.fidelity_r2 < LOW_FIDELITY_R2:
        flags.append("low_fidelity")
    return QualityReport(
        explanation_id=explanation.explanation_id,
        mean_rating=mean,
        n_ratings=len(ratings),
        fidelity_r2=explanation.fidelity_r2,
        evidence=evidence,
        flags=tuple(flags),
    )
