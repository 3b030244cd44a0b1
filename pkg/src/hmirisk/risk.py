"""Risk-informed failure-event candidates from error and time-deviated paths.

Task durations follow the IDHEAS-ECA guidance: lognormal with shape
sigma = 0.28, scale mu = ln(median); when only a 95th-percentile time is
known the median is approximated as t95 / 1.585. A path is time-deviated
when the z-score of its log median against its category's pooled
log-duration distribution reaches a threshold (default 1.0). Error-prone
paths are those with at least one annotated error; their error
probability uses Laplace smoothing.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

from .graph import InterfaceGraph, resolve_path
from .ingest import ErrorKind, PathSamples, Procedure

log = logging.getLogger(__name__)

SIGMA_DEFAULT = 0.28
P95_TO_MEDIAN_RATIO = 1.585  # rounding of exp(1.645 * 0.28)
TAU_DEFAULT = 1.0
ALPHA_DEFAULT = 1.0


@dataclass(frozen=True)
class LognormalTimeModel:
    mu: float  # natural log of the median, in log-seconds
    sigma: float = SIGMA_DEFAULT

    def median(self) -> float:
        return math.exp(self.mu)


def median_from_p95(t95: float) -> float:
    """Median duration approximated from the 95th percentile."""
    if t95 <= 0:
        raise ValueError(f"t95 must be positive, got {t95}")
    return t95 / P95_TO_MEDIAN_RATIO


def sample_median_lower(values: Sequence[float]) -> float:
    """Median taking the lower of the two middle values for even counts."""
    if not values:
        raise ValueError("empty sample")
    ordered = sorted(values)
    return ordered[(len(ordered) - 1) // 2]


def fit_time_model(durations: Sequence[float], sigma: float = SIGMA_DEFAULT) -> LognormalTimeModel:
    """Lognormal model with mu = ln(sample median) and fixed sigma."""
    if not durations:
        raise ValueError("cannot fit a time model on an empty sample")
    if any(d <= 0 for d in durations):
        raise ValueError("durations must be positive")
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    return LognormalTimeModel(mu=math.log(sample_median_lower(durations)), sigma=sigma)


def model_from_samples_or_p95(
    durations: Sequence[float] | None,
    t95: float | None = None,
    sigma: float = SIGMA_DEFAULT,
) -> LognormalTimeModel:
    """Empirical fit when durations exist; t95 conversion as the fallback."""
    if durations:
        return fit_time_model(durations, sigma)
    if t95 is not None:
        return LognormalTimeModel(mu=math.log(median_from_p95(t95)), sigma=sigma)
    raise ValueError("need durations or a t95 value")


def normal_sf(z: float) -> float:
    """Upper-tail probability of the standard normal, via erfc."""
    return 0.5 * math.erfc(z / math.sqrt(2.0))


def tail_prob(model: LognormalTimeModel, t: float) -> float:
    """P(T > t) under the lognormal duration model."""
    if t <= 0:
        raise ValueError(f"t must be positive, got {t}")
    return normal_sf((math.log(t) - model.mu) / model.sigma)


Grouping = Mapping[str, str] | Callable[[str], str]


def _category_of(grouping: Grouping, path_id: str) -> str:
    return grouping(path_id) if callable(grouping) else grouping[path_id]


def system_category(g: InterfaceGraph, path_id: str) -> str:
    """Category of a path: the id of the system root its chain starts at."""
    return resolve_path(g, path_id).node_chain[0]


@dataclass(frozen=True)
class TimeDeviation:
    path_id: str
    category: str
    z: float
    threshold_s: float
    tail_prob_at_threshold: float
    flagged: bool


def time_deviation_detail(
    samples: Mapping[str, PathSamples],
    grouping: Grouping,
    tau: float = TAU_DEFAULT,
    sigma: float = SIGMA_DEFAULT,
) -> dict[str, TimeDeviation]:
    """Per-path deviation z-scores against pooled category log durations.

    For each category the log durations of all member paths are pooled;
    a path's z-score is (ln median_path - pooled mean) / pooled std. The
    category threshold exp(mean + tau * std) converts back to seconds,
    and tail_prob_at_threshold is the path's own fitted model evaluated
    there. Categories with a single path are skipped with a warning;
    zero pooled variance yields no flags. Non-positive durations (e.g.
    zero-length steps) carry no information on the log scale and are
    excluded.
    """
    by_category: dict[str, list[str]] = {}
    for path_id in samples:
        by_category.setdefault(_category_of(grouping, path_id), []).append(path_id)

    out: dict[str, TimeDeviation] = {}
    for category in sorted(by_category):
        members = sorted(by_category[category])
        positive = {p: [d for d in samples[p].durations if d > 0] for p in members}
        with_data = [p for p in members if positive[p]]
        if len(with_data) < 2:
            log.warning("category %r has %d path(s) with durations; skipped", category, len(with_data))
            continue
        pooled = [math.log(d) for p in with_data for d in positive[p]]
        mean = sum(pooled) / len(pooled)
        var = sum((x - mean) ** 2 for x in pooled) / len(pooled)
        std = math.sqrt(var)
        if std == 0.0:
            continue
        threshold_s = math.exp(mean + tau * std)
        for p in with_data:
            model = fit_time_model(positive[p], sigma)
            z = (model.mu - mean) / std
            out[p] = TimeDeviation(
                path_id=p,
                category=category,
                z=z,
                threshold_s=threshold_s,
                tail_prob_at_threshold=tail_prob(model, threshold_s),
                flagged=z >= tau,
            )
    return out


def detect_time_deviated(
    samples: Mapping[str, PathSamples],
    grouping: Grouping,
    tau: float = TAU_DEFAULT,
) -> set[str]:
    """Paths whose log median sits tau pooled-stds above their category mean."""
    return {p for p, d in time_deviation_detail(samples, grouping, tau).items() if d.flagged}


@dataclass(frozen=True)
class ErrorPathStats:
    error_prob: float
    kinds: frozenset[ErrorKind]


def detect_error_paths(
    samples: Mapping[str, PathSamples],
    alpha: float = ALPHA_DEFAULT,
) -> dict[str, ErrorPathStats]:
    """Every path with at least one annotated error, with smoothed probability.

    error_prob = (erroneous attempts + alpha) / (attempts + 2 alpha).
    Paths without errors are absent regardless of alpha.
    """
    if alpha < 0:
        raise ValueError(f"alpha must be non-negative, got {alpha}")
    out: dict[str, ErrorPathStats] = {}
    for path_id, sample in samples.items():
        if sample.error_steps < 1:
            continue
        kinds = set()
        if sample.execution_errors:
            kinds.add(ErrorKind.EXECUTION)
        if sample.outcome_errors:
            kinds.add(ErrorKind.OUTCOME)
        out[path_id] = ErrorPathStats(
            error_prob=(sample.error_steps + alpha) / (sample.attempts + 2 * alpha),
            kinds=frozenset(kinds),
        )
    return out


@dataclass(frozen=True)
class PathRisk:
    path_id: str
    error_prob: float
    error_kinds: frozenset[ErrorKind]
    time_flag: bool
    tail_prob_at_threshold: float
    provenance: frozenset[str]  # subset of {"error_path", "time_path"}


@dataclass(frozen=True)
class HfeReport:
    candidates: tuple[PathRisk, ...]
    per_procedure: dict[str, int]
    prioritized_procedures: tuple[str, ...]


def identify_hfes(
    error_paths: Mapping[str, ErrorPathStats],
    time_paths: Iterable[str],
    g: InterfaceGraph,
    procedures: Sequence[Procedure] = (),
    time_detail: Mapping[str, TimeDeviation] | None = None,
) -> HfeReport:
    """Union error-prone and time-deviated paths into HFE candidates.

    Provenance records which detector(s) produced each candidate.
    Procedures are ranked by how many distinct candidate terminal nodes
    their steps touch (descending count, ties by procedure id).
    """
    time_set = set(time_paths)
    candidates = []
    for path_id in sorted(set(error_paths) | time_set):
        resolve_path(g, path_id)  # cross-reference check: must exist in this graph
        provenance = set()
        if path_id in error_paths:
            provenance.add("error_path")
        if path_id in time_set:
            provenance.add("time_path")
        stats = error_paths.get(path_id)
        detail = (time_detail or {}).get(path_id)
        candidates.append(
            PathRisk(
                path_id=path_id,
                error_prob=stats.error_prob if stats else 0.0,
                error_kinds=stats.kinds if stats else frozenset(),
                time_flag=path_id in time_set,
                tail_prob_at_threshold=detail.tail_prob_at_threshold if detail else 0.0,
                provenance=frozenset(provenance),
            )
        )

    candidate_nodes = {resolve_path(g, c.path_id).node_chain[-1] for c in candidates}
    per_procedure: dict[str, int] = {}
    for proc in procedures:
        touched = set()
        for step in proc.steps:
            if step.target_path is None:
                continue
            node = resolve_path(g, step.target_path).node_chain[-1]
            if node in candidate_nodes:
                touched.add(node)
        per_procedure[proc.procedure_id] = len(touched)
    prioritized = tuple(sorted(per_procedure, key=lambda pid: (-per_procedure[pid], pid)))
    return HfeReport(tuple(candidates), per_procedure, prioritized)


def load_t95_overrides(text: str) -> dict[str, float]:
    """Parse the optional `path_id,t95_seconds` override CSV."""
    overrides: dict[str, float] = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.lower().startswith("path_id"):
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise ValueError(f"line {line_no}: expected 'path_id,t95_seconds', got {line!r}")
        overrides[parts[0].strip()] = float(parts[1])
    return overrides
