"""Expected-shortfall estimators.

The plug-in estimator integrates the empirical quantile function over the top
alpha-fraction, which reduces to an exact weighted sum of order statistics:
with k = floor((1-alpha)*N),

    T_hat = (1/alpha) * sum_{i=k+1..N} w_i * X_(i),
    w_i   = i/N - max((i-1)/N, 1-alpha),

so no numerical integration is involved.  The robust estimator clamps the
full-sample plug-in to an interval formed by interpolated quantiles of
disjoint-block plug-in estimates; with ``beta1 = beta2 = 0.5`` this degenerates
to the median of blocks.

Block layout: with stride ``m + gap``, block j occupies the trailing ``m``
positions of its stride, so ``gap = 0`` is the plain partition into
consecutive blocks of size m, and ``gap = m`` keeps every other block (the
layout used for weakly dependent data, where the discarded spacer blocks
decouple the retained ones).

All estimators come in a scalar form (one sample) and a ``*_batch`` form
operating row-wise on a (trials, N) matrix; the batch forms are exact
vectorizations used by the Monte Carlo engine and rely on ``np.partition``
instead of full sorts.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .functionals import check_alpha

__all__ = [
    "EstimatorConfig",
    "plugin_es",
    "interp_quantile",
    "block_estimates",
    "truncated_es",
    "truncated_es_interval",
    "median_of_blocks",
    "trimmed_es",
    "suggested_block_size",
    "plugin_es_batch",
    "block_estimates_batch",
    "interp_quantile_rows",
    "truncated_es_batch",
    "median_of_blocks_batch",
    "trimmed_es_batch",
]

THEORY_BETA_RANGE = (0.35, 0.65)

#: Defaults matching the block size and quantile levels used throughout the
#: numerical experiments.
DEFAULT_M = 250
DEFAULT_BETA1 = 0.5
DEFAULT_BETA2 = 0.6
DEFAULT_TRIM_C = 0.25
DEFAULT_TRIM_EXPONENT = 1.0 / 3.0


def _as_sample(values) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64).ravel()
    if arr.size == 0:
        raise ParameterError("sample: must contain at least one value")
    if not np.all(np.isfinite(arr)):
        raise ParameterError("sample: values must be finite reals")
    return arr


def _as_batch(samples) -> np.ndarray:
    arr = np.asarray(samples, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] == 0:
        raise ParameterError("samples: expected a (trials, N) matrix with N >= 1")
    return arr


def _top_index(n: int, alpha: float) -> int:
    # floor((1-alpha)*n); the weight formula self-corrects off-by-one float
    # fuzz because the boundary weight vanishes in that case.
    return min(int(math.floor((1.0 - alpha) * n)), n - 1)


def plugin_es(sample, alpha: float) -> float:
    """Plug-in expected shortfall: the exact weighted order-statistic sum."""
    alpha = check_alpha(alpha)
    values = np.sort(_as_sample(sample))
    n = values.size
    k = _top_index(n, alpha)
    i = np.arange(k + 1, n + 1, dtype=np.float64)
    weights = i / n - np.maximum((i - 1.0) / n, 1.0 - alpha)
    return float(weights @ values[k:] / alpha)


def plugin_es_batch(samples, alpha: float) -> np.ndarray:
    """Row-wise plug-in estimates for a (trials, N) matrix."""
    alpha = check_alpha(alpha)
    a = _as_batch(samples)
    n = a.shape[1]
    k = _top_index(n, alpha)
    part = np.partition(a, k, axis=-1)
    boundary_w = (k + 1.0) / n - max(k / n, 1.0 - alpha)
    top_sum = part[..., k + 1:].sum(axis=-1)
    return (top_sum / n + boundary_w * part[..., k]) / alpha


def interp_quantile(values, beta: float) -> float:
    """Linearly interpolated empirical quantile of ``values`` at level ``beta``.

    Breakpoints sit at (j-1)/(n-1) for the j-th order statistic, j = 1..n.
    A single value is returned as-is (documented extension of the n >= 2 case).
    """
    if not 0.0 <= beta <= 1.0:
        raise ParameterError(f"beta: must lie in [0, 1] (got {beta})")
    values = _as_sample(values)
    if values.size == 1:
        return float(values[0])
    ordered = np.sort(values)
    return float(_interp_sorted(ordered[None, :], beta)[0])


def _interp_sorted(ordered: np.ndarray, beta: float) -> np.ndarray:
    n = ordered.shape[-1]
    position = beta * (n - 1)
    j = min(int(math.floor(position)), n - 2)
    frac = position - j
    return (1.0 - frac) * ordered[..., j] + frac * ordered[..., j + 1]


def interp_quantile_rows(values, beta: float) -> np.ndarray:
    """Row-wise :func:`interp_quantile` for a 2-d array."""
    if not 0.0 <= beta <= 1.0:
        raise ParameterError(f"beta: must lie in [0, 1] (got {beta})")
    arr = _as_batch(values)
    if arr.shape[1] == 1:
        return arr[:, 0].copy()
    return _interp_sorted(np.sort(arr, axis=-1), beta)


def _block_count(n: int, m: int, gap: int) -> int:
    if m < 1:
        raise ParameterError(f"m: block size must be >= 1 (got {m})")
    if gap < 0:
        raise ParameterError(f"gap: must be >= 0 (got {gap})")
    return n // (m + gap)


def _block_view(a: np.ndarray, m: int, gap: int) -> np.ndarray:
    """Reshape trailing axis into complete blocks; drops leftover samples."""
    n = a.shape[-1]
    count = _block_count(n, m, gap)
    if count == 0:
        raise ParameterError(
            f"m: no complete block fits (N={n}, m={m}, gap={gap})"
        )
    stride = m + gap
    lead = a.shape[:-1]
    return a[..., : count * stride].reshape(*lead, count, stride)[..., gap:]


def block_estimates(sample, alpha: float, m: int, gap: int = 0) -> np.ndarray:
    """Plug-in estimate of each complete block, in block order.

    Blocks of size ``m`` are taken with stride ``m + gap``; each stride keeps
    its trailing block, so with ``gap = m`` only every other block survives.
    """
    alpha = check_alpha(alpha)
    values = _as_sample(sample)
    return plugin_es_batch(_block_view(values[None, :], m, gap)[0], alpha)


def block_estimates_batch(samples, alpha: float, m: int, gap: int = 0) -> np.ndarray:
    """Row-wise block estimates; shape (trials, n_blocks)."""
    alpha = check_alpha(alpha)
    a = _as_batch(samples)
    blocks = _block_view(a, m, gap)
    n_rows, n_blocks, width = blocks.shape
    flat = plugin_es_batch(blocks.reshape(n_rows * n_blocks, width), alpha)
    return flat.reshape(n_rows, n_blocks)


def _check_betas(beta1: float, beta2: float) -> None:
    if not 0.0 <= beta1 <= beta2 <= 1.0:
        raise ParameterError(
            f"beta1/beta2: need 0 <= beta1 <= beta2 <= 1 (got {beta1}, {beta2})"
        )
    lo, hi = THEORY_BETA_RANGE
    if beta1 < lo or beta2 > hi:
        warnings.warn(
            f"quantile levels ({beta1}, {beta2}) lie outside the guaranteed "
            f"range [{lo}, {hi}]",
            stacklevel=3,
        )


def _require_two_blocks(n: int, m: int, gap: int) -> None:
    if _block_count(n, m, gap) < 2:
        max_m = n // 2 - gap
        hint = f"reduce m (largest valid m is {max_m})" if max_m >= 1 else "provide more data"
        raise ParameterError(f"m: need >= 2 complete blocks; {hint}")


def truncated_es_interval(sample, alpha: float, m: int = DEFAULT_M,
                          beta1: float = DEFAULT_BETA1, beta2: float = DEFAULT_BETA2,
                          gap: int = 0) -> tuple[float, float, float]:
    """(estimate, lower clamp, upper clamp) of the truncated estimator."""
    alpha = check_alpha(alpha)
    _check_betas(beta1, beta2)
    values = _as_sample(sample)
    _require_two_blocks(values.size, m, gap)
    blocks = np.sort(block_estimates(values, alpha, m, gap))
    lower = float(_interp_sorted(blocks[None, :], beta1)[0])
    upper = float(_interp_sorted(blocks[None, :], beta2)[0])
    full = plugin_es(values, alpha)
    return min(max(full, lower), upper), lower, upper


def truncated_es(sample, alpha: float, m: int = DEFAULT_M,
                 beta1: float = DEFAULT_BETA1, beta2: float = DEFAULT_BETA2,
                 gap: int = 0) -> float:
    """Full-sample plug-in clamped to interpolated block-estimate quantiles."""
    return truncated_es_interval(sample, alpha, m, beta1, beta2, gap)[0]


def truncated_es_batch(samples, alpha: float, m: int = DEFAULT_M,
                       beta1: float = DEFAULT_BETA1, beta2: float = DEFAULT_BETA2,
                       gap: int = 0, return_interval: bool = False):
    """Row-wise truncated estimates; optionally also the clamp intervals."""
    alpha = check_alpha(alpha)
    _check_betas(beta1, beta2)
    a = _as_batch(samples)
    _require_two_blocks(a.shape[1], m, gap)
    blocks = np.sort(block_estimates_batch(a, alpha, m, gap), axis=-1)
    lower = _interp_sorted(blocks, beta1)
    upper = _interp_sorted(blocks, beta2)
    full = plugin_es_batch(a, alpha)
    clamped = np.minimum(np.maximum(full, lower), upper)
    if return_interval:
        return clamped, lower, upper
    return clamped


def median_of_blocks(sample, alpha: float, m: int = DEFAULT_M, gap: int = 0) -> float:
    """Interpolated median of the block estimates."""
    alpha = check_alpha(alpha)
    values = _as_sample(sample)
    blocks = block_estimates(values, alpha, m, gap)
    if blocks.size == 1:
        warnings.warn("only one complete block; median of blocks degenerates "
                      "to a single block estimate", stacklevel=2)
        return float(blocks[0])
    return interp_quantile(blocks, 0.5)


def median_of_blocks_batch(samples, alpha: float, m: int = DEFAULT_M, gap: int = 0) -> np.ndarray:
    alpha = check_alpha(alpha)
    blocks = block_estimates_batch(samples, alpha, m, gap)
    if blocks.shape[1] == 1:
        warnings.warn("only one complete block; median of blocks degenerates "
                      "to a single block estimate", stacklevel=2)
        return blocks[:, 0].copy()
    return _interp_sorted(np.sort(blocks, axis=-1), 0.5)


def _trim_count(n: int, c: float, exponent: float) -> int:
    if c <= 0.0:
        raise ParameterError(f"c: trimming constant must be > 0 (got {c})")
    k = int(math.floor(c * n**exponent))
    if k >= n:
        raise ParameterError(f"c: trimming removes the whole sample (k={k}, N={n})")
    return k


def trimmed_es(sample, alpha: float, c: float = DEFAULT_TRIM_C,
               exponent: float = DEFAULT_TRIM_EXPONENT) -> float:
    """Plug-in estimate after discarding the floor(c * N**exponent) largest points."""
    alpha = check_alpha(alpha)
    values = np.sort(_as_sample(sample))
    k = _trim_count(values.size, c, exponent)
    kept = values[: values.size - k] if k else values
    return plugin_es(kept, alpha)


def trimmed_es_batch(samples, alpha: float, c: float = DEFAULT_TRIM_C,
                     exponent: float = DEFAULT_TRIM_EXPONENT) -> np.ndarray:
    alpha = check_alpha(alpha)
    a = _as_batch(samples)
    n = a.shape[1]
    k = _trim_count(n, c, exponent)
    if k == 0:
        return plugin_es_batch(a, alpha)
    kept = n - k
    k2 = _top_index(kept, alpha)
    pivots = sorted({k2, kept - 1})
    part = np.partition(a, pivots, axis=-1)
    boundary_w = (k2 + 1.0) / kept - max(k2 / kept, 1.0 - alpha)
    top_sum = part[:, k2 + 1: kept].sum(axis=-1)
    return (top_sum / kept + boundary_w * part[:, k2]) / alpha


def suggested_block_size(eps: float) -> int:
    """Theory-suggested block size ceil(11/eps**2) for accuracy scale ``eps``."""
    if not 0.0 < eps <= 1.0:
        raise ParameterError(f"eps: must lie in (0, 1] (got {eps})")
    # scale down by 1 ulp so exact integer ratios are not pushed up by
    # floating-point round-up in eps*eps
    return int(math.ceil((11.0 / (eps * eps)) * (1.0 - 1e-12)))


# --- configuration ------------------------------------------------------------

_KINDS = ("plugin", "truncated", "median_of_blocks", "trimmed")


@dataclass(frozen=True)
class EstimatorConfig:
    """A fully-specified estimator; ``kind`` selects which fields apply."""

    kind: str
    m: int = DEFAULT_M
    beta1: float = DEFAULT_BETA1
    beta2: float = DEFAULT_BETA2
    gap: int = 0
    trim_c: float = DEFAULT_TRIM_C
    trim_exponent: float = DEFAULT_TRIM_EXPONENT

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ParameterError(f"kind: unknown estimator {self.kind!r} (use one of {_KINDS})")
        if self.kind in ("truncated", "median_of_blocks"):
            if self.m < 1:
                raise ParameterError(f"m: block size must be >= 1 (got {self.m})")
            if self.gap < 0:
                raise ParameterError(f"gap: must be >= 0 (got {self.gap})")
        if self.kind == "truncated" and not 0.0 <= self.beta1 <= self.beta2 <= 1.0:
            raise ParameterError(
                f"beta1/beta2: need 0 <= beta1 <= beta2 <= 1 (got {self.beta1}, {self.beta2})"
            )

    def label(self) -> str:
        if self.kind == "plugin":
            return "plugin"
        if self.kind == "truncated":
            gap = f",gap={self.gap}" if self.gap else ""
            return f"truncated(m={self.m},b1={self.beta1:g},b2={self.beta2:g}{gap})"
        if self.kind == "median_of_blocks":
            gap = f",gap={self.gap}" if self.gap else ""
            return f"median_of_blocks(m={self.m}{gap})"
        return f"trimmed(c={self.trim_c:g},exp={self.trim_exponent:g})"

    def evaluate(self, sample, alpha: float) -> float:
        if self.kind == "plugin":
            return plugin_es(sample, alpha)
        if self.kind == "truncated":
            return truncated_es(sample, alpha, self.m, self.beta1, self.beta2, self.gap)
        if self.kind == "median_of_blocks":
            return median_of_blocks(sample, alpha, self.m, self.gap)
        return trimmed_es(sample, alpha, self.trim_c, self.trim_exponent)

    def evaluate_batch(self, samples, alpha: float) -> np.ndarray:
        if self.kind == "plugin":
            return plugin_es_batch(samples, alpha)
        if self.kind == "truncated":
            return truncated_es_batch(samples, alpha, self.m, self.beta1, self.beta2, self.gap)
        if self.kind == "median_of_blocks":
            return median_of_blocks_batch(samples, alpha, self.m, self.gap)
        return trimmed_es_batch(samples, alpha, self.trim_c, self.trim_exponent)

    def min_sample_size(self) -> int:
        """Smallest N the estimator accepts."""
        if self.kind == "truncated":
            return 2 * (self.m + self.gap)
        if self.kind == "median_of_blocks":
            return self.m + self.gap
        return 1

    def to_json(self) -> dict:
        out = {"kind": self.kind}
        if self.kind in ("truncated", "median_of_blocks"):
            out["m"] = self.m
            out["gap"] = self.gap
        if self.kind == "truncated":
            out["beta1"] = self.beta1
            out["beta2"] = self.beta2
        if self.kind == "trimmed":
            out["trim_c"] = self.trim_c
            out["trim_exp"] = self.trim_exponent
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "EstimatorConfig":
        known = {"kind", "m", "beta1", "beta2", "gap", "trim_c", "trim_exp"}
        bad = set(obj) - known
        if bad:
            raise ParameterError(f"estimator: unknown field(s) {sorted(bad)}")
        return cls(
            kind=obj.get("kind", ""),
            m=int(obj.get("m", DEFAULT_M)),
            beta1=float(obj.get("beta1", DEFAULT_BETA1)),
            beta2=float(obj.get("beta2", DEFAULT_BETA2)),
            gap=int(obj.get("gap", 0)),
            trim_c=float(obj.get("trim_c", DEFAULT_TRIM_C)),
            trim_exponent=float(obj.get("trim_exp", DEFAULT_TRIM_EXPONENT)),
        )
