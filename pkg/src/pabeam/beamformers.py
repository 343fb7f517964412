"""Reconstruction kernels operating on delay-aligned snapshots.

Every kernel takes arrays whose last axis is the element axis; any leading
axes are treated as a batch of independent pixels, so a single M-vector and a
whole block of pixels go through the same code.

Kernels:
    das: plain sum of aligned samples.
    dmas: sum of all pairwise products of sign-rooted samples, computed in
        O(M) as ((sum x)^2 - sum x^2) / 2.
    mv: subaperture-averaged Capon output with weights from ``mv_weights``.
    mvb_dmas: the DMAS expansion with every inner sum replaced by an
        MV-weighted sum over the full aperture.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from pabeam.exceptions import SolverError, ValidationError
from pabeam.model import MvConfig

# Tolerance on the distortionless constraint sum(w) = 1
CONSTRAINT_TOLERANCE = 1e-9


class Method(str, Enum):
    """Available beamformers, in report order."""

    DAS = "das"
    DMAS = "dmas"
    MV = "mv"
    MVB_DMAS = "mvb-dmas"

    @classmethod
    def parse(cls, name: "str | Method") -> "Method":
        """Parse a method name, accepting ``mvb_dmas`` and any letter case.

        Raises:
            ValidationError: For unknown names
        """
        if isinstance(name, Method):
            return name
        normalized = str(name).strip().lower().replace("_", "-")
        try:
            return cls(normalized)
        except ValueError:
            choices = ", ".join(m.value for m in cls)
            raise ValidationError(f"method: unknown method '{name}' (choose from {choices})")

    @property
    def label(self) -> str:
        """Display label, e.g. ``MVB-DMAS``."""
        return self.value.upper()

    @property
    def is_adaptive(self) -> bool:
        """Whether the kernel needs MV weights and temporal context."""
        return self in (Method.MV, Method.MVB_DMAS)


@dataclass(frozen=True)
class MvWeights:
    """Capon weights for one subarray, or a batch of them.

    Attributes:
        w: (..., L) real weights, each vector summing to 1
    """

    w: np.ndarray

    def __post_init__(self):
        """Validate the distortionless constraint."""
        w = np.array(self.w, dtype=np.float64, copy=True)
        if w.ndim < 1 or w.shape[-1] < 1:
            raise ValidationError("w: expected at least one weight")
        if not np.all(np.isfinite(w)):
            raise ValidationError("w: weights must be finite")
        if np.any(np.abs(w.sum(axis=-1) - 1.0) > CONSTRAINT_TOLERANCE):
            raise ValidationError("w: weights must sum to 1 (distortionless constraint)")
        w.flags.writeable = False
        object.__setattr__(self, "w", w)

    @property
    def length(self) -> int:
        """Subarray length L."""
        return int(self.w.shape[-1])


def das(aligned) -> np.ndarray:
    """Delay-and-sum: the plain sum over elements.

    Args:
        aligned: (..., M) aligned samples

    Returns:
        (...) beamformed values
    """
    return np.asarray(aligned, dtype=np.float64).sum(axis=-1)


def sign_root_transform(aligned) -> np.ndarray:
    """Map every sample to sign(x) * sqrt(|x|).

    Restores the amplitude dimension of the pairwise products in DMAS; the
    absolute value keeps negative samples defined.
    """
    samples = np.asarray(aligned, dtype=np.float64)
    return np.sign(samples) * np.sqrt(np.abs(samples))


def _require_pairs(n_elements: int, method: str) -> None:
    if n_elements < 2:
        raise ValidationError(f"n_elements: {method} needs at least 2 elements, got {n_elements}")


def dmas(aligned) -> np.ndarray:
    """Delay-multiply-and-sum over sign-rooted samples.

    Args:
        aligned: (..., M) aligned samples, M >= 2

    Returns:
        (...) sum over i < j of xbar_i * xbar_j
    """
    transformed = sign_root_transform(aligned)
    _require_pairs(transformed.shape[-1], "DMAS")
    total = transformed.sum(axis=-1)
    return (total * total - np.sum(transformed * transformed, axis=-1)) / 2.0


def smoothed_covariance(context: np.ndarray, usable: np.ndarray, subarray_length: int) -> np.ndarray:
    """Spatially smoothed, temporally averaged sample covariance.

    The full M x M outer product is accumulated over usable snapshots once;
    the L x L estimate is the mean of its M-L+1 diagonal blocks, read off
    cumulative sums along the diagonals.

    Args:
        context: (..., T, M) aligned snapshots
        usable: (..., T) boolean mask of snapshots to average
        subarray_length: L

    Returns:
        (..., L, L) covariance estimate
    """
    n_elements = context.shape[-1]
    n_subarrays = n_elements - subarray_length + 1
    mask = usable.astype(np.float64)
    snapshot_count = np.maximum(mask.sum(axis=-1), 1.0)

    full = np.swapaxes(context * mask[..., None], -1, -2) @ context
    # running[i, j] = full[i, j] + running[i - 1, j - 1]
    running = full.copy()
    for row in range(1, n_elements):
        running[..., row, 1:] += running[..., row - 1, :-1]

    last = n_subarrays - 1
    covariance = running[..., last : last + subarray_length, last : last + subarray_length].copy()
    covariance[..., 1:, 1:] -= running[..., : subarray_length - 1, : subarray_length - 1]
    return covariance / (n_subarrays * snapshot_count)[..., None, None]


def _first_singular(loaded: np.ndarray) -> int | None:
    flat = loaded.reshape((-1,) + loaded.shape[-2:])
    ones = np.ones(flat.shape[-1])
    for index, matrix in enumerate(flat):
        try:
            solution = np.linalg.solve(matrix, ones)
        except np.linalg.LinAlgError:
            return index
        if not np.all(np.isfinite(solution)) or solution.sum() == 0:
            return index
    return None


def capon_weights(covariance: np.ndarray, loading_factor: float) -> np.ndarray:
    """Solve the diagonally loaded Capon system for an all-ones steering vector.

    epsilon = loading_factor * trace(R). Snapshots with no energy (zero trace)
    use the identity covariance and therefore uniform weights.

    Args:
        covariance: (..., L, L) covariance estimates
        loading_factor: delta

    Returns:
        (..., L) weights normalized so that sum(w) = 1

    Raises:
        SolverError: If a loaded system is numerically singular
    """
    length = covariance.shape[-1]
    identity = np.eye(length)
    trace = np.trace(covariance, axis1=-2, axis2=-1)
    loaded = covariance + (loading_factor * trace)[..., None, None] * identity
    loaded = np.where((trace == 0)[..., None, None], identity, loaded)

    steering = np.ones(covariance.shape[:-1] + (1,))
    try:
        solution = np.linalg.solve(loaded, steering)[..., 0]
    except np.linalg.LinAlgError as e:
        raise SolverError("loaded covariance is singular", index=_first_singular(loaded)) from e

    total = solution.sum(axis=-1, keepdims=True)
    broken = ~np.all(np.isfinite(solution), axis=-1) | ~np.isfinite(total[..., 0]) | (total[..., 0] == 0)
    if np.any(broken):
        index = int(np.flatnonzero(broken.reshape(-1))[0])
        raise SolverError("loaded covariance solve produced non-finite weights", index=index)
    return solution / total


def mv_weights(
    aligned,
    temporal_context,
    cfg: MvConfig,
    usable=None,
) -> MvWeights:
    """Minimum-variance weights for the length-L subarrays of an aperture.

    Args:
        aligned: (..., M) aligned samples at the focal time index
        temporal_context: (..., 2K+1, M) aligned snapshots around the focal
            index, or None to estimate from the focal snapshot alone
        cfg: Subarray length and loading factor
        usable: Optional (..., 2K+1) mask of snapshots inside the record

    Returns:
        MvWeights with shape (..., L)

    Raises:
        ValidationError: If L exceeds M/2 or shapes disagree
        SolverError: If a loaded covariance is singular
    """
    aligned = np.asarray(aligned, dtype=np.float64)
    n_elements = aligned.shape[-1]
    cfg.check_aperture(n_elements)

    if temporal_context is None:
        context = aligned[..., None, :]
    else:
        context = np.asarray(temporal_context, dtype=np.float64)
        if context.shape[-1] != n_elements or context.shape[:-2] != aligned.shape[:-1]:
            raise ValidationError(
                f"temporal_context: shape {context.shape} does not match aligned {aligned.shape}"
            )
    mask = np.ones(context.shape[:-1], dtype=bool) if usable is None else np.asarray(usable, dtype=bool)

    covariance = smoothed_covariance(context, mask, cfg.subarray_length)
    return MvWeights(w=capon_weights(covariance, cfg.loading_factor))


def _weight_array(weights) -> np.ndarray:
    return weights.w if isinstance(weights, MvWeights) else np.asarray(weights, dtype=np.float64)


def mv(aligned, weights, cfg: MvConfig) -> np.ndarray:
    """Subaperture-averaged minimum-variance output.

    Args:
        aligned: (..., M) aligned samples
        weights: MvWeights (or array) of shape (..., L)
        cfg: Settings the weights were estimated with

    Returns:
        (...) mean over subarrays of w^T x_sub
    """
    aligned = np.asarray(aligned, dtype=np.float64)
    n_elements = aligned.shape[-1]
    cfg.check_aperture(n_elements)
    w = _weight_array(weights)
    if w.shape[-1] != cfg.subarray_length:
        raise ValidationError(
            f"w: expected {cfg.subarray_length} weights per subarray, got {w.shape[-1]}"
        )
    windows = sliding_window_view(aligned, cfg.subarray_length, axis=-1)
    return np.einsum("...sl,...l->...", windows, w) / cfg.n_subarrays(n_elements)


def full_aperture_weights(w, n_elements: int) -> np.ndarray:
    """Spread subarray weights over the whole aperture.

    Each element's weight is the sum of the subarray weights that cover it,
    divided by the number of subarrays M-L+1. The result sums to 1 and
    ``w_full @ x`` equals the subaperture-averaged ``mv`` output, including
    the taper that elements near the aperture edges get from fewer covering
    subarrays.

    Args:
        w: (..., L) subarray weights
        n_elements: Aperture size M

    Returns:
        (..., M) element weights
    """
    w = _weight_array(w)
    length = w.shape[-1]
    n_subarrays = n_elements - length + 1
    if n_subarrays < 1:
        raise ValidationError(f"subarray_length: L={length} exceeds the aperture M={n_elements}")

    total = np.zeros(w.shape[:-1] + (n_elements,))
    for offset in range(n_subarrays):
        total[..., offset : offset + length] += w
    return total / n_subarrays


def mvb_dmas(
    aligned,
    temporal_context,
    cfg: MvConfig,
    usable=None,
    weights=None,
    sign_root: bool = True,
) -> np.ndarray:
    """Minimum-variance-based delay-multiply-and-sum.

    Evaluates sum_i xbar_i * (w^T xbar - w_i xbar_i) in closed form as
    (sum xbar)(w^T xbar) - sum w_i xbar_i^2.

    Args:
        aligned: (..., M) aligned samples, M >= 2
        temporal_context: (..., 2K+1, M) snapshots for weight estimation, or None
        cfg: MV settings
        usable: Optional snapshot mask for the context
        weights: Optional (..., M) element weights; skips estimation
        sign_root: Apply sign(x) * sqrt(|x|) before combining

    Returns:
        (...) beamformed values
    """
    samples = np.asarray(aligned, dtype=np.float64)
    n_elements = samples.shape[-1]
    _require_pairs(n_elements, "MVB-DMAS")
    transformed = sign_root_transform(samples) if sign_root else samples

    if weights is None:
        context = None if temporal_context is None else np.asarray(temporal_context, dtype=np.float64)
        if context is not None and sign_root:
            context = sign_root_transform(context)
        subarray = mv_weights(transformed, context, cfg, usable=usable)
        element_weights = full_aperture_weights(subarray.w, n_elements)
    else:
        element_weights = _weight_array(weights)
        if element_weights.shape[-1] != n_elements:
            raise ValidationError(
                f"w: expected {n_elements} element weights, got {element_weights.shape[-1]}"
            )

    weighted_sum = np.sum(element_weights * transformed, axis=-1)
    return transformed.sum(axis=-1) * weighted_sum - np.sum(element_weights * transformed**2, axis=-1)
