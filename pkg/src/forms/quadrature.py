"""
Quadrature of top-degree forms over models
"""

import logging
from dataclasses import dataclass, asdict
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

try:
    from ..workers import parallel_map
except ImportError:
    from workers import parallel_map

from .core import FormField

logger = logging.getLogger(__name__)

Density = Callable[[np.ndarray, np.ndarray], np.ndarray]

# relative floor on every error estimate: sums of O(1e6) terms are not exact
ROUNDING_FLOOR = 1e-12


@dataclass
class QuadratureNodes:
    """One block of nodes: points, oriented tangent frames and parameter weights"""
    points: np.ndarray
    frames: np.ndarray
    weights: np.ndarray
    strata: Optional[np.ndarray] = None


NodeBlock = Callable[[], QuadratureNodes]


@dataclass
class IntegralEstimate:
    """Integral value with its error estimate"""
    value: float
    error: float
    scheme: str
    resolution: int
    samples: int

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary"""
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "IntegralEstimate":
        """Create from dictionary"""
        return cls(
            value=float(data["value"]),
            error=float(data["error"]),
            scheme=data["scheme"],
            resolution=int(data["resolution"]),
            samples=int(data["samples"]),
        )


@dataclass
class _BlockSum:
    total: float
    magnitude: float
    count: int
    strata: np.ndarray
    stratum_sums: np.ndarray
    stratum_variance: np.ndarray


def stratified_unit_cube(samples: int, seed: int,
                         per_axis: Optional[int] = None) -> List[Tuple[np.ndarray, np.ndarray, np.ndarray]]:
    """
    Stratified uniform samples of [0, 1)^3.

    Each stratum draws from its own spawned seed sequence, so the samples do
    not depend on how strata are grouped into blocks. Blocks are slabs of
    strata sharing the first axis index.

    Returns:
        List of (stratum ids, samples (n, 3), weights summing to 1 overall)
    """
    if per_axis is None:
        per_axis = int(max(1, min(8, np.floor((samples / 2.0) ** (1.0 / 3.0)))))
    n_strata = per_axis ** 3
    if samples < 2 * n_strata:
        raise ValueError(f"need at least {2 * n_strata} samples for {n_strata} strata")
    counts = np.full(n_strata, samples // n_strata)
    counts[: samples % n_strata] += 1
    children = np.random.SeedSequence(seed).spawn(n_strata)

    blocks = []
    for slab in range(per_axis):
        ids, chunks, weights = [], [], []
        for rest in range(per_axis * per_axis):
            stratum = slab * per_axis * per_axis + rest
            cell = np.array([slab, rest // per_axis, rest % per_axis], dtype=float)
            rng = np.random.default_rng(children[stratum])
            n = counts[stratum]
            chunks.append((cell + rng.random((n, 3))) / per_axis)
            ids.append(np.full(n, stratum))
            weights.append(np.full(n, 1.0 / (n_strata * n)))
        blocks.append((np.concatenate(ids), np.concatenate(chunks), np.concatenate(weights)))
    return blocks


def _sum_block(build: NodeBlock, density: Density) -> _BlockSum:
    nodes = build()
    values = nodes.weights * np.asarray(density(nodes.points, nodes.frames), dtype=float)
    if nodes.strata is None:
        empty = np.zeros(0)
        return _BlockSum(float(np.sum(values)), float(np.sum(np.abs(values))), len(values),
                         np.zeros(0, dtype=int), empty, empty)

    ids, inverse = np.unique(nodes.strata, return_inverse=True)
    counts = np.bincount(inverse)
    sums = np.bincount(inverse, weights=values)
    means = sums / counts
    squares = np.bincount(inverse, weights=(values - means[inverse]) ** 2)
    # Var(stratum sum) = n * sample variance of the weighted values
    variance = np.where(counts > 1, counts * squares / np.maximum(counts - 1, 1), 0.0)
    return _BlockSum(float(np.sum(values)), float(np.sum(np.abs(values))), len(values),
                     ids, sums, variance)


def _reduce(blocks: List[NodeBlock], density: Density) -> Tuple[float, float, int, float]:
    parts = parallel_map(lambda build: _sum_block(build, density), blocks)
    total = 0.0
    magnitude = 0.0
    variance = 0.0
    count = 0
    for part in parts:  # fixed index order
        total += part.total
        magnitude += part.magnitude
        variance += float(np.sum(part.stratum_variance))
        count += part.count
    return total, magnitude, count, variance


def integrate_density(model, density: Density, scheme: Optional[str] = None,
                      resolution: Optional[int] = None, seed: int = 0) -> IntegralEstimate:
    """
    Integrate a density given on oriented frames over the model.

    Args:
        model: HamiltonianStructureModel
        density: Function (points, frames) -> values; a top form evaluated on frames
        scheme: "grid" or "monte_carlo" (model default when None)
        resolution: Nodes per axis (grid) or sample count (monte_carlo)
        seed: Seed for monte_carlo

    Returns:
        IntegralEstimate signed against the model orientation
    """
    scheme = scheme or model.default_scheme
    if scheme not in model.supported_schemes:
        raise ValueError(
            f"scheme '{scheme}' is not supported by model {model.name}; "
            f"supported: {', '.join(model.supported_schemes)}"
        )
    resolution = int(resolution or model.default_resolution(scheme))

    total, magnitude, count, variance = _reduce(
        model.quadrature_blocks(scheme, resolution, seed), density
    )
    if scheme == "grid":
        coarse, _, _, _ = _reduce(
            model.quadrature_blocks(scheme, max(2, resolution // 2), seed), density
        )
        error = abs(total - coarse)
    else:
        error = float(np.sqrt(variance))
    error = max(error, ROUNDING_FLOOR * magnitude)

    logger.debug(f"{model.name}: {scheme}({resolution}) -> {total:.12g} +/- {error:.3g}")
    return IntegralEstimate(value=total, error=error, scheme=scheme,
                            resolution=resolution, samples=count)


def integrate_top_form(model, field: FormField, scheme: Optional[str] = None,
                       resolution: Optional[int] = None, seed: int = 0) -> IntegralEstimate:
    """∫_M field against the model orientation, with grid or Monte Carlo error estimate"""
    if field.degree != model.intrinsic_dim:
        raise ValueError(
            f"integrand must have degree {model.intrinsic_dim}, got {field.degree}"
        )
    return integrate_density(model, field.eval, scheme=scheme, resolution=resolution, seed=seed)


def gather_nodes(model, scheme: str, resolution: int, seed: int = 0) -> QuadratureNodes:
    """All nodes of a scheme in one block (used for observable ranges)"""
    parts = [build() for build in model.quadrature_blocks(scheme, resolution, seed)]
    return QuadratureNodes(
        points=np.concatenate([p.points for p in parts]),
        frames=np.concatenate([p.frames for p in parts]),
        weights=np.concatenate([p.weights for p in parts]),
    )
