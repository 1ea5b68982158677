"""Deterministic future generation.

Two mechanisms: :class:`LinearProjector` fans a state out into ``K``
tanh-stabilized branches around an affine base, and :class:`Anticipator`
augments any base projector's branches with counterfactual variants built
around the branch center (optionally mirrored through it).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DimensionMismatch, InvalidConfig, NonFiniteValue

# Largest double strictly inside (-1, 1); tanh saturates to exactly +-1.0 in
# float64 for |x| >~ 19, which would break the strict open-interval bound.
_OPEN_UNIT_BOUND = np.nextafter(1.0, 0.0)


def symmetric_deltas(span: float, k: int) -> np.ndarray:
    """Evenly spaced offsets covering ``[-span, span]`` with exact symmetry.

    Computed as span*((2k - (K-1))/(K-1)), dividing the integer grid before
    scaling, so the endpoints are exactly +-span, mirror indices are exact
    float negations, and the odd-K middle offset is exactly 0.0. ``k == 1``
    degenerates to the single midpoint offset 0.
    """
    if k < 1:
        raise InvalidConfig(f"branch count must be >= 1, got {k}")
    if k == 1:
        return np.zeros(1)
    steps = 2 * np.arange(k, dtype=np.int64) - (k - 1)
    return span * (steps / (k - 1))


def _as_coeff(value, dim: int, label: str) -> np.ndarray:
    arr = np.asarray(value, dtype=np.float64)
    if arr.ndim == 0:
        arr = np.full(dim, float(arr))
    if arr.ndim != 1 or arr.shape[0] != dim:
        raise DimensionMismatch(
            f"{label} must be a scalar or length-{dim} vector, got shape {arr.shape}"
        )
    if not np.all(np.isfinite(arr)):
        raise NonFiniteValue(f"{label} contains NaN or infinity")
    return arr


def project_linear(s, k: int, w=1.0, b=0.0, span: float = 0.5) -> np.ndarray:
    """Generate ``k`` branches tanh(w*s + b + delta) over a symmetric delta grid.

    Gains/offsets broadcast from scalars or apply per dimension. Every output
    element lies strictly inside (-1, 1); float64 tanh saturation is clamped
    to the nearest representable interior value.
    """
    s = np.asarray(s, dtype=np.float64)
    if s.ndim != 1 or s.size < 1:
        raise DimensionMismatch(f"state must be 1-D and nonempty, got shape {s.shape}")
    if not np.all(np.isfinite(s)):
        raise NonFiniteValue("state contains NaN or infinity")
    if span < 0 or not np.isfinite(span):
        raise InvalidConfig(f"span must be a finite nonnegative real, got {span}")
    dim = s.shape[0]
    base = _as_coeff(w, dim, "gain w") * s + _as_coeff(b, dim, "offset b")
    deltas = symmetric_deltas(span, k)
    futures = np.tanh(base[np.newaxis, :] + deltas[:, np.newaxis])
    return np.clip(futures, -_OPEN_UNIT_BOUND, _OPEN_UNIT_BOUND)


@dataclass
class LinearProjector:
    """Affine base prediction plus evenly spaced tanh-stabilized perturbations."""

    w: float | np.ndarray = 1.0
    b: float | np.ndarray = 0.0
    span: float = 0.5

    def __post_init__(self):
        if self.span < 0 or not np.isfinite(self.span):
            raise InvalidConfig(f"span must be a finite nonnegative real, got {self.span}")

    def __call__(self, s, k: int) -> np.ndarray:
        return project_linear(s, k, w=self.w, b=self.b, span=self.span)

    def params(self) -> dict:
        """JSON-serializable parameter dict."""
        w = self.w.tolist() if isinstance(self.w, np.ndarray) else float(self.w)
        b = self.b.tolist() if isinstance(self.b, np.ndarray) else float(self.b)
        return {"type": "linear", "w": w, "b": b, "span": float(self.span)}


def parse_perturbation(spec: str) -> tuple[str, Callable[[np.ndarray], np.ndarray]]:
    """Build a named center transform from a spec string.

    Supported forms: ``"shift:<real>"`` (adds the value elementwise) and
    ``"scale:<real>"`` (multiplies elementwise). The spec string itself is
    kept as the transform name so perturbation sets can round-trip JSON.
    """
    kind, sep, raw = spec.partition(":")
    if not sep:
        raise InvalidConfig(f"perturbation spec {spec!r} must look like 'kind:value'")
    try:
        value = float(raw)
    except ValueError:
        raise InvalidConfig(f"perturbation value {raw!r} is not a real number") from None
    if kind == "shift":
        return spec, lambda c: c + value
    if kind == "scale":
        return spec, lambda c: c * value
    raise InvalidConfig(f"unknown perturbation kind {kind!r} (use shift/scale)")


@dataclass
class PerturbationSet:
    """Ordered named center transforms, optionally mirrored through the center."""

    transforms: tuple[tuple[str, Callable], ...] = ()
    symmetric: bool = False

    @classmethod
    def from_specs(cls, specs, symmetric: bool = False) -> "PerturbationSet":
        return cls(tuple(parse_perturbation(s) for s in specs), symmetric=symmetric)

    def spec_names(self) -> list[str]:
        return [name for name, _ in self.transforms]


def anticipate(f_base, perturbations: PerturbationSet) -> np.ndarray:
    """Augment a base future set with counterfactual variants.

    The center ``c`` is the mean of the base rows. For each transform ``p``
    the variant ``v = p(c)`` is appended, immediately followed by its mirror
    ``2c - v`` when symmetric mode is on. Base rows come first and the
    declaration order of transforms fixes the row order. Variants are not
    re-passed through tanh; stabilization belongs to the projector.
    """
    f_base = np.asarray(f_base, dtype=np.float64)
    if f_base.ndim != 2 or f_base.shape[0] < 1:
        raise DimensionMismatch(
            f"base future set must be 2-D and nonempty, got shape {f_base.shape}"
        )
    center = f_base.mean(axis=0)
    rows = [f_base]
    for name, transform in perturbations.transforms:
        variant = np.asarray(transform(center), dtype=np.float64)
        if variant.shape != center.shape:
            raise DimensionMismatch(
                f"perturbation {name!r} returned shape {variant.shape}, "
                f"expected {center.shape}"
            )
        if not np.all(np.isfinite(variant)):
            raise NonFiniteValue(f"perturbation {name!r} produced non-finite values")
        rows.append(variant[np.newaxis, :])
        if perturbations.symmetric:
            rows.append((2.0 * center - variant)[np.newaxis, :])
    return np.vstack(rows)


@dataclass
class Anticipator:
    """Wrap a base projector and extend its output with counterfactual rows.

    The call contract matches any projector: ``(state, k) -> future set``,
    where the returned matrix holds the base projector's ``k`` rows followed
    by the perturbation variants (so the effective branch count exceeds
    ``k`` and is reported by nodes as ``k_effective``).
    """

    base: Callable[[np.ndarray, int], np.ndarray]
    perturbations: PerturbationSet = field(default_factory=PerturbationSet)

    def __call__(self, s, k: int) -> np.ndarray:
        return anticipate(self.base(s, k), self.perturbations)

    def params(self) -> dict:
        base_params = self.base.params() if hasattr(self.base, "params") else None
        if base_params is None:
            raise InvalidConfig("anticipator base projector is not serializable")
        return {
            "type": "anticipator",
            "base": base_params,
            "perturbations": self.perturbations.spec_names(),
            "symmetric": self.perturbations.symmetric,
        }
