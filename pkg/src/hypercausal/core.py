"""Typed containers, execution contracts, and the backend registry.

The computational unit of the package is the triadic step: an input vector
``x_t`` produces a present state ``S_t`` (length ``D``), a set of ``K``
candidate future states ``F_t`` (a ``K x D`` matrix), and a representative
next state obtained by aggregating the candidates. Everything above this
module (nodes, graphs, losses, the experiment loop) is built on that
contract; everything below it (the engines) implements ``x -> S``.

States and futures are plain float64 numpy arrays; :func:`as_state_vector`
and :func:`as_future_set` are the validation choke points that enforce the
shape/finiteness invariants.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionMismatch,
    DuplicateName,
    InvalidConfig,
    NonFiniteValue,
    UnknownName,
)


def as_state_vector(values, dim: int | None = None) -> np.ndarray:
    """Coerce ``values`` to a finite 1-D float64 array, optionally checking length."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1 or arr.size < 1:
        raise DimensionMismatch(
            f"state vector must be 1-D and nonempty, got shape {arr.shape}"
        )
    if not np.all(np.isfinite(arr)):
        raise NonFiniteValue("state vector contains NaN or infinity")
    if dim is not None and arr.shape[0] != dim:
        raise DimensionMismatch(f"state vector has length {arr.shape[0]}, expected {dim}")
    return arr


def as_future_set(branches, dim: int | None = None, min_branches: int = 1) -> np.ndarray:
    """Coerce ``branches`` to a finite 2-D float64 array of candidate futures."""
    arr = np.asarray(branches, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < min_branches or arr.shape[1] < 1:
        raise DimensionMismatch(
            f"future set must be 2-D with at least {min_branches} row(s), "
            f"got shape {arr.shape}"
        )
    if not np.all(np.isfinite(arr)):
        raise NonFiniteValue("future set contains NaN or infinity")
    if dim is not None and arr.shape[1] != dim:
        raise DimensionMismatch(f"future rows have length {arr.shape[1]}, expected {dim}")
    return arr


@dataclass(frozen=True)
class BackendConfig:
    """Static execution configuration shared by every engine.

    ``shots is None`` selects analytic (exact) evaluation; a positive value
    selects shot-based estimation. ``depth`` counts circuit repetitions and
    ``seed`` keys every pseudo-random stream derived from this config.
    """

    dim: int
    branches: int = 2
    shots: int | None = None
    depth: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.dim < 1:
            raise InvalidConfig(f"dim must be >= 1, got {self.dim}")
        if self.branches < 2:
            raise InvalidConfig(f"branches must be >= 2, got {self.branches}")
        if self.depth < 1:
            raise InvalidConfig(f"depth must be >= 1, got {self.depth}")
        if self.shots is not None and self.shots < 1:
            raise InvalidConfig(f"shots must be >= 1 when present, got {self.shots}")
        if not 0 <= self.seed < 2**64:
            raise InvalidConfig("seed must be an unsigned 64-bit integer")


@dataclass(frozen=True)
class BackendCapabilities:
    """Static capability flags advertised alongside a registered engine.

    ``deterministic`` means the output is a pure function of the input alone
    (no shot noise); sampled engines are reproducible given a seed but not
    deterministic in this sense.
    """

    analytic: bool
    sampled: bool
    deterministic: bool

    def __post_init__(self):
        if not (self.analytic or self.sampled):
            raise InvalidConfig("at least one of analytic/sampled must be true")


@dataclass
class TriadicOutput:
    """Result bundle of one triadic step.

    ``diagnostics`` carries scalar observables (branch dispersion, effective
    branch count, wall time, squared deviation from the optional previous
    state) plus the aggregation policy name.
    """

    state: np.ndarray
    futures: np.ndarray
    representative: np.ndarray
    diagnostics: dict[str, float | str] = field(default_factory=dict)


class Backend(ABC):
    """Execution engine contract: ``execute`` maps an input to a state.

    Engines are immutable after construction and execution is pure given
    (input, seed), so instances may be shared across threads. Future
    generation is delegated to a pluggable projector so nodes and engines
    expose the same mechanism through :meth:`project`.
    """

    #: registry identifier; subclasses override.
    name = "backend"

    def __init__(self, config: BackendConfig, projector=None):
        if projector is None:
            from .projectors import LinearProjector

            projector = LinearProjector()
        self.config = config
        self.projector = projector

    @property
    def dim(self) -> int:
        return self.config.dim

    @abstractmethod
    def execute(self, x, *, depth: int | None = None, seed: int | None = None) -> np.ndarray:
        """Map an input vector to a length-``dim`` state vector.

        ``depth`` and ``seed`` override the config values for this call only;
        engines without a circuit or a stochastic stage ignore them.
        """

    def project(self, state, k: int | None = None) -> np.ndarray:
        """Generate candidate futures for ``state`` (defaults to config.branches rows)."""
        k = self.config.branches if k is None else k
        return self.projector(as_state_vector(state, self.config.dim), k)

    def _require_input(self, x) -> np.ndarray:
        return as_state_vector(x, dim=self.config.dim)


@dataclass(frozen=True)
class RegistryEntry:
    """A named engine constructor plus its static capabilities."""

    name: str
    factory: object
    capabilities: BackendCapabilities


class NameRegistry:
    """Insertion-ordered name -> entry mapping with uniqueness enforcement.

    Registration happens during single-threaded setup; afterwards lookups
    are read-only and therefore safe to share.
    """

    def __init__(self):
        self._entries: dict[str, object] = {}

    def _add(self, name: str, entry) -> None:
        if not name:
            raise InvalidConfig("registry names must be nonempty")
        if name in self._entries:
            raise DuplicateName(f"name {name!r} is already registered")
        self._entries[name] = entry

    def lookup(self, name: str):
        try:
            return self._entries[name]
        except KeyError:
            raise UnknownName(name) from None

    def names(self) -> list[str]:
        return list(self._entries)

    def __contains__(self, name: str) -> bool:
        return name in self._entries

    def __len__(self) -> int:
        return len(self._entries)


class BackendRegistry(NameRegistry):
    """Maps engine names to constructors and capability metadata."""

    def register(self, name: str, factory, capabilities: BackendCapabilities) -> RegistryEntry:
        entry = RegistryEntry(name=name, factory=factory, capabilities=capabilities)
        self._add(name, entry)
        return entry

    def create(self, name: str, config: BackendConfig) -> Backend:
        """Instantiate the engine registered under ``name`` with ``config``."""
        entry = self.lookup(name)
        if not isinstance(config, BackendConfig):
            config = BackendConfig(**dict(config))
        return entry.factory(config)

    def capabilities(self, name: str) -> BackendCapabilities:
        return self.lookup(name).capabilities


def triadic_step(node, x, s_prev=None, *, depth: int | None = None, seed: int | None = None) -> TriadicOutput:
    """Run one triadic step on ``node``: input -> (state, futures, representative).

    ``s_prev`` never alters the produced state; it is recorded into the
    diagnostics (as a squared deviation) for consistency-loss computation.
    """
    return node.forward(x, s_prev, depth=depth, seed=seed)
