"""Parameter-update strategies behind a string-keyed factory registry.

Every optimizer pairs with an immutable :class:`OptState`; stepping returns
a fresh state, so updates are pure functions of (state, parameters,
gradient-or-objective) and runs replay bit-for-bit. Stochastic methods key
per-step Philox streams by (seed, step counter) instead of holding a
generator, so no hidden global PRNG exists.

Built-ins: ``sgd``, ``adam_like``, ``finite_diff``, ``spsa``,
``trust_region_scalar``. External methods register through
:class:`OptimizerRegistry` with the same uniqueness/ordering semantics as
the backend registry. None of the hyperparameter defaults below are claimed
values from anywhere; they are documented implementation choices (see the
README config reference).
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .core import NameRegistry
from .errors import (
    DimensionMismatch,
    InvalidConfig,
    MissingHyperparam,
    NonFiniteObjective,
)


@dataclass(frozen=True)
class OptState:
    """Method-specific accumulators advanced by each step.

    ``m``/``v`` are the adam_like moment averages, ``radius`` the trust
    radius, ``incumbent`` the trust-region's remembered objective value at
    the current parameters, ``seed`` the PRNG key of stochastic methods.
    Unused fields stay at their defaults.
    """

    step: int = 0
    m: np.ndarray | None = None
    v: np.ndarray | None = None
    radius: float = 0.0
    incumbent: float | None = None
    seed: int = 0


def _step_rng(seed: int, step: int) -> np.random.Generator:
    """Philox stream keyed by (seed, step); pure given its arguments."""
    seq = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(step),))
    return np.random.Generator(np.random.Philox(seq))


def _as_params(theta) -> np.ndarray:
    arr = np.asarray(theta, dtype=np.float64)
    if arr.ndim != 1 or arr.size < 1:
        raise DimensionMismatch(f"parameters must be 1-D and nonempty, got shape {arr.shape}")
    return arr


def _finite_objective_value(value) -> float:
    value = float(value)
    if not np.isfinite(value):
        raise NonFiniteObjective(f"objective returned {value}")
    return value


class SGD:
    """Plain gradient descent: theta' = theta - lr * g."""

    def __init__(self, lr: float):
        self.lr = float(lr)

    def init_state(self) -> OptState:
        return OptState()

    def step(self, state: OptState, theta, gradient) -> tuple[np.ndarray, OptState]:
        theta = _as_params(theta)
        gradient = np.asarray(gradient, dtype=np.float64)
        if gradient.shape != theta.shape:
            raise DimensionMismatch(
                f"gradient shape {gradient.shape} != parameter shape {theta.shape}"
            )
        return theta - self.lr * gradient, dataclasses.replace(state, step=state.step + 1)


class AdamLike:
    """Bias-corrected exponential moment averaging (Adam-style update)."""

    def __init__(self, lr: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr = float(lr)
        self.beta1 = float(beta1)
        self.beta2 = float(beta2)
        self.eps = float(eps)

    def init_state(self) -> OptState:
        return OptState()

    def step(self, state: OptState, theta, gradient) -> tuple[np.ndarray, OptState]:
        theta = _as_params(theta)
        gradient = np.asarray(gradient, dtype=np.float64)
        if gradient.shape != theta.shape:
            raise DimensionMismatch(
                f"gradient shape {gradient.shape} != parameter shape {theta.shape}"
            )
        m = np.zeros_like(theta) if state.m is None else state.m
        v = np.zeros_like(theta) if state.v is None else state.v
        k = state.step + 1
        m = self.beta1 * m + (1.0 - self.beta1) * gradient
        v = self.beta2 * v + (1.0 - self.beta2) * gradient**2
        m_hat = m / (1.0 - self.beta1**k)
        v_hat = v / (1.0 - self.beta2**k)
        updated = theta - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)
        return updated, dataclasses.replace(state, step=k, m=m, v=v)


def finite_difference_gradient(objective, theta, h: float = 1e-4) -> np.ndarray:
    """Central-difference gradient estimate, 2P objective evaluations."""
    theta = _as_params(theta)
    grad = np.empty_like(theta)
    for i in range(theta.size):
        bump = np.zeros_like(theta)
        bump[i] = h
        upper = _finite_objective_value(objective(theta + bump))
        lower = _finite_objective_value(objective(theta - bump))
        grad[i] = (upper - lower) / (2.0 * h)
    return grad


class FiniteDifference:
    """Central differences per coordinate followed by an SGD step."""

    def __init__(self, lr: float, h: float = 1e-4):
        self.lr = float(lr)
        self.h = float(h)

    def init_state(self) -> OptState:
        return OptState()

    def step(self, state: OptState, theta, objective) -> tuple[np.ndarray, OptState, int]:
        theta = _as_params(theta)
        grad = finite_difference_gradient(objective, theta, self.h)
        updated = theta - self.lr * grad
        return updated, dataclasses.replace(state, step=state.step + 1), 2 * theta.size


class SPSA:
    """Simultaneous-perturbation gradient estimation, two evaluations per step.

    Gains follow the classic decaying schedule a_k = a/(k+1+A)^0.602 and
    c_k = c/(k+1)^0.101 with a Rademacher perturbation direction drawn from
    the (seed, step)-keyed stream.
    """

    def __init__(self, a: float = 0.1, c: float = 0.1, big_a: float = 10.0,
                 alpha: float = 0.602, gamma: float = 0.101, seed: int = 0):
        self.a = float(a)
        self.c = float(c)
        self.big_a = float(big_a)
        self.alpha = float(alpha)
        self.gamma = float(gamma)
        self.seed = int(seed)

    def init_state(self) -> OptState:
        return OptState(seed=self.seed)

    def step(self, state: OptState, theta, objective) -> tuple[np.ndarray, OptState, int]:
        theta = _as_params(theta)
        k = state.step
        a_k = self.a / (k + 1 + self.big_a) ** self.alpha
        c_k = self.c / (k + 1) ** self.gamma
        rng = _step_rng(state.seed, k)
        delta = rng.integers(0, 2, size=theta.size) * 2 - 1
        upper = _finite_objective_value(objective(theta + c_k * delta))
        lower = _finite_objective_value(objective(theta - c_k * delta))
        # 1/delta_i == delta_i for Rademacher entries.
        grad = (upper - lower) / (2.0 * c_k) * delta
        return theta - a_k * grad, dataclasses.replace(state, step=k + 1), 2


class ScalarTrustRegion:
    """Stochastic scalar descent with an adaptive proposal radius.

    Proposes alpha + u with u uniform on [-radius, radius]; accepts only a
    strict objective decrease. Accepts grow the radius by ``grow`` (capped
    at r_max), rejects shrink it by ``shrink`` (floored at r_min), so
    accepted iterates form a nonincreasing objective sequence.

    The incumbent's objective value is evaluated once (on the first step or
    on acceptance) and carried in the state, so each step costs a single
    objective evaluation. On a static objective this is indistinguishable
    from re-evaluating; on a noisy or drifting objective it makes accepted
    values behave like running records, which is what lets the method
    settle instead of random-walking on evaluation noise.
    """

    def __init__(self, r0: float = 0.05, r_min: float = 1e-4, r_max: float = 0.2,
                 grow: float = 1.2, shrink: float = 0.9, seed: int = 0):
        if not (0 < r_min <= r0 <= r_max):
            raise InvalidConfig("require 0 < r_min <= r0 <= r_max")
        self.r0 = float(r0)
        self.r_min = float(r_min)
        self.r_max = float(r_max)
        self.grow = float(grow)
        self.shrink = float(shrink)
        self.seed = int(seed)

    def init_state(self) -> OptState:
        return OptState(radius=self.r0, seed=self.seed)

    def step(self, state: OptState, alpha: float, objective) -> tuple[float, OptState]:
        rng = _step_rng(state.seed, state.step)
        proposal = alpha + rng.uniform(-state.radius, state.radius)
        current = state.incumbent
        if current is None:
            current = _finite_objective_value(objective(alpha))
        candidate = _finite_objective_value(objective(proposal))
        if candidate < current:
            alpha = proposal
            radius = min(state.radius * self.grow, self.r_max)
            current = candidate
        else:
            radius = max(state.radius * self.shrink, self.r_min)
        return alpha, dataclasses.replace(
            state, step=state.step + 1, radius=radius, incumbent=current
        )


# --- registry ----------------------------------------------------------------

def _require(hyperparams: dict, key: str):
    if key not in hyperparams:
        raise MissingHyperparam(f"hyperparameter {key!r} is required")
    return hyperparams[key]


def _check_known(hyperparams: dict, known: set[str]) -> None:
    extra = set(hyperparams) - known
    if extra:
        raise InvalidConfig(f"unknown hyperparameters: {sorted(extra)}")


def _sgd_factory(hp):
    _check_known(hp, {"lr"})
    return SGD(lr=_require(hp, "lr"))


def _adam_factory(hp):
    _check_known(hp, {"lr", "beta1", "beta2", "eps"})
    return AdamLike(lr=_require(hp, "lr"), beta1=hp.get("beta1", 0.9),
                    beta2=hp.get("beta2", 0.999), eps=hp.get("eps", 1e-8))


def _finite_diff_factory(hp):
    _check_known(hp, {"lr", "h"})
    return FiniteDifference(lr=_require(hp, "lr"), h=hp.get("h", 1e-4))


def _spsa_factory(hp):
    _check_known(hp, {"a", "c", "big_a", "alpha", "gamma", "seed"})
    return SPSA(a=hp.get("a", 0.1), c=hp.get("c", 0.1), big_a=hp.get("big_a", 10.0),
                alpha=hp.get("alpha", 0.602), gamma=hp.get("gamma", 0.101),
                seed=hp.get("seed", 0))


def _trust_region_factory(hp):
    _check_known(hp, {"r0", "r_min", "r_max", "grow", "shrink", "seed"})
    return ScalarTrustRegion(r0=hp.get("r0", 0.05), r_min=hp.get("r_min", 1e-4),
                             r_max=hp.get("r_max", 0.2), grow=hp.get("grow", 1.2),
                             shrink=hp.get("shrink", 0.9), seed=hp.get("seed", 0))


_BUILTIN_FACTORIES = (
    ("sgd", _sgd_factory),
    ("adam_like", _adam_factory),
    ("finite_diff", _finite_diff_factory),
    ("spsa", _spsa_factory),
    ("trust_region_scalar", _trust_region_factory),
)


class OptimizerRegistry(NameRegistry):
    """String key -> optimizer factory; mirrors the backend registry semantics."""

    def register(self, name: str, factory) -> None:
        self._add(name, factory)

    def create(self, name: str, hyperparams: dict | None = None):
        """Instantiate an optimizer and its initial state."""
        factory = self.lookup(name)
        optimizer = factory(dict(hyperparams or {}))
        return optimizer, optimizer.init_state()


def builtin_optimizers() -> OptimizerRegistry:
    """Fresh registry pre-loaded with the built-in methods, in a fixed order."""
    registry = OptimizerRegistry()
    for name, factory in _BUILTIN_FACTORIES:
        registry.register(name, factory)
    return registry
