"""Nodes wrapping engines, and the policies that pick a representative future."""

from __future__ import annotations

import time

import numpy as np

from .core import TriadicOutput, as_future_set, as_state_vector
from .errors import InvalidConfig, MissingRiskFunctional

POLICIES = ("mean", "median", "min_risk")


def policy_aggregate(futures, policy: str = "mean", risk=None) -> np.ndarray:
    """Reduce a K x D future set to one representative row.

    ``mean``/``median`` act column-wise (the median of an even branch count
    is the midpoint of the two central order statistics). ``min_risk``
    returns the row minimizing the user risk functional, lowest row index
    winning ties.
    """
    futures = as_future_set(futures)
    if policy == "mean":
        return futures.mean(axis=0)
    if policy == "median":
        return np.median(futures, axis=0)
    if policy == "min_risk":
        if risk is None:
            raise MissingRiskFunctional("min_risk policy requires a risk functional")
        risks = np.array([float(risk(row)) for row in futures])
        return futures[int(np.argmin(risks))].copy()
    raise InvalidConfig(f"unknown policy {policy!r} (use one of {POLICIES})")


class HCNode:
    """One propagation unit: engine execution, future fan-out, aggregation.

    The projector defaults to the engine's own; the policy defaults to the
    element-wise mean. ``min_risk`` must come with a risk functional.
    """

    def __init__(self, backend, projector=None, policy: str = "mean", risk=None):
        if policy not in POLICIES:
            raise InvalidConfig(f"unknown policy {policy!r} (use one of {POLICIES})")
        if policy == "min_risk" and risk is None:
            raise MissingRiskFunctional("min_risk policy requires a risk functional")
        self.backend = backend
        self.projector = backend.projector if projector is None else projector
        self.policy = policy
        self.risk = risk

    @property
    def dim(self) -> int:
        return self.backend.dim

    def forward(self, x, s_prev=None, *, depth: int | None = None, seed: int | None = None) -> TriadicOutput:
        """One triadic step. ``s_prev`` only feeds diagnostics, never the state."""
        start = time.perf_counter()
        state = self.backend.execute(x, depth=depth, seed=seed)
        futures = as_future_set(
            self.projector(state, self.backend.config.branches),
            dim=state.shape[0],
            min_branches=2,
        )
        representative = policy_aggregate(futures, self.policy, self.risk)
        diagnostics: dict[str, float | str] = {
            "branch_std": float(futures.std(axis=0).mean()),
            "k_effective": float(futures.shape[0]),
            "policy": self.policy,
            "wall_time_s": time.perf_counter() - start,
        }
        if s_prev is not None:
            s_prev = as_state_vector(s_prev, dim=state.shape[0])
            diagnostics["prev_deviation_sq"] = float(np.sum((state - s_prev) ** 2))
        return TriadicOutput(state, futures, representative, diagnostics)


def chain_forward(nodes, x) -> TriadicOutput:
    """Feed ``x`` through nodes sequentially; each state becomes the next input.

    The returned futures and representative come from the final node.
    """
    nodes = list(nodes)
    if not nodes:
        raise InvalidConfig("chain must contain at least one node")
    current = x
    output = None
    for node in nodes:
        output = node.forward(current)
        current = output.state
    return output
