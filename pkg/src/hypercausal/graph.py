"""Deterministic DAG evaluation with parent-state averaging.

Nodes run in topological order with lexicographic tie-breaking, so a graph's
output depends only on its topology and node names, never on insertion
order. A node without an explicit input receives the element-wise mean of
its parents' present states; a node with an explicit input always uses it.
"""

from __future__ import annotations

import heapq
import json

import numpy as np

from .core import TriadicOutput, as_state_vector
from .errors import (
    CycleDetected,
    DuplicateName,
    InvalidConfig,
    MissingRiskFunctional,
    MissingSourceInput,
    UnknownName,
)
from .nodes import HCNode
from .projectors import Anticipator, LinearProjector, PerturbationSet


class GraphSpec:
    """Named nodes, directed edges, and optional per-node explicit inputs."""

    def __init__(self, nodes=None, edges=(), inputs=None):
        self.nodes: dict[str, HCNode] = {}
        self.edges: list[tuple[str, str]] = []
        self.inputs: dict[str, np.ndarray] = {}
        for name, node in (nodes or {}).items():
            self.add_node(name, node)
        for parent, child in edges:
            self.add_edge(parent, child)
        for name, value in (inputs or {}).items():
            self.set_input(name, value)

    def add_node(self, name: str, node: HCNode) -> "GraphSpec":
        if not name:
            raise InvalidConfig("node names must be nonempty")
        if name in self.nodes:
            raise DuplicateName(f"node {name!r} already exists")
        self.nodes[name] = node
        return self

    def add_edge(self, parent: str, child: str) -> "GraphSpec":
        for endpoint in (parent, child):
            if endpoint not in self.nodes:
                raise UnknownName(endpoint)
        self.edges.append((parent, child))
        return self

    def set_input(self, name: str, value) -> "GraphSpec":
        if name not in self.nodes:
            raise UnknownName(name)
        self.inputs[name] = as_state_vector(value)
        return self

    def parents(self) -> dict[str, list[str]]:
        """Child -> parents, in edge insertion order."""
        out: dict[str, list[str]] = {name: [] for name in self.nodes}
        for parent, child in self.edges:
            out[child].append(parent)
        return out


def topological_order(graph: GraphSpec) -> list[str]:
    """Kahn's algorithm with a name-ordered heap for deterministic ties."""
    indegree = {name: 0 for name in graph.nodes}
    children: dict[str, list[str]] = {name: [] for name in graph.nodes}
    for parent, child in graph.edges:
        indegree[child] += 1
        children[parent].append(child)
    ready = [name for name, deg in indegree.items() if deg == 0]
    heapq.heapify(ready)
    order: list[str] = []
    while ready:
        name = heapq.heappop(ready)
        order.append(name)
        for child in children[name]:
            indegree[child] -= 1
            if indegree[child] == 0:
                heapq.heappush(ready, child)
    if len(order) < len(graph.nodes):
        remaining = {name for name, deg in indegree.items() if deg > 0}
        edge = next(
            (e for e in graph.edges if e[0] in remaining and e[1] in remaining), None
        )
        raise CycleDetected(f"graph contains a cycle through edge {edge}", edge=edge)
    return order


def graph_forward(graph: GraphSpec, *, depth: int | None = None, seed: int | None = None) -> dict[str, TriadicOutput]:
    """Evaluate every node in topological order; returns name -> triadic output."""
    order = topological_order(graph)
    parents = graph.parents()
    states: dict[str, np.ndarray] = {}
    outputs: dict[str, TriadicOutput] = {}
    for name in order:
        if name in graph.inputs:
            x = graph.inputs[name]
        elif parents[name]:
            x = np.mean([states[p] for p in parents[name]], axis=0)
        else:
            raise MissingSourceInput(f"source node {name!r} has no explicit input")
        out = graph.nodes[name].forward(x, depth=depth, seed=seed)
        states[name] = out.state
        outputs[name] = out
    return outputs


# --- JSON serialization ----------------------------------------------------

def _projector_params(node: HCNode):
    projector = node.projector
    if hasattr(projector, "params"):
        return projector.params()
    raise InvalidConfig(f"projector {type(projector).__name__} is not serializable")


def _projector_from_params(params):
    if params is None:
        return None
    kind = params.get("type")
    if kind == "linear":
        return LinearProjector(
            w=np.asarray(params["w"]) if isinstance(params["w"], list) else params["w"],
            b=np.asarray(params["b"]) if isinstance(params["b"], list) else params["b"],
            span=params["span"],
        )
    if kind == "anticipator":
        return Anticipator(
            base=_projector_from_params(params["base"]),
            perturbations=PerturbationSet.from_specs(
                params["perturbations"], symmetric=params["symmetric"]
            ),
        )
    raise InvalidConfig(f"unknown projector type {kind!r}")


def graph_to_json(graph: GraphSpec) -> str:
    """Serialize nodes (engine name + config, policy, projector params), edges, inputs.

    Risk functionals are user callables and do not serialize; loading a
    ``min_risk`` node requires passing ``risk_functions`` to
    :func:`graph_from_json`.
    """
    nodes = {}
    for name, node in graph.nodes.items():
        cfg = node.backend.config
        nodes[name] = {
            "backend": {
                "name": node.backend.name,
                "dim": cfg.dim,
                "branches": cfg.branches,
                "shots": cfg.shots,
                "depth": cfg.depth,
                "seed": cfg.seed,
            },
            "policy": node.policy,
            "projector": _projector_params(node),
        }
    payload = {
        "nodes": nodes,
        "edges": [list(edge) for edge in graph.edges],
        "inputs": {name: value.tolist() for name, value in graph.inputs.items()},
    }
    return json.dumps(payload, sort_keys=True)


def graph_from_json(text: str, registry, risk_functions=None) -> GraphSpec:
    """Rebuild a :class:`GraphSpec` from :func:`graph_to_json` output.

    ``registry`` resolves engine names; ``risk_functions`` maps node names to
    risk callables for ``min_risk`` policies.
    """
    from .core import BackendConfig

    payload = json.loads(text)
    graph = GraphSpec()
    risk_functions = risk_functions or {}
    for name, spec in payload["nodes"].items():
        b = spec["backend"]
        config = BackendConfig(
            dim=b["dim"], branches=b["branches"], shots=b["shots"],
            depth=b["depth"], seed=b["seed"],
        )
        backend = registry.create(b["name"], config)
        policy = spec["policy"]
        risk = risk_functions.get(name)
        if policy == "min_risk" and risk is None:
            raise MissingRiskFunctional(
                f"node {name!r} uses min_risk; pass its risk via risk_functions"
            )
        graph.add_node(
            name,
            HCNode(
                backend,
                projector=_projector_from_params(spec["projector"]),
                policy=policy,
                risk=risk,
            ),
        )
    for parent, child in payload["edges"]:
        graph.add_edge(parent, child)
    for name, value in payload["inputs"].items():
        graph.set_input(name, value)
    return graph
