"""Native execution engines behind one contract.

Three engines:

* ``sim_analytic`` — statevector simulation of a variational circuit (RY
  rotations plus a linear CNOT chain, repeated ``depth`` times) read out as
  exact per-wire Pauli-Z expectation values.
* ``sim_sampled`` — same circuit, read out by drawing bitstring counts and
  converting them to expectation estimates.
* ``reference`` — a deterministic tanh-affine map with seeded weights,
  standing in for a compiled engine.

Wire/bit convention: bitstring keys are written wire-0-leftmost, and the
amplitude array index uses wire 0 as the most significant bit, so
``format(index, f"0{d}b")`` is the key for that amplitude.

All pseudo-randomness comes from numpy's Philox generator (a named,
counter-based, 64-bit algorithm) so sampled runs reproduce bit-for-bit
across platforms for a fixed key. Bitstrings are drawn by inverse CDF over
the cumulative probability array.
"""

from __future__ import annotations

import json
import math

import numpy as np

from .core import (
    Backend,
    BackendCapabilities,
    BackendConfig,
    BackendRegistry,
)
from .errors import (
    DimensionMismatch,
    InconsistentKeyLength,
    InvalidConfig,
    NonFiniteValue,
)

CONVENTIONS = ("bit", "physics")
ENDIANNESS = ("wire0-left", "wire0-right")


def encode_input(x) -> np.ndarray:
    """Map raw inputs to rotation angles, clamped to [-pi, pi]."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1 or arr.size < 1:
        raise DimensionMismatch(f"input must be 1-D and nonempty, got shape {arr.shape}")
    if np.any(np.isnan(arr)):
        raise NonFiniteValue("input contains NaN")
    return np.clip(arr, -np.pi, np.pi)


def _ry(theta: float) -> np.ndarray:
    # RY(theta) = exp(-i theta Y / 2); real matrix, RY(pi)|0> = |1>.
    half = 0.5 * theta
    c, s = math.cos(half), math.sin(half)
    return np.array([[c, -s], [s, c]], dtype=np.complex128)


def _apply_single(state: np.ndarray, gate: np.ndarray, wire: int) -> np.ndarray:
    moved = np.tensordot(gate, state, axes=([1], [wire]))
    return np.moveaxis(moved, 0, wire)


def _apply_cnot(state: np.ndarray, control: int, target: int) -> np.ndarray:
    out = state.copy()
    sel = [slice(None)] * state.ndim
    sel[control] = 1
    t = target - 1 if target > control else target
    out[tuple(sel)] = np.flip(out[tuple(sel)], axis=t)
    return out


def run_circuit(angles, depth: int = 1) -> np.ndarray:
    """Simulate the layered circuit from |0...0> and return the 2^D amplitudes.

    One repetition applies RY(angle_i) on every wire i, then the CNOT chain
    0->1, 1->2, ..., D-2 -> D-1. The same input-derived angles are reapplied
    in every repetition.
    """
    angles = np.asarray(angles, dtype=np.float64)
    if angles.ndim != 1 or angles.size < 1:
        raise DimensionMismatch(f"angles must be 1-D and nonempty, got shape {angles.shape}")
    if not np.all(np.isfinite(angles)):
        raise NonFiniteValue("angles contain NaN or infinity")
    if depth < 1:
        raise InvalidConfig(f"depth must be >= 1, got {depth}")
    d = angles.shape[0]
    state = np.zeros((2,) * d, dtype=np.complex128)
    state[(0,) * d] = 1.0
    gates = [_ry(theta) for theta in angles]
    for _ in range(depth):
        for wire, gate in enumerate(gates):
            state = _apply_single(state, gate, wire)
        for control in range(d - 1):
            state = _apply_cnot(state, control, control + 1)
    return state.reshape(-1)


def _as_amplitudes(state) -> tuple[np.ndarray, int]:
    amps = np.asarray(state, dtype=np.complex128).reshape(-1)
    d = int(round(math.log2(amps.size)))
    if 2**d != amps.size or amps.size < 2:
        raise DimensionMismatch(f"amplitude count {amps.size} is not a power of two")
    return amps, d


def expectation_z(state) -> np.ndarray:
    """Per-wire Pauli-Z expectations of a normalized state.

    S[i] = P(bit_i = 0) - P(bit_i = 1), each in [-1, 1].
    """
    amps, d = _as_amplitudes(state)
    probs = (amps.real**2 + amps.imag**2).reshape((2,) * d)
    out = np.empty(d)
    for wire in range(d):
        other = tuple(ax for ax in range(d) if ax != wire)
        marginal = probs.sum(axis=other)
        out[wire] = marginal[0] - marginal[1]
    return out


def sample_counts(state, shots: int, seed: int) -> dict[str, int]:
    """Draw ``shots`` bitstrings i.i.d. from |amplitude|^2.

    Deterministic for a fixed ``seed`` (Philox key). Keys are wire-0-left
    and returned in ascending bitstring order.
    """
    if shots < 1:
        raise InvalidConfig(f"shots must be >= 1, got {shots}")
    amps, d = _as_amplitudes(state)
    probs = amps.real**2 + amps.imag**2
    probs = probs / probs.sum()
    cdf = np.cumsum(probs)
    rng = np.random.Generator(np.random.Philox(key=int(seed)))
    draws = np.searchsorted(cdf, rng.random(shots), side="right")
    np.clip(draws, 0, amps.size - 1, out=draws)
    values, freq = np.unique(draws, return_counts=True)
    return {format(int(v), f"0{d}b"): int(c) for v, c in zip(values, freq)}


def _validated_counts(counts) -> tuple[list[str], np.ndarray, int]:
    if not counts:
        raise InvalidConfig("counts table is empty")
    keys = list(counts.keys())
    width = len(keys[0])
    for key in keys:
        if len(key) != width:
            raise InconsistentKeyLength(
                f"key {key!r} has length {len(key)}, expected {width}"
            )
        if any(ch not in "01" for ch in key):
            raise InvalidConfig(f"key {key!r} is not a bitstring")
    values = np.array([counts[k] for k in keys], dtype=np.int64)
    if np.any(values < 1):
        raise InvalidConfig("counts must be positive integers")
    return keys, values, width


def counts_to_expectations(counts, convention: str = "physics") -> np.ndarray:
    """Convert a bitstring counts table into per-wire expectation estimates.

    ``bit`` convention weighs bit 1 as +1: S[i] = (1/N) sum_b c(b)(2 b_i - 1).
    ``physics`` weighs bit 0 as +1 (the Pauli-Z expectation) and is exactly
    the negation of ``bit``. Key position i (leftmost = wire 0) corresponds
    to wire i; use :func:`counts_from_json` to import wire-0-right tables.
    """
    if convention not in CONVENTIONS:
        raise InvalidConfig(f"convention must be one of {CONVENTIONS}, got {convention!r}")
    keys, values, width = _validated_counts(counts)
    bits = np.array([[1 if ch == "1" else 0 for ch in key] for key in keys], dtype=np.int64)
    total = int(values.sum())
    # Integer accumulation is exact, so both conventions agree bitwise with
    # a direct summation of the defining formula.
    weighted = values @ (2 * bits - 1)
    bit_values = weighted / total
    return -bit_values if convention == "physics" else bit_values


def counts_to_json(counts, endianness: str = "wire0-left") -> str:
    """Serialize a counts table, tagging the key bit order."""
    if endianness not in ENDIANNESS:
        raise InvalidConfig(f"endianness must be one of {ENDIANNESS}, got {endianness!r}")
    keys, values, _ = _validated_counts(counts)
    if endianness == "wire0-right":
        keys = [key[::-1] for key in keys]
    payload = {"endianness": endianness, "counts": dict(zip(keys, (int(v) for v in values)))}
    return json.dumps(payload, sort_keys=True)


def counts_from_json(text: str) -> dict[str, int]:
    """Load a counts table, reversing keys produced wire-0-rightmost."""
    obj = json.loads(text)
    endianness = obj.get("endianness")
    if endianness not in ENDIANNESS:
        raise InvalidConfig(f"endianness must be one of {ENDIANNESS}, got {endianness!r}")
    counts = {str(k): int(v) for k, v in obj["counts"].items()}
    if endianness == "wire0-right":
        counts = {key[::-1]: value for key, value in counts.items()}
    _validated_counts(counts)
    return counts


class AnalyticBackend(Backend):
    """Exact variational-circuit engine: encode -> circuit -> Z expectations."""

    name = "sim_analytic"
    capabilities = BackendCapabilities(analytic=True, sampled=False, deterministic=True)

    def execute(self, x, *, depth: int | None = None, seed: int | None = None) -> np.ndarray:
        x = self._require_input(x)
        state = run_circuit(encode_input(x), self.config.depth if depth is None else depth)
        return expectation_z(state)


class SampledBackend(Backend):
    """Shot-based engine: encode -> circuit -> counts -> expectation estimates.

    Estimates use the physics convention so they agree with the analytic
    engine in expectation. ``seed`` overrides the config seed per call,
    letting parallel epochs draw from disjoint streams.
    """

    name = "sim_sampled"
    capabilities = BackendCapabilities(analytic=False, sampled=True, deterministic=False)

    def __init__(self, config: BackendConfig, projector=None):
        if config.shots is None:
            raise InvalidConfig("sampled engine requires shots in the config")
        super().__init__(config, projector)

    def execute(self, x, *, depth: int | None = None, seed: int | None = None) -> np.ndarray:
        x = self._require_input(x)
        state = run_circuit(encode_input(x), self.config.depth if depth is None else depth)
        counts = sample_counts(
            state, self.config.shots, self.config.seed if seed is None else seed
        )
        return counts_to_expectations(counts, convention="physics")


class ReferenceBackend(Backend):
    """Deterministic tanh-affine engine: S = tanh(W x + b).

    W entries are i.i.d. uniform[-1, 1]/sqrt(D) and b entries uniform[-1, 1],
    both drawn once at construction from Philox keyed by the config seed, so
    equal configs always produce identical maps. ``depth`` and ``seed`` are
    accepted for interface uniformity and ignored.
    """

    name = "reference"
    capabilities = BackendCapabilities(analytic=True, sampled=False, deterministic=True)

    def __init__(self, config: BackendConfig, projector=None):
        super().__init__(config, projector)
        rng = np.random.Generator(np.random.Philox(key=config.seed))
        d = config.dim
        self.weights = rng.uniform(-1.0, 1.0, size=(d, d)) / math.sqrt(d)
        self.bias = rng.uniform(-1.0, 1.0, size=d)

    def execute(self, x, *, depth: int | None = None, seed: int | None = None) -> np.ndarray:
        x = self._require_input(x)
        out = np.tanh(self.weights @ x + self.bias)
        if out.shape[0] != self.config.dim:
            raise DimensionMismatch(
                f"engine produced length {out.shape[0]}, configured dim is {self.config.dim}"
            )
        return out


def builtin_registry() -> BackendRegistry:
    """Fresh registry holding the three native engines."""
    registry = BackendRegistry()
    for cls in (AnalyticBackend, SampledBackend, ReferenceBackend):
        registry.register(cls.name, cls, cls.capabilities)
    return registry
