"""Property tests for the structural invariants."""

import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from hypercausal import (
    DepthSchedule,
    TelemetryLogger,
    apply_readout_bias,
    counts_to_expectations,
    depth_at,
    flush_jsonl,
    load_jsonl,
    loss_coherence,
    policy_aggregate,
    project_linear,
)

finite = st.floats(min_value=-50, max_value=50, allow_nan=False, allow_infinity=False)


def future_sets(max_k=8, max_d=5):
    return st.integers(2, max_k).flatmap(
        lambda k: st.integers(1, max_d).flatmap(
            lambda d: arrays(np.float64, (k, d), elements=finite)
        )
    )


@given(future_sets(), st.sampled_from(["mean", "median"]))
@settings(max_examples=60)
def test_policies_permutation_invariant(futures, policy):
    rng = np.random.default_rng(0)
    perm = rng.permutation(futures.shape[0])
    a = policy_aggregate(futures, policy)
    b = policy_aggregate(futures[perm], policy)
    assert np.allclose(a, b, atol=1e-12)


@given(future_sets(), finite)
@settings(max_examples=60)
def test_mean_policy_commutes_with_translation(futures, shift):
    translated = policy_aggregate(futures + shift, "mean")
    assert np.allclose(translated, policy_aggregate(futures, "mean") + shift, atol=1e-9)


@given(future_sets(), st.sampled_from(["var", "mad"]), finite)
@settings(max_examples=60)
def test_coherence_translation_invariant(futures, mode, shift):
    shifted = loss_coherence(futures + shift, mode)
    assert shifted == pytest.approx(loss_coherence(futures, mode), abs=1e-10)


@given(
    arrays(np.float64, st.integers(1, 6), elements=st.floats(-4, 4)),
    st.integers(1, 12),
    st.floats(0, 3),
)
@settings(max_examples=80)
def test_projector_bounds_and_monotonicity(state, k, span):
    futures = project_linear(state, k, span=span)
    assert futures.shape == (k, state.size)
    assert np.all(np.abs(futures) < 1.0)
    assert np.all(np.diff(futures, axis=0) >= 0.0)


@given(st.integers(1, 12), st.integers(1, 12), st.integers(1, 400), st.integers(-50, 500))
@settings(max_examples=100)
def test_depth_at_bounds_and_endpoints(start, end, horizon, epoch):
    schedule = DepthSchedule(start, end, horizon)
    value = depth_at(schedule, epoch)
    assert min(start, end) <= value <= max(start, end)
    assert depth_at(schedule, 0) == start
    assert depth_at(schedule, horizon) == end
    assert depth_at(schedule, horizon + 10) == end


@given(
    st.dictionaries(
        st.integers(0, 15).map(lambda v: format(v, "04b")),
        st.integers(1, 10**6),
        min_size=1,
        max_size=16,
    )
)
@settings(max_examples=80)
def test_counts_convention_duality(counts):
    bit = counts_to_expectations(counts, "bit")
    physics = counts_to_expectations(counts, "physics")
    assert np.array_equal(bit, -physics)
    assert np.all(np.abs(bit) <= 1.0)


@given(
    arrays(np.float64, st.integers(1, 6), elements=st.floats(-3, 3)),
    st.floats(0, 1),
)
@settings(max_examples=80)
def test_readout_bias_contracts_toward_signs(state, b):
    out = apply_readout_bias(state, b)
    assert np.all(np.sign(out) == np.sign(state))
    assert np.all(np.abs(out) <= np.maximum(np.abs(state), 1.0) + 1e-12)


@given(
    st.lists(
        st.tuples(
            st.text(min_size=1, max_size=12),
            st.floats(allow_nan=False, allow_infinity=False),
            st.text(max_size=8),
        ),
        max_size=25,
    )
)
@settings(max_examples=60)
def test_jsonl_round_trip_identity(entries):
    logger = TelemetryLogger()
    for sigma, value, label in entries:
        logger.log(sigma, {"value": value, "label": label})
    sink = io.StringIO()
    flush_jsonl(logger, sink)
    assert load_jsonl(io.StringIO(sink.getvalue())) == logger.records
