import numpy as np
import pytest

from src.utils.concurrency import map_ordered
from src.utils.retry import RefinementDriftError, refinement_retrying
from src.utils.seeding import derive_seed, stream_rng


def test_streams_are_reproducible_and_distinct():
    a = stream_rng(11, 1, 0).standard_normal(5)
    b = stream_rng(11, 1, 0).standard_normal(5)
    c = stream_rng(11, 1, 1).standard_normal(5)
    np.testing.assert_array_equal(a, b)
    assert not np.allclose(a, c)


def test_derived_seeds():
    assert derive_seed(3, 1) == derive_seed(3, 1)
    assert derive_seed(3, 1) != derive_seed(3, 2)
    assert 0 <= derive_seed(3, 1) < 2**64


def test_map_ordered_keeps_item_order():
    items = list(range(20))
    assert map_ordered(lambda x: x * x, items, workers=4) == [x * x for x in items]
    assert map_ordered(lambda x: x + 1, items, workers=1) == [x + 1 for x in items]


def test_refinement_retrying_reraises_after_attempts():
    calls = []
    with pytest.raises(RefinementDriftError):
        for attempt in refinement_retrying(attempts=3):
            with attempt:
                calls.append(attempt.retry_state.attempt_number)
                raise RefinementDriftError("drift")
    assert calls == [1, 2, 3]


def test_refinement_retrying_stops_on_success():
    calls = []
    for attempt in refinement_retrying(attempts=3):
        with attempt:
            calls.append(attempt.retry_state.attempt_number)
            if len(calls) < 2:
                raise RefinementDriftError("drift")
    assert calls == [1, 2]
