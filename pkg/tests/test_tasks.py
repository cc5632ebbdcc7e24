"""
Worker pool ordering and error propagation.
"""
import pytest

from epr_steering.api.tasks import run_pool, worker_count


def _square(x):
    return x * x


def _fail_on_three(x):
    if x == 3:
        raise ValueError("three")
    return x


def test_worker_count():
    assert worker_count(3) == 3
    assert worker_count(0) >= 1


@pytest.mark.parametrize("threads", [1, 2])
def test_order_is_preserved(threads):
    assert run_pool(_square, range(8), threads) == [x * x for x in range(8)]


def test_empty():
    assert run_pool(_square, [], 4) == []


def test_first_error_propagates():
    with pytest.raises(ValueError):
        run_pool(_fail_on_three, range(6), 2)
