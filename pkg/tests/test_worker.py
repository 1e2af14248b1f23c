import pytest

from tailkde.core.errors import DataError
from tailkde.worker.tasks import failure_rate, run_replicate, run_replicates


def draw(rng, scale):
    return scale * float(rng.generator().uniform())


def fail_on_odd(rng):
    if rng.stream_id % 2:
        raise DataError("odd replicate")
    return rng.stream_id


def test_outcomes_are_ordered_and_reproducible():
    serial = run_replicates(draw, 4, 11, 2.0, n_jobs=1)
    parallel = run_replicates(draw, 4, 11, 2.0, n_jobs=2)
    assert [o.index for o in parallel] == [0, 1, 2, 3]
    assert [o.result for o in serial] == [o.result for o in parallel]
    assert len({o.result for o in serial}) == 4


def test_business_errors_are_captured():
    outcomes = run_replicates(fail_on_odd, 4, 0, n_jobs=1)
    assert [o.success for o in outcomes] == [True, False, True, False]
    assert outcomes[1].error == "odd replicate"
    assert outcomes[1].result is None
    assert failure_rate(outcomes) == pytest.approx(0.5)


def test_other_errors_propagate():
    def broken(rng):
        raise KeyError("bug")

    with pytest.raises(KeyError):
        run_replicate(broken, 0, 0)


def test_failure_rate_of_nothing():
    assert failure_rate([]) == 0.0
