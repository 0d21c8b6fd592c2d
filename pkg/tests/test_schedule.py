import math

from hypothesis import given, strategies as st

from sparsescene.kernels.schedule import (ALPHA_DECAY, ALPHA_FLOOR,
                                          ALPHA_START, alpha_loss_weight)


def test_initial_weight_exact():
    assert alpha_loss_weight(0) == 10.0


def test_matches_closed_form_before_floor():
    for t in (1, 10, 100, 5000):
        assert alpha_loss_weight(t) == max(ALPHA_START * ALPHA_DECAY ** t,
                                           ALPHA_FLOOR)


@given(st.integers(0, 60000))
def test_monotone_nonincreasing(t):
    assert alpha_loss_weight(t + 1) <= alpha_loss_weight(t)


def test_floor_reached_at_expected_step():
    crossover = math.ceil(math.log(ALPHA_FLOOR / ALPHA_START)
                          / math.log(ALPHA_DECAY))
    assert crossover == 23023
    assert alpha_loss_weight(crossover - 1) > ALPHA_FLOOR
    assert alpha_loss_weight(crossover) == ALPHA_FLOOR
    assert alpha_loss_weight(10 ** 6) == ALPHA_FLOOR


def test_never_below_floor():
    for t in range(0, 100000, 997):
        assert alpha_loss_weight(t) >= ALPHA_FLOOR
