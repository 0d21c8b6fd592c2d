"""Transparency-supervision weight schedule: starts at 10, decays by
0.9997 per update, floored at 0.01."""

ALPHA_START = 10.0
ALPHA_DECAY = 0.9997
ALPHA_FLOOR = 0.01


def alpha_loss_weight(step: int) -> float:
    if step < 0:
        raise ValueError("step must be >= 0")
    return max(ALPHA_START * ALPHA_DECAY ** step, ALPHA_FLOOR)
