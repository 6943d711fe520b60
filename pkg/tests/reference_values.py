"""Published quantile levels used as regression targets (three decimals)."""

import math

EQUAL_VARIANCE_LEVELS = {
    1: (0.500,),
    2: (0.198, 0.802),
    3: (0.075, 0.500, 0.925),
    4: (0.027, 0.270, 0.730, 0.973),
    5: (0.010, 0.133, 0.500, 0.867, 0.990),
    6: (0.004, 0.062, 0.307, 0.693, 0.938, 0.996),
}

# (cells, nu) -> interior levels of the equal-K' partition for the Student-t
EQUAL_KPRIME_LEVELS = {
    (3, 3): (0.045, 0.955),
    (3, 5): (0.123, 0.877),
    (3, 7): (0.150, 0.850),
    (3, 10): (0.166, 0.834),
    (3, 12): (0.173, 0.827),
    (3, 15): (0.179, 0.821),
    (3, 25): (0.187, 0.813),
    (3, 50): (0.193, 0.807),
    (3, 100): (0.196, 0.804),
    (3, math.inf): (0.198, 0.802),
    (4, 3): (0.002, 0.500, 0.998),
    (4, 5): (0.016, 0.500, 0.984),
    (4, 7): (0.032, 0.500, 0.968),
    (4, 10): (0.045, 0.500, 0.955),
    (4, 12): (0.051, 0.500, 0.949),
    (4, 15): (0.055, 0.500, 0.945),
    (4, 25): (0.063, 0.500, 0.937),
    (4, 50): (0.069, 0.500, 0.931),
    (4, 100): (0.072, 0.500, 0.928),
    (4, math.inf): (0.075, 0.500, 0.925),
}

# printed to three decimals but not reproducible: the equal-K' root is unique
# and sits near 0.000275 (see the high-precision test in test_partition.py)
NON_REPRODUCIBLE = {(4, 3)}
