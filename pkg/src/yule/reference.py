"""Published six-decimal reference values reproduced by the table command."""

# E[theta_n^2] on the standard n grid; "inf" is the Wiener-process limit.
SECOND_MOMENTS = {
    2: 1.000000,
    5: 0.341109,
    10: 0.265140,
    20: 0.246645,
    50: 0.241501,
    100: 0.240767,
    200: 0.240584,
    500: 0.240532,
    1000: 0.240525,
    2000: 0.240523,
    5000: 0.240523,
    "inf": 0.240523,
}

# Even moments E[theta_50^k] for k = 2..16.
THETA50_MOMENTS = {
    2: 0.241501,
    4: 0.109961,
    6: 0.061465,
    8: 0.038257,
    10: 0.025485,
    12: 0.017803,
    14: 0.012885,
    16: 0.009586,
}
