"""Independent reference implementations used only by the tests.

These deliberately avoid the production code paths: the full-matrix
dynamic program and the memoized recursion below are separate derivations
of edit distance, and serve as oracles for the two-row implementation.
"""

from functools import lru_cache

import numpy as np


def levenshtein_full_matrix(x: str, y: str) -> int:
    """Classic full-table dynamic program over raw strings."""
    n, m = len(x), len(y)
    table = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n + 1):
        table[i][0] = i
    for j in range(m + 1):
        table[0][j] = j
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            cost = 0 if x[i - 1] == y[j - 1] else 1
            table[i][j] = min(
                table[i - 1][j] + 1,
                table[i][j - 1] + 1,
                table[i - 1][j - 1] + cost,
            )
    return table[n][m]


def levenshtein_recursive(x: str, y: str) -> int:
    """Exhaustive recursion over edit scripts (memoized on suffix indices)."""

    @lru_cache(maxsize=None)
    def go(i: int, j: int) -> int:
        if i == len(x):
            return len(y) - j
        if j == len(y):
            return len(x) - i
        best = go(i + 1, j + 1) + (0 if x[i] == y[j] else 1)
        best = min(best, go(i + 1, j) + 1)  # delete x[i]
        best = min(best, go(i, j + 1) + 1)  # insert y[j]
        return best

    result = go(0, 0)
    go.cache_clear()
    return result


def random_string(rng: np.random.Generator, max_len: int, alphabet: str = "ACGT") -> str:
    n = int(rng.integers(0, max_len + 1))
    return "".join(alphabet[i] for i in rng.integers(0, len(alphabet), n))
