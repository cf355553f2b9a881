"""Regenerates the frozen random-search floor used in test_codebooks.py.

Best minimum chordal distance over 10^6 codebooks of 4 random unit vectors in
C^2 (stream seed 99). Output: 0.8018447327338737
"""

import numpy as np

from grassrelay.numerics import RngStream, random_unit_vectors


def best_random_min_distance(dim=2, size=4, books=1_000_000, chunk=10_000, seed=99):
    gen = RngStream(seed, 0).generator()
    iu = np.triu_indices(size, 1)
    best = 0.0
    for _ in range(books // chunk):
        V = random_unit_vectors(gen, chunk * size, dim).reshape(chunk, size, dim)
        G = np.abs(np.einsum("bik,bjk->bij", V.conj(), V)) ** 2
        best = max(best, float(np.sqrt(1 - G[:, iu[0], iu[1]].max(axis=1)).max()))
    return best


if __name__ == "__main__":
    print(repr(best_random_min_distance()))
