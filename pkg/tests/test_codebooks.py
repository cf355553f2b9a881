import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from grassrelay.analysis import distortion_bound, mean_quantization_distance
from grassrelay.codebooks import (Codebook, CodebookFormatError, best_codeword_by_gain, chordal_distance,
                                  generate_grassmannian, generate_random_codebook, load_codebook, loads_codebook,
                                  min_distance, nearest_codeword, save_codebook)
from grassrelay.numerics import RngStream, random_unit_vectors, sample_complex_gaussian_matrix, svd

# best min distance over 10^6 random (m=2, N=4) codebooks; see oracles/random_packing_search.py
RANDOM_SEARCH_BEST_2_4 = 0.8018447327338737


def test_chordal_distance_examples():
    u = np.array([1, 0], complex)
    assert chordal_distance(u, u) == 0
    assert chordal_distance(u, np.array([0, 1])) == pytest.approx(1)
    for th in np.linspace(0, 2 * np.pi, 7):
        assert chordal_distance(u, np.exp(1j * th) * u) == pytest.approx(0, abs=1e-8)


def test_chordal_distance_rejects_non_unit():
    with pytest.raises(ValueError, match="unit"):
        chordal_distance([1, 0], [0.5, 0])


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2 ** 32), st.floats(0, 2 * np.pi), st.floats(0, 2 * np.pi))
def test_chordal_distance_properties(seed, a, b):
    gen = np.random.default_rng(seed)
    u, v = random_unit_vectors(gen, 2, 3)
    d = chordal_distance(u, v)
    assert 0 <= d <= 1
    assert d == pytest.approx(chordal_distance(v, u), abs=1e-12)
    assert d == pytest.approx(chordal_distance(np.exp(1j * a) * u, np.exp(1j * b) * v), abs=1e-7)
    assert chordal_distance(u, u) == pytest.approx(0, abs=1e-7)


def test_min_distance_standard_basis():
    assert min_distance(Codebook(np.eye(2))) == pytest.approx(1)


def test_min_distance_needs_two():
    C = Codebook([[1, 0]])
    assert C.min_distance is None
    with pytest.raises(ValueError):
        min_distance(C)


def test_duplicate_lines_rejected():
    with pytest.raises(ValueError, match="duplicate"):
        Codebook([[1, 0], [1j, 0]])


def test_cached_min_distance_matches(books):
    for C in books.values():
        assert abs(C.min_distance - min_distance(C)) <= 1e-12
        assert np.all(np.abs(np.linalg.norm(C.vectors, axis=1) - 1) <= 1e-10)
        assert not C.vectors.flags.writeable


def test_grassmannian_two_lines_orthogonal():
    assert generate_grassmannian(RngStream(1), 2, 2).min_distance == pytest.approx(1, abs=1e-9)


def test_grassmannian_2_4_against_random_search(books):
    delta = books[(2, 4)].min_distance
    assert delta >= 0.98 * RANDOM_SEARCH_BEST_2_4
    assert delta >= 0.70
    assert delta <= np.sqrt(2 / 3) + 1e-9  # simplex bound for 4 lines in C^2


def test_grassmannian_3_8_beats_median_random(books):
    rand = [generate_random_codebook(RngStream(8, k), 3, 8).min_distance for k in range(200)]
    assert books[(3, 8)].min_distance > np.median(rand)


def test_grassmannian_beats_random_floor():
    C = generate_grassmannian(RngStream(2), 3, 8, restarts=5)
    rand = [generate_random_codebook(RngStream(3, k), 3, 8).min_distance for k in range(10_000)]
    assert C.min_distance >= max(rand)


def test_grassmannian_dominates_random_statistically():
    # sign test over 100 paired trials, p < 0.01 requires at least 63 wins
    wins = sum(generate_grassmannian(RngStream(4, k), 2, 8, restarts=2, iterations=50).min_distance
               > generate_random_codebook(RngStream(5, k), 2, 8).min_distance for k in range(100))
    assert wins >= 63


def test_random_codebook_properties():
    Cs = [generate_random_codebook(RngStream(6, k), 2, 8) for k in range(10)]
    for C in Cs:
        assert np.all(np.abs(np.linalg.norm(C.vectors, axis=1) - 1) <= 1e-10)
        assert C.kind == "random"
    assert len({C.digest() for C in Cs}) == 10
    G = generate_grassmannian(RngStream(7), 2, 8)
    assert np.mean([C.min_distance for C in Cs]) < G.min_distance


def test_nearest_codeword_member(books):
    C = books[(3, 8)]
    i, w, d = nearest_codeword(C, C.vectors[5] * 1j)
    assert i == 5 and d == pytest.approx(0, abs=1e-7)


def test_nearest_codeword_tie_lowest_index():
    C = Codebook(np.eye(2))
    i, _, d = nearest_codeword(C, np.array([1, 1]) / np.sqrt(2))
    assert i == 0 and d == pytest.approx(np.sqrt(0.5))


def test_nearest_codeword_standard_basis_formula(gen):
    C = Codebook(np.eye(2))
    for s in random_unit_vectors(gen, 100, 2):
        _, _, d = nearest_codeword(C, s)
        assert d ** 2 == pytest.approx(1 - np.max(np.abs(s) ** 2), abs=1e-12)


def test_nearest_codeword_dim_mismatch(books):
    with pytest.raises(ValueError):
        nearest_codeword(books[(2, 4)], np.ones(3) / np.sqrt(3))


def test_best_codeword_contains_b1(gen):
    H = sample_complex_gaussian_matrix(gen, 2, 3)
    f = svd(H)
    C = Codebook(np.vstack([random_unit_vectors(gen, 3, 3), f.right_vector(0)]))
    i, w, snr = best_codeword_by_gain(C, H, 2.0)
    assert i == 3 and snr == pytest.approx(2 * f.singulars[0] ** 2)


def test_best_codeword_single_and_loop(gen, books):
    H = sample_complex_gaussian_matrix(gen, 3, 3)
    w = random_unit_vectors(gen, 1, 3)
    i, _, snr = best_codeword_by_gain(Codebook(w), H, 1.5)
    assert i == 0 and snr == pytest.approx(1.5 * np.linalg.norm(H @ w[0]) ** 2)
    C = books[(3, 16)]
    loop = max(1.5 * np.linalg.norm(H @ v) ** 2 for v in C.vectors)
    assert best_codeword_by_gain(C, H, 1.5)[2] == pytest.approx(loop, rel=1e-14)
    with pytest.raises(ValueError):
        best_codeword_by_gain(C, np.ones((2, 2)), 1.0)


def test_round_trip(tmp_path, books):
    C = books[(3, 16)]
    p = save_codebook(C, tmp_path / "c.txt", comment="test book")
    D = load_codebook(p)
    assert np.max(np.abs(D.vectors - C.vectors)) <= 1e-15
    assert D.kind == "external"


def test_external_fixture_file(tmp_path):
    lines = ["# hand-written 8-line book in C^2", "2 8"]
    for k in range(8):
        th, ph = np.arccos(np.sqrt((k % 4 + 0.5) / 4)), 2 * np.pi * k / 8 + 0.3 * (k >= 4)
        v = np.array([np.cos(th), np.sin(th) * np.exp(1j * ph)])
        lines.append(" ".join(f"{x:.17g}" for z in v for x in (z.real, z.imag)))
    (tmp_path / "ext.txt").write_text("\n".join(lines) + "\n")
    C = load_codebook(tmp_path / "ext.txt")
    assert (C.dim, C.size, C.kind) == (2, 8, "external")


@pytest.mark.parametrize("text,msg", [
    ("", "empty"),
    ("2\n1 0 0 0\n", "header"),
    ("2 2\n1 0 0 0\n", "declares 2"),
    ("2 1\n1 0 0\n", ":2: expected 4"),
    ("2 1\n1 0 x 0\n", ":2: non-numeric"),
    ("# c\n2 2\n1 0 0 0\n0.5 0 0 0\n", ":4: codeword row 1 is not unit norm"),
    ("2 2\n1 0 0 0\n0 1 0 0\n", "duplicate"),
])
def test_malformed_files(text, msg):
    with pytest.raises(CodebookFormatError, match=msg):
        loads_codebook(text, source="f")


def test_distortion_bound_holds(books):
    for (m, N), C in books.items():
        mean, se = mean_quantization_distance(C, RngStream(9, N), 100_000)
        assert mean <= distortion_bound(N, C.min_distance, m) + 3 * se
