import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from pframes import (
    DegenerateSpaceError,
    InputError,
    NSpace,
    anchored_seminorm,
    gram_volume,
    n_norm,
    project_complement,
)
from pframes.nspace import seminorm_by_projection


def gram_oracle(vectors):
    X = np.asarray(vectors, dtype=float)
    return float(np.sqrt(max(np.linalg.det(X @ X.T), 0.0)))


class TestGramVolume:
    def test_rectangle(self):
        assert gram_volume([(1, 0, 0), (0, 2, 0)]) == pytest.approx(2.0, rel=1e-14)

    def test_dependent_pair(self):
        assert gram_volume([(1, 2, 3), (2, 4, 6)]) == 0.0

    def test_unit_square(self):
        assert gram_volume([(1, 0), (0, 1)]) == pytest.approx(1.0)

    def test_matches_determinant_oracle(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            d = int(rng.integers(2, 7))
            r = int(rng.integers(1, d + 1))
            X = rng.standard_normal((r, d))
            assert gram_volume(list(X)) == pytest.approx(gram_oracle(X), rel=1e-9)

    def test_too_many_vectors(self):
        with pytest.raises(InputError):
            gram_volume([(1, 0), (0, 1), (1, 1)])

    def test_mismatched_lengths(self):
        with pytest.raises(InputError):
            gram_volume([(1, 0), (0, 1, 0)])


class TestNNorm:
    def test_examples(self, space3):
        S = NSpace.from_anchors([[0, 0, 1]])
        assert n_norm(S, (1, 0, 0), (0, 2, 0)) == pytest.approx(2.0)
        assert n_norm(S, (0, 2, 0), (1, 0, 0)) == pytest.approx(2.0)
        assert n_norm(S, (3, 0, 0), (0, 2, 0)) == pytest.approx(6.0)

    def test_arity_enforced(self, space3):
        with pytest.raises(InputError):
            n_norm(space3, (1, 0, 0))

    def test_dimension_enforced(self, space3):
        with pytest.raises(InputError):
            n_norm(space3, (1, 0), (0, 1))


class TestSpace:
    def test_dependent_anchors(self):
        with pytest.raises(DegenerateSpaceError):
            NSpace.from_anchors([[1, 0, 0], [2, 0, 0]])

    def test_anchors_fill_space(self):
        with pytest.raises(DegenerateSpaceError):
            NSpace.from_anchors([[1, 0], [0, 1]])

    def test_declared_dimension(self):
        with pytest.raises(InputError):
            NSpace.from_anchors([[1, 0, 0]], dimension=4)

    def test_basis_orthonormal_and_orthogonal_to_anchors(self):
        rng = np.random.default_rng(0)
        A = rng.standard_normal((2, 5))
        S = NSpace.from_anchors(A)
        B = S.complement_basis
        assert B.shape == (5, 3)
        np.testing.assert_allclose(B.T @ B, np.eye(3), atol=1e-12)
        np.testing.assert_allclose(A @ B, 0.0, atol=1e-12)
        assert S.volume == pytest.approx(gram_oracle(A), rel=1e-12)


class TestSeminorm:
    def test_examples(self):
        S = NSpace.from_anchors([[0, 1, 0]])
        assert anchored_seminorm(S, (3, 4, 0)) == pytest.approx(3.0)
        assert anchored_seminorm(S, (0, 1, 0)) == 0.0
        S2 = NSpace.from_anchors([[0, 0, 2]])
        assert anchored_seminorm(S2, (1, 0, 0)) == pytest.approx(2.0)

    def test_projection_examples(self):
        S = NSpace.from_anchors([[0, 0, 1]])
        np.testing.assert_allclose(project_complement(S, (1, 2, 3)), (1, 2, 0), atol=1e-15)
        np.testing.assert_allclose(project_complement(S, (0, 0, 1)), 0.0, atol=1e-15)
        np.testing.assert_allclose(project_complement(S, (5, -1, 0)), (5, -1, 0), atol=1e-15)

    def test_factorization_agrees(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            d = int(rng.integers(2, 8))
            n = int(rng.integers(2, min(4, d) + 1))
            S = NSpace.from_anchors(rng.standard_normal((n - 1, d)))
            x = rng.standard_normal(d)
            assert anchored_seminorm(S, x) == pytest.approx(seminorm_by_projection(S, x), rel=1e-9)


vec3 = arrays(np.float64, 3, elements=st.floats(-10, 10, allow_nan=False))


@settings(max_examples=200, deadline=None)
@given(vec3, vec3, vec3, st.floats(-5, 5, allow_nan=False))
def test_axioms_order2_in_r3(x, y, z, alpha):
    S = NSpace.from_anchors([[0.0, 0.0, 1.0]])
    nxy = n_norm(S, x, y)
    assert nxy >= 0.0
    scale = (np.linalg.norm(x) + np.linalg.norm(y)) ** 2
    assert n_norm(S, y, x) == pytest.approx(nxy, rel=1e-12, abs=1e-9 * scale)
    slack = 1e-9 * (1.0 + (1 + abs(alpha)) * (np.linalg.norm(x) + np.linalg.norm(y)) ** 2)
    assert abs(n_norm(S, alpha * x, y) - abs(alpha) * nxy) <= slack
    # Rank thresholding may zero a volume below 1e-10 * s_max^2.
    slack = 1e-9 * (1.0 + (np.linalg.norm(x) + np.linalg.norm(y) + np.linalg.norm(z)) ** 2)
    assert n_norm(S, x + z, y) <= n_norm(S, x, y) + n_norm(S, z, y) + slack


@settings(max_examples=100, deadline=None)
@given(vec3, st.floats(-5, 5, allow_nan=False))
def test_dependent_pairs_vanish(x, alpha):
    S = NSpace.from_anchors([[0.0, 0.0, 1.0]])
    assert n_norm(S, x, alpha * x) == 0.0


def test_permutations_order3():
    rng = np.random.default_rng(5)
    S = NSpace.from_anchors(rng.standard_normal((2, 4)))
    X = rng.standard_normal((3, 4))
    ref = n_norm(S, *X)
    for perm in itertools.permutations(range(3)):
        assert n_norm(S, *X[list(perm)]) == pytest.approx(ref, rel=1e-12)
