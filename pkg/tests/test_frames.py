import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pframes import (
    InputError,
    NotAFrameError,
    NSpace,
    PFrameFamily,
    PreconditionError,
    UnboundedFunctionalError,
    analysis_sequence,
    anchored_seminorm,
    canonical_dual,
    cartesian_product,
    frame_sum,
    functional_norm,
    is_p_bessel,
    is_p_frame,
    optimal_bounds,
    parseval_rescale,
    product_bounds,
    q_frame_bounds,
    reconstruct,
    scale_family,
    sum_families,
    synthesis_apply,
    synthesis_norm,
)
from pframes.frames import QDualFamily, conjugate_exponent
from conftest import e, random_family, random_space


def fam(S, rows, p=2.0):
    return PFrameFamily.from_coeffs(S, rows, p)


class TestFamily:
    def test_conjugate(self):
        assert conjugate_exponent(2.0) == 2.0
        assert conjugate_exponent(3.0) == pytest.approx(1.5)
        with pytest.raises(InputError):
            conjugate_exponent(1.0)

    def test_members_roundtrip(self, space3):
        F = fam(space3, [e(0), e(1)])
        G = PFrameFamily.from_functionals(F.members, 2.0)
        np.testing.assert_array_equal(G.coeffs, F.coeffs)
        assert F.m == 2 and F.q == 2.0

    def test_strict_rejects_anchor_component(self, space3):
        with pytest.raises(UnboundedFunctionalError):
            fam(space3, [e(2)])

    def test_frame_sum_examples(self, space3):
        F = fam(space3, [e(0), e(1)])
        assert frame_sum(F, (3, 4, 7)) == pytest.approx(25.0)
        assert frame_sum(F, (0, 0, 0)) == 0.0
        T = fam(space3, [(1.0, 2.0, 0.0)])
        assert frame_sum(T, (3, -1, 5)) == pytest.approx(1.0)

    def test_analysis_examples(self, space3):
        F = fam(space3, [e(0), e(1)])
        np.testing.assert_allclose(analysis_sequence(F, (3, 4, 0)), [3, 4])
        np.testing.assert_allclose(analysis_sequence(F, (0, 0, 1)), [0, 0])
        assert analysis_sequence(fam(space3, [e(0)]), (2, 0, 0)).shape == (1,)


class TestBounds:
    def test_parseval(self, parseval):
        b = optimal_bounds(parseval)
        assert (b.lower, b.upper) == pytest.approx((1.0, 1.0))
        assert b.tight and b.method == "spectral"
        assert is_p_frame(parseval, b)

    def test_duplicate_member(self, space3):
        b = optimal_bounds(fam(space3, [e(0), e(0), e(1)]))
        assert (b.lower, b.upper) == pytest.approx((1.0, 2.0))

    def test_quartic(self, space3):
        b = optimal_bounds(fam(space3, [e(0), e(1)], 4.0))
        assert b.lower == pytest.approx(0.5, rel=1e-9)
        assert b.upper == pytest.approx(1.0, rel=1e-12)
        assert abs(b.arg_lower[0]) == pytest.approx(abs(b.arg_lower[1]), rel=1e-5)

    @pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
    def test_deficient_family(self, space3, p):
        F = fam(space3, [e(0)], p)
        b = optimal_bounds(F)
        assert b.lower == pytest.approx(0.0, abs=1e-12)
        assert not is_p_frame(F, b)
        assert is_p_bessel(F, bounds=b)

    def test_zero_family(self, space3):
        F = fam(space3, [np.zeros(3)])
        b = optimal_bounds(F)
        assert b.upper == 0.0
        assert not is_p_frame(F, b)
        assert is_p_bessel(F, 0.0, b)

    def test_bessel_claim(self, space3):
        F = fam(space3, [e(0), e(0), e(1)])
        assert is_p_bessel(F, 2.0)
        assert not is_p_bessel(F, 1.5)

    def test_certificates_attain_bounds(self):
        rng = np.random.default_rng(6)
        for p in (1.5, 2.0, 3.0):
            S = random_space(rng, 5)
            F = random_family(rng, S, S.complement_dim + 2, p)
            b = optimal_bounds(F)
            for x, val in ((b.arg_lower, b.lower), (b.arg_upper, b.upper)):
                assert anchored_seminorm(S, x) == pytest.approx(1.0, rel=1e-9)
                assert frame_sum(F, x) == pytest.approx(val, rel=1e-8)

    def test_spectral_needs_p2(self, space3):
        with pytest.raises(InputError):
            optimal_bounds(fam(space3, [e(0)], 3.0), method="spectral")

    def test_volume_scaling(self):
        S = NSpace.from_anchors([[0, 0, 2.0]])
        b = optimal_bounds(fam(S, [e(0), e(1)]))
        # |T x|^2 = x_1^2 while seminorm^2 = 4 (x_1^2 + x_2^2).
        assert b.upper == pytest.approx(0.25)


class TestRescaleAndSums:
    def test_parseval_rescale(self, space3):
        F = fam(space3, [4 * e(0), 4 * e(1)])
        G = parseval_rescale(F)
        np.testing.assert_allclose(G.coeffs, [e(0), e(1)])
        b = optimal_bounds(G)
        assert (b.lower, b.upper) == pytest.approx((1.0, 1.0))

    def test_rescale_noop(self, parseval):
        assert parseval_rescale(parseval) is parseval

    def test_rescale_needs_tight(self, space3):
        with pytest.raises(PreconditionError):
            parseval_rescale(fam(space3, [e(0), e(0), e(1)]))

    def test_sum_with_self(self, space3):
        F = fam(space3, [(1, 2, 0), (0, 1, 0)], 3.0)
        S = sum_families(F, F)
        bF, bS = optimal_bounds(F), optimal_bounds(S)
        assert bS.upper == pytest.approx(2 ** 3 * bF.upper, rel=1e-8)

    def test_sum_with_negative(self, space3):
        F = fam(space3, [(1, 2, 0), (0, 1, 0)])
        assert optimal_bounds(sum_families(F, scale_family(F, -1))).upper == 0.0

    def test_incompatible(self, space3):
        with pytest.raises(InputError):
            sum_families(fam(space3, [e(0)]), fam(space3, [e(0)], 3.0))
        with pytest.raises(InputError):
            sum_families(fam(space3, [e(0)]), fam(space3, [e(0), e(1)]))


class TestSynthesis:
    def test_apply_examples(self, space3):
        F = fam(space3, [e(0), e(1)])
        np.testing.assert_allclose(synthesis_apply(F, [1, 1]).coeffs, (1, 1, 0))
        np.testing.assert_allclose(synthesis_apply(F, [0, 1]).coeffs, F.coeffs[1])
        np.testing.assert_allclose(synthesis_apply(F, [0, 0]).coeffs, 0.0)
        with pytest.raises(InputError):
            synthesis_apply(F, [1, 2, 3])

    def test_norm_examples(self, space3):
        assert synthesis_norm(fam(space3, [e(0), e(1)])) == pytest.approx(1.0)
        assert synthesis_norm(fam(space3, [e(0), e(0)])) == pytest.approx(math.sqrt(2))
        t = (3.0, 4.0, 0.0)
        for p in (1.5, 3.0):
            T = fam(space3, [t], p)
            assert synthesis_norm(T) == pytest.approx(functional_norm(T.members[0]))


class TestDual:
    def test_orthonormal(self, parseval):
        D = canonical_dual(parseval)
        np.testing.assert_allclose(D.vectors, parseval.coeffs, atol=1e-14)

    def test_duplicate(self, space3):
        D = canonical_dual(fam(space3, [e(0), e(0), e(1)]))
        np.testing.assert_allclose(D.vectors, [e(0) / 2, e(0) / 2, e(1)], atol=1e-14)

    def test_non_frame(self, space3):
        with pytest.raises(NotAFrameError):
            canonical_dual(fam(space3, [e(0)]))

    def test_reconstruction(self):
        rng = np.random.default_rng(12)
        for _ in range(20):
            S = random_space(rng, 6)
            F = random_family(rng, S, S.complement_dim + 2, 3.0)
            D = canonical_dual(F)
            x = rng.standard_normal(S.dimension)
            target = S.from_complement(S.to_complement(x))
            assert np.linalg.norm(reconstruct(F, D, x) - target) <= 1e-9 * max(1, np.linalg.norm(x))
            np.testing.assert_allclose(reconstruct(F, D, S.anchors.anchors[0]), 0.0, atol=1e-9)

    def test_zero_dual_reconstructs_zero(self, parseval):
        D = QDualFamily(np.zeros((2, 3)), 2.0)
        np.testing.assert_array_equal(reconstruct(parseval, D, (1, 2, 3)), 0.0)

    def test_q_bounds(self, space3, parseval):
        D = QDualFamily(parseval.coeffs, 2.0)
        b = q_frame_bounds(D, space3)
        assert (b.lower, b.upper) == pytest.approx((1.0, 1.0))
        z = q_frame_bounds(QDualFamily(np.zeros((2, 3)), 2.0), space3)
        assert (z.lower, z.upper) == (0.0, 0.0)

    def test_q_floor(self):
        rng = np.random.default_rng(13)
        for p in (1.5, 3.0):
            S = random_space(rng, 5)
            F = random_family(rng, S, S.complement_dim + 1, p)
            bF = optimal_bounds(F)
            bD = q_frame_bounds(canonical_dual(F, bF), S)
            assert bD.lower >= bF.upper ** (-F.q / p) * (1 - 1e-6)


class TestProduct:
    def test_bounds_1_2_times_3_4(self):
        X = NSpace.from_anchors([[0, 0, 1.0]])
        Y = NSpace.from_anchors([[0, 0, 1.0]])
        F = fam(X, [e(0), e(0), e(1)])  # A=1, B=2
        G = PFrameFamily.from_coeffs(Y, [2 * e(0), np.sqrt(3) * e(1), np.zeros(3)], 2.0)  # C=3, D=4
        b = product_bounds(cartesian_product(F, G))
        assert (b.lower, b.upper) == pytest.approx((1.0, 4.0))

    @pytest.mark.parametrize("p", [1.5, 3.0])
    def test_copy_keeps_bounds(self, space3, p):
        F = fam(space3, [(1, 2, 0), (0, 1, 0), (1, -1, 0)], p)
        G = fam(NSpace.from_anchors([[0, 0, 1.0]]), F.coeffs, p)
        bF, bP = optimal_bounds(F), product_bounds(cartesian_product(F, G))
        assert bP.lower == pytest.approx(bF.lower, rel=1e-8)
        assert bP.upper == pytest.approx(bF.upper, rel=1e-8)

    def test_zero_component(self, space3):
        F = fam(space3, [e(0), e(1)])
        G = fam(NSpace.from_anchors([[0, 0, 1.0]]), np.zeros((2, 3)))
        assert product_bounds(cartesian_product(F, G)).lower == pytest.approx(0.0, abs=1e-14)

    def test_certificates(self):
        rng = np.random.default_rng(14)
        S, Y = random_space(rng, 4, order=2), random_space(rng, 4, order=2)
        F = random_family(rng, S, 4, 3.0)
        G = random_family(rng, Y, 4, 3.0)
        P = cartesian_product(F, G)
        b = product_bounds(P)
        for z, val in ((b.arg_lower, b.lower), (b.arg_upper, b.upper)):
            assert P.space.seminorm(z) == pytest.approx(1.0, rel=1e-9)
            assert P.frame_sum(z) == pytest.approx(val, rel=1e-7)

    def test_order_mismatch(self, space3):
        F = fam(space3, [e(0)])
        Y = NSpace.from_anchors([[1, 0, 0, 0.0], [0, 1, 0, 0]])
        G = PFrameFamily.from_coeffs(Y, [[0, 0, 1, 0]], 2.0)
        with pytest.raises(InputError):
            cartesian_product(F, G)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31 - 1), st.sampled_from([1.5, 2.0, 3.0]))
def test_frame_inequality_holds_on_samples(seed, p):
    rng = np.random.default_rng(seed)
    S = random_space(rng, 5)
    F = random_family(rng, S, int(rng.integers(1, 6)), p)
    b = optimal_bounds(F)
    for _ in range(10):
        x = rng.standard_normal(S.dimension)
        s = anchored_seminorm(S, x) ** p
        v = frame_sum(F, x)
        assert b.lower * s * (1 - 1e-7) - 1e-12 <= v <= b.upper * s * (1 + 1e-7) + 1e-12
