from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

import divstab as ds
from divstab.core import TRIVIAL_VALUATION, as_fraction

p2 = ds.bundled_model("p2")
blp2 = ds.bundled_model("blp2")
p2t = ds.bundled_model("p2_toric")


class TestDivisorClass:
    def test_arithmetic_is_exact(self):
        a = p2.divisor([Fraction(1, 3)])
        b = p2.divisor([Fraction(1, 6)])
        assert (a + b).coefficients == (Fraction(1, 2),)
        assert (a - b).coefficients == (Fraction(1, 6),)
        assert (Fraction(3, 2) * a).coefficients == (Fraction(1, 2),)
        assert (-a).coefficients == (Fraction(-1, 3),)

    def test_string_rationals(self):
        assert as_fraction("7/3") == Fraction(7, 3)
        d = p2.divisor(["5/2"])
        assert d.coefficients == (Fraction(5, 2),)

    def test_basis_mismatch_rejected(self):
        with pytest.raises(ds.BasisMismatchError):
            p2.divisor([1]) + blp2.divisor([1, 0])
        with pytest.raises(ds.BasisMismatchError):
            p2.volume(blp2.divisor([1, 0]))


class TestValuation:
    def test_negative_log_discrepancy_rejected(self):
        with pytest.raises(ds.GeometryError):
            ds.Valuation("bad", Fraction(-1))

    def test_trivial_has_zero_log_discrepancy(self):
        assert TRIVIAL_VALUATION.log_discrepancy == 0
        with pytest.raises(ds.GeometryError):
            ds.Valuation("t", Fraction(1), is_trivial=True)


class TestDivisorialMeasure:
    def test_masses_must_sum_to_one(self):
        line = p2.named_valuations["line"]
        with pytest.raises(ds.GeometryError):
            ds.DivisorialMeasure.make([(line, Fraction(1, 2))])

    def test_repeated_valuation_rejected(self):
        line = p2.named_valuations["line"]
        with pytest.raises(ds.GeometryError):
            ds.DivisorialMeasure.make(
                [(line, Fraction(1, 2)), (line, Fraction(1, 2))]
            )

    def test_mass_range(self):
        line = p2.named_valuations["line"]
        with pytest.raises(ds.GeometryError):
            ds.DivisorialMeasure.make(
                [(line, Fraction(3, 2)), (TRIVIAL_VALUATION, Fraction(-1, 2))]
            )


class TestIsBig:
    def test_ample_is_big(self):
        assert ds.is_big(p2, p2.divisor([3]))

    def test_negative_of_ample_is_not(self):
        assert not ds.is_big(p2, p2.divisor([-1]))

    def test_h_minus_2e_is_not_big(self):
        assert not ds.is_big(blp2, blp2.divisor([1, -2]))


class TestVolumeHomogeneity:
    @given(
        c=st.fractions(min_value=0, max_value=5),
        x=st.integers(min_value=0, max_value=5),
        y=st.integers(min_value=-2, max_value=5),
    )
    @settings(max_examples=60, deadline=None)
    def test_surface_degree_two(self, c, x, y):
        D = blp2.divisor([x, y])
        assert blp2.volume(c * D) == c**2 * blp2.volume(D)

    @given(c=st.fractions(min_value=0, max_value=4), a=st.integers(min_value=0, max_value=4))
    @settings(max_examples=40, deadline=None)
    def test_toric_degree_two(self, c, a):
        D = p2t.divisor([0, 0, a])
        assert p2t.volume(c * D) == c**2 * p2t.volume(D)


class TestGammaThreshold:
    def test_blowup_exceptional(self):
        # vol(3H - g E) = 9 - g^2, vanishing at 3
        g = ds.gamma_threshold(blp2, blp2.divisor([3, 0]), blp2.named_valuations["ord_e"])
        assert g == 3

    def test_plane_line(self):
        # vol(3H - g line) = (3 - g)^2
        g = ds.gamma_threshold(p2, p2.divisor([3]), p2.named_valuations["line"])
        assert g == 3

    def test_twisted_anticanonical(self):
        # vol(3H - (1+g) E) = 9 - (1+g)^2, positive iff g < 2
        g = ds.gamma_threshold(blp2, blp2.divisor([3, -1]), blp2.named_valuations["ord_e"])
        assert g == 2

    def test_positive_for_big_classes(self):
        for name, coeffs in [("p2", [2]), ("blp2", [2, -1]), ("f1", [1, 2])]:
            model = ds.bundled_model(name)
            L = model.divisor(coeffs)
            for v in model.named_valuations.values():
                assert float(ds.gamma_threshold(model, L, v)) > 0

    def test_trivial_valuation_rejected(self):
        with pytest.raises(ds.GeometryError):
            ds.gamma_threshold(p2, p2.divisor([3]), TRIVIAL_VALUATION)

    def test_non_big_class_rejected(self):
        with pytest.raises(ds.GeometryError):
            ds.gamma_threshold(p2, p2.divisor([-1]), p2.named_valuations["line"])

    def test_volume_vanishes_at_threshold(self):
        L = blp2.divisor([3, -1])
        v = blp2.named_valuations["ord_e"]
        g = ds.gamma_threshold(blp2, L, v)
        assert blp2.twisted_volume(L, [(v, g)]) == 0

    def test_toric_threshold_matches_surface(self):
        tor = ds.bundled_model("p2_toric")
        g = ds.gamma_threshold(tor, tor.divisor([0, 0, 3]), tor.named_valuations["e1"])
        assert abs(float(g) - 3) < 1e-8


class TestVolumeMonotonicity:
    def test_nondecreasing_along_effective(self):
        # adding multiples of an effective class never shrinks the volume
        L = blp2.divisor([2, -1])
        A = blp2.divisor([1, 0])
        vols = [blp2.volume(L + Fraction(s, 4) * A) for s in range(9)]
        assert all(b >= a for a, b in zip(vols, vols[1:]))
