import random
from fractions import Fraction

import pytest

import divstab as ds
from divstab.core import TRIVIAL_VALUATION
from divstab.filtrations import (
    FiltrationSpec,
    d_infinity,
    expected_order_S,
    filtration_volume_finite_k,
    restriction_inequality_check,
)

from _cases import random_big_class, random_shifts, random_support, surface_models

p2 = ds.bundled_model("p2")
blp2 = ds.bundled_model("blp2")
p2t = ds.bundled_model("p2_toric")

LINE = p2.named_valuations["line"]
ORD_E = blp2.named_valuations["ord_e"]
E1 = p2t.named_valuations["e1"]
E2 = p2t.named_valuations["e2"]
L3H = p2t.divisor([0, 0, 3])


class TestSpecValidation:
    def test_repeated_support_rejected(self):
        with pytest.raises(ds.GeometryError):
            FiltrationSpec((LINE, LINE), (0.0, 1.0))

    def test_length_mismatch_rejected(self):
        with pytest.raises(ds.GeometryError):
            FiltrationSpec((LINE,), (0.0, 1.0))


class TestExpectedOrder:
    def test_plane_line(self):
        # (1/9) int_0^3 (3 - lam)^2 dlam = 1, by the closed-form antiderivative
        s = expected_order_S(p2, p2.divisor([3]), FiltrationSpec((LINE,), (0.0,)))
        assert abs(s - 1.0) < 1e-9

    def test_blowup_exceptional(self):
        # (1/8) int_0^2 (9 - (1+lam)^2) dlam = 7/6
        s = expected_order_S(blp2, blp2.divisor([3, -1]), FiltrationSpec((ORD_E,), (0.0,)))
        assert abs(s - 7.0 / 6.0) < 1e-9

    def test_trivial_only_support(self):
        for t0 in (0.0, 0.7, -1.5):
            s = expected_order_S(
                p2, p2.divisor([3]), FiltrationSpec((TRIVIAL_VALUATION,), (t0,))
            )
            assert s == t0

    def test_requires_big(self):
        with pytest.raises(ds.GeometryError):
            expected_order_S(p2, p2.divisor([-1]), FiltrationSpec((LINE,), (0.0,)))

    def test_translation_equivariance(self):
        rng = random.Random(5)
        for model in surface_models():
            L = random_big_class(model, rng)
            support = random_support(model, rng)
            t = random_shifts(rng, len(support))
            c = rng.uniform(-2, 2)
            a = expected_order_S(model, L, FiltrationSpec(support, t))
            b = expected_order_S(
                model, L, FiltrationSpec(support, tuple(x + c for x in t))
            )
            assert abs(b - a - c) < 1e-9

    def test_lipschitz(self):
        rng = random.Random(6)
        for model in surface_models():
            L = random_big_class(model, rng)
            support = random_support(model, rng)
            t = random_shifts(rng, len(support))
            u = random_shifts(rng, len(support))
            gap = max(abs(a - b) for a, b in zip(t, u))
            a = expected_order_S(model, L, FiltrationSpec(support, t))
            b = expected_order_S(model, L, FiltrationSpec(support, u))
            assert abs(a - b) <= gap + 1e-9

    def test_concavity_in_shifts(self):
        rng = random.Random(8)
        for model in surface_models():
            L = random_big_class(model, rng)
            support = random_support(model, rng)
            t = random_shifts(rng, len(support))
            u = random_shifts(rng, len(support))
            theta = rng.uniform(0, 1)
            mid = tuple(theta * a + (1 - theta) * b for a, b in zip(t, u))
            sm = expected_order_S(model, L, FiltrationSpec(support, mid))
            st = expected_order_S(model, L, FiltrationSpec(support, t))
            su = expected_order_S(model, L, FiltrationSpec(support, u))
            assert sm >= theta * st + (1 - theta) * su - 1e-7

    def test_deactivation_of_large_shifts(self):
        # a valuation shifted past lam_max contributes nothing
        L = blp2.divisor([3, -1])
        base = expected_order_S(blp2, L, FiltrationSpec((ORD_E,), (0.0,)))
        extra = blp2.named_valuations["ord_line"]
        both = expected_order_S(
            blp2, L, FiltrationSpec((ORD_E, extra), (0.0, 50.0))
        )
        assert abs(base - both) < 1e-9

    def test_toric_expected_order(self):
        s = expected_order_S(p2t, L3H, FiltrationSpec((E1,), (0.0,)))
        assert abs(s - 1.0) < 1e-8


class TestFiniteK:
    def test_trivial_profile(self):
        prof = filtration_volume_finite_k(
            p2t, L3H, FiltrationSpec((TRIVIAL_VALUATION,), (0.0,)), 1
        )
        assert prof.jumping_values == (0.0,) * 10
        assert prof.volume == 0.0

    def test_level_one_jumping_values(self):
        prof = filtration_volume_finite_k(p2t, L3H, FiltrationSpec((E1,), (0.0,)), 1)
        assert sorted(prof.jumping_values, reverse=True) == [
            3.0, 2.0, 2.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0,
        ]
        assert prof.volume == 1.0
        assert len(prof.jumping_values) == 10

    def test_convergence_at_k50(self):
        s = expected_order_S(p2t, L3H, FiltrationSpec((E1,), (0.0,)))
        prof = filtration_volume_finite_k(p2t, L3H, FiltrationSpec((E1,), (0.0,)), 50)
        assert abs(prof.volume / 50 - s) <= 0.05

    def test_interacting_valuations_converge(self):
        # two constraints: finite-k values approach the integral S
        spec = FiltrationSpec((E1, E2), (0.0, 0.2))
        s = expected_order_S(p2t, L3H, spec)
        errs = []
        for k in (5, 20, 45):
            prof = filtration_volume_finite_k(p2t, L3H, spec, k)
            errs.append(abs(prof.volume / k - s))
        assert errs[-1] <= 0.05
        assert errs[-1] <= errs[0] + 1e-9

    def test_non_toric_model_rejected(self):
        with pytest.raises(ds.GeometryError):
            filtration_volume_finite_k(
                p2, p2.divisor([3]), FiltrationSpec((LINE,), (0.0,)), 2
            )

    def test_fractional_level_rejected(self):
        half = p2t.divisor([0, 0, Fraction(1, 2)])
        with pytest.raises(ds.GeometryError):
            filtration_volume_finite_k(p2t, half, FiltrationSpec((E1,), (0.0,)), 1)


class TestDInfinity:
    def test_identical_specs(self):
        spec = FiltrationSpec((E1,), (0.5,))
        assert d_infinity(p2t, L3H, spec, spec, 3) == 0.0

    def test_uniform_shift(self):
        a = FiltrationSpec((E1, E2), (0.0, 1.0))
        b = FiltrationSpec((E1, E2), (2.0, 3.0))
        assert abs(d_infinity(p2t, L3H, a, b, 1) - 2.0) < 1e-12

    def test_single_shift_gap(self):
        a = FiltrationSpec((E1,), (0.0,))
        b = FiltrationSpec((E1,), (1.0,))
        assert abs(d_infinity(p2t, L3H, a, b, 3) - 3.0) < 1e-12

    def test_bounds_volume_gap(self):
        rng = random.Random(13)
        for _ in range(10):
            a = FiltrationSpec((E1, E2), (rng.uniform(0, 2), rng.uniform(0, 2)))
            b = FiltrationSpec((E1, E2), (rng.uniform(0, 2), rng.uniform(0, 2)))
            k = rng.choice([1, 2, 5])
            va = filtration_volume_finite_k(p2t, L3H, a, k).volume
            vb = filtration_volume_finite_k(p2t, L3H, b, k).volume
            assert abs(va - vb) / k <= d_infinity(p2t, L3H, a, b, k) / k + 1e-12


class TestRestrictionInequality:
    def test_two_constraints_versus_one(self):
        spec = FiltrationSpec((E1, E2), (0.0, 0.0))
        ok, (full, sub) = restriction_inequality_check(p2t, L3H, spec, (E1,))
        assert ok
        assert full <= sub + 1e-9

    def test_equal_supports(self):
        spec = FiltrationSpec((E1, E2), (0.3, 0.1))
        ok, (full, sub) = restriction_inequality_check(p2t, L3H, spec, (E1, E2))
        assert ok
        assert abs(full - sub) < 1e-12

    def test_huge_shift_deactivates(self):
        spec = FiltrationSpec((E1, E2), (0.0, 30.0))
        ok, (full, sub) = restriction_inequality_check(p2t, L3H, spec, (E1,))
        assert ok
        assert abs(full - sub) < 1e-9

    def test_subset_must_be_contained(self):
        spec = FiltrationSpec((E1,), (0.0,))
        with pytest.raises(ds.GeometryError):
            restriction_inequality_check(p2t, L3H, spec, (E2,))

    def test_on_surfaces(self):
        rng = random.Random(17)
        for model in surface_models():
            L = random_big_class(model, rng)
            support = random_support(model, rng, allow_trivial=False, max_size=2)
            if len(support) < 2:
                continue
            spec = FiltrationSpec(support, random_shifts(rng, len(support)))
            ok, _ = restriction_inequality_check(model, L, spec, support[:1])
            assert ok
