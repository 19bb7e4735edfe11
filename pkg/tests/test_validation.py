import dataclasses

import numpy as np
import pytest

from expression import Option
from lshmc.core import SpecError, validate_target

from .utils import gaussian, iso, quartic


def test_isotropic_target_passes():
    report = validate_target(iso(3), 200, seed=0)

    assert report.passed
    assert report.n_pairs == 200
    assert len(report.failures()) == 0
    assert [check.name for check in report.checks] == ["gradient", "smoothness", "strong_convexity"]


def test_quartic_target_passes():
    report = validate_target(quartic([1.0, 2.0, 5.0], weight=2.0), 500, seed=1)

    assert report.passed


def test_halved_smoothness_is_caught():
    target = gaussian([1.0, 4.0, 16.0])
    wrong = dataclasses.replace(target, smoothness=target.smoothness / 2.0)

    report = validate_target(wrong, 200, seed=2)

    assert not report.passed
    [failure] = report.failures()
    assert failure.name == "smoothness"
    match failure.offending:
        case Option(tag="some", some=(x, y)):
            assert x.shape == y.shape == (3,)
        case _:
            assert False


def test_overstated_convexity_is_caught():
    target = gaussian([1.0, 4.0, 16.0])
    wrong = dataclasses.replace(target, strong_convexity=2.0)

    report = validate_target(wrong, 200, seed=3)

    assert [failure.name for failure in report.failures()] == ["strong_convexity"]


def test_wrong_gradient_is_caught():
    target = gaussian([1.0, 2.0])
    wrong = dataclasses.replace(target, grad=lambda x: 1.1 * target.grad(x))

    report = validate_target(wrong, 100, seed=4)

    assert "gradient" in [failure.name for failure in report.failures()]


def test_validation_is_reproducible():
    first = validate_target(quartic([1.0, 3.0]), 100, seed=5)
    second = validate_target(quartic([1.0, 3.0]), 100, seed=5)

    assert [c.max_violation for c in first.checks] == [c.max_violation for c in second.checks]


def test_needs_at_least_one_pair():
    with pytest.raises(SpecError):
        validate_target(iso(2), 0, seed=0)


def test_passing_checks_carry_no_offending_pair():
    report = validate_target(iso(2), 50, seed=6)

    assert all(check.offending.is_none() for check in report.checks)
    assert all(np.isfinite(check.max_violation) for check in report.checks)
