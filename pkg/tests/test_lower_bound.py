import math

import numpy as np
import pytest
from pydantic import ValidationError

from expression import Option
from expression.collections import Block
from lshmc.core.hmc import proposal_step
from lshmc.experiments import (
    LowerBoundRow,
    LowerBoundRunSpec,
    fit_collapse_exponent,
    lower_bound_claims,
    lower_bound_experiment,
)
from lshmc.experiments.lower_bound import chi_sq_events, energy_lower_bound

from .utils import hard


def row(c: float, mean_log_accept: float, accept_rate: float = 0.0) -> LowerBoundRow:
    return LowerBoundRow(
        c=c,
        eta=c / 100.0,
        mean_log_accept=mean_log_accept,
        accept_rate=accept_rate,
        n_draws=1000,
        identity_max_rel_err=0.0,
        chi_sq_event_fraction=1.0,
    )


def test_run_spec_defaults():
    spec = LowerBoundRunSpec()

    assert spec.kappa == 1e4
    assert spec.dim == 32
    assert spec.c_values == [5.0, 10.0, 20.0, 40.0]


@pytest.mark.parametrize(
    "values",
    [{"c_values": [10.0, 5.0]}, {"c_values": [5.0, 5.0]}, {"c_values": [0.0, 1.0]}, {"dim": 1}, {"kappa": 0.5}],
)
def test_run_spec_validation(values: dict[str, object]):
    with pytest.raises(ValidationError):
        LowerBoundRunSpec.model_validate(values)


def test_energy_lower_bound_on_the_last_coordinate():
    target = hard(10.0, 4)
    x = np.array([0.0, 0.0, 0.0, 1.0])
    v = np.zeros(4)

    bound = energy_lower_bound(2.0, 10.0, x, v)
    _, delta_h = proposal_step(target, 2.0, x, v)

    assert float(bound) == pytest.approx(-1.5)
    assert float(delta_h) >= float(bound)


def test_chi_sq_events_on_typical_draws():
    rng = np.random.default_rng(0)
    x = rng.standard_normal((1000, 32)) / np.sqrt(np.array([1e4] * 31 + [1.0]))
    v = rng.standard_normal((1000, 32))

    assert np.mean(chi_sq_events(1e4, x, v)) >= 0.99
    assert not chi_sq_events(1e4, np.zeros((1, 32)) + 100.0, v[:1])[0]


def test_acceptance_collapses_on_the_hard_instance():
    rows = lower_bound_experiment(LowerBoundRunSpec(n_draws=20_000, seed=0))

    assert [r.c for r in rows] == [5.0, 10.0, 20.0, 40.0]
    assert all(r.identity_max_rel_err <= 1e-8 for r in rows)
    assert all(r.hambound_min_margin is not None and r.hambound_min_margin >= -1e-9 for r in rows)
    assert all(r.chi_sq_event_fraction >= 0.99 for r in rows)
    assert rows[-1].accept_rate == 0.0
    assert all(b.mean_log_accept < a.mean_log_accept for a, b in zip(rows, rows.tail()))

    match fit_collapse_exponent(rows):
        case Option(tag="some", some=slope):
            assert slope >= 4.0
        case _:
            assert False

    claims = lower_bound_claims(rows)
    assert [claim.claim_id for claim in claims] == [
        "energy-identity",
        "energy-lower-bound",
        "accept-monotone",
        "collapse-exponent",
    ]
    assert claims.forall(lambda claim: claim.passed)


def test_small_steps_accept_and_skip_the_energy_bound():
    rows = lower_bound_experiment(LowerBoundRunSpec(kappa=100.0, dim=8, c_values=[0.1, 0.5, 1.0, 2.0], n_draws=20_000))

    assert rows[0].accept_rate >= 0.99
    assert rows[-1].accept_rate < rows[0].accept_rate
    assert all(r.hambound_min_margin is None for r in rows)
    claims = lower_bound_claims(rows)
    assert "energy-lower-bound" not in [claim.claim_id for claim in claims]
    assert [claim for claim in claims if claim.claim_id == "accept-monotone"][0].passed


def test_experiment_is_reproducible():
    spec = LowerBoundRunSpec(kappa=100.0, dim=4, c_values=[1.0, 3.0], n_draws=500, seed=7)

    assert list(lower_bound_experiment(spec)) == list(lower_bound_experiment(spec))


def test_collapse_exponent_fit():
    rows = Block([row(c, -(c**6)) for c in (2.0, 4.0, 8.0)])

    assert fit_collapse_exponent(rows).default_value(math.nan) == pytest.approx(6.0)


def test_collapse_exponent_needs_two_informative_rows():
    assert fit_collapse_exponent(Block([row(1.0, -1.0)])).is_none()
    assert fit_collapse_exponent(Block([row(1.0, 0.0), row(2.0, -3.0)])).is_none()


def test_monotone_claim_flags_a_rise():
    rows = Block([row(1.0, -1.0, accept_rate=0.2), row(2.0, -2.0, accept_rate=0.9)])

    claims = lower_bound_claims(rows)

    assert not [claim for claim in claims if claim.claim_id == "accept-monotone"][0].passed
