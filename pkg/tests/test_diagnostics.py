import math

import numpy as np
import pytest

from rllfb.channel import ChannelParams
from rllfb.pms import s_min
from rllfb.pms.diagnostics import (
    delta_bound,
    output_for,
    phi,
    psi_closed_form,
    psi_monte_carlo,
    psi_phi_diagnostic,
)
from rllfb.qgraph import build_policy


@pytest.fixture
def setup():
    p = ChannelParams(0.1, 0.2)
    return p, build_policy(p)


def test_output_for():
    assert output_for(1, 4) == 0
    assert output_for(2, 1) == 1
    with pytest.raises(ValueError):
        output_for(1, 3)


def test_phi_at_rho_zero(setup):
    p, pol = setup
    for q, x, qn in [(3, 0, 3), (3, 1, 1), (4, 0, 1), (2, 1, 3)]:
        assert phi(pol, p, q, x, qn, 0.0) == 1.0


def test_history_one_has_no_penalty(setup):
    p, pol = setup
    assert psi_closed_form(pol, p, 0.05, 1, 3, 0, 3, 0.4) == phi(pol, p, 3, 0, 3, 0.4)


def test_closed_form_matches_simulation(setup):
    p, pol = setup
    rng = np.random.default_rng(2)
    s = 0.5 * s_min(p, pol)
    for q, x, qn, rho in [(3, 1, 1, 0.5), (3, 0, 3, 0.8), (4, 0, 1, 0.3)]:
        mc, se, n = psi_monte_carlo(pol, p, s, 0, q, x, qn, rho, 200_000, rng)
        assert n > 1000
        assert abs(mc - psi_closed_form(pol, p, s, 0, q, x, qn, rho)) <= 3 * se


def test_delta_bound_vanishes(setup):
    _, pol = setup
    assert delta_bound(pol, 0.0, 0.5) == 0.0
    assert delta_bound(pol, 1e-3, 0.5) < delta_bound(pol, 1e-2, 0.5)


def test_diagnostic_table(setup):
    p, _ = setup
    rows = psi_phi_diagnostic(p, trials=50_000, tuples=10, seed=4)
    assert len(rows) == 10
    assert all(r.within_bound for r in rows)
    assert sum(r.matches for r in rows) >= 9
    d = rows[0].to_dict()
    assert {"psi_closed", "psi_mc", "phi_bound", "matches"} <= set(d)


def test_diagnostic_fixed_rho(setup):
    p, _ = setup
    rows = psi_phi_diagnostic(p, rho=0.0, trials=1000, tuples=5)
    assert all(r.phi == 1.0 for r in rows)
    with pytest.raises(ValueError):
        psi_phi_diagnostic(p, rho=1.0)
