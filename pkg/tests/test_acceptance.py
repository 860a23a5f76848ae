"""Acceptance gate: one test per criterion, each at its stated tolerance.

Every test records a ``PASS``/``FAIL`` line that is printed in the terminal
summary, whatever the outcome.
"""

import time

import pytest

from cournot_delay import verify

CRITERIA = [
    (1, "equilibrium table", verify.check_equilibrium_table, 1.0),
    (2, "critical delays", verify.check_critical_delays, 5.0),
    (3, "band boundary", verify.check_band_boundary, None),
    (4, "equal-firm degeneracy", verify.check_equal_firm_degeneracy, None),
    (5, "oracle equivalence", verify.check_oracle_equivalence, None),
    (6, "crossing consistency", verify.check_crossing_consistency, None),
    (7, "spectrum reproduction", verify.check_spectrum, 30.0),
    (8, "dynamics reproduction", verify.check_dynamics, 120.0),
    (9, "integrator quality", verify.check_integrator_quality, None),
]


@pytest.mark.parametrize("number,name,check,budget", CRITERIA, ids=[f"criterion-{c[0]}" for c in CRITERIA])
def test_criterion(number, name, check, budget, acceptance_log):
    start = time.perf_counter()
    ok, detail = check()
    elapsed = time.perf_counter() - start
    in_time = budget is None or elapsed < budget
    passed = bool(ok) and in_time
    limit = f" (limit {budget:g} s)" if budget is not None else ""
    line = f"{'PASS' if passed else 'FAIL'} criterion {number} {name}: {detail} [{elapsed:.2f} s{limit}]"
    acceptance_log.append(line)
    print(line)
    assert ok, detail
    assert in_time, f"took {elapsed:.1f} s, limit {budget} s"
