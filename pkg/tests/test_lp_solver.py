import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gbas_screen.lp_solver import LinearProgram, format_lp, is_feasible, solve
from oracles import random_lp, vertex_lp


def test_inspection_example():
    lp = LinearProgram(c=[2.0, 1.0], A=[[-1.0, -1.0]], b=[-1.0], lower=[0, 0], upper=[1, 1])
    out = solve(lp)
    assert out.optimal
    assert np.allclose(out.x, [0.0, 1.0], atol=1e-12)
    assert out.objective == pytest.approx(1.0)


def test_row_beyond_upper_bound_is_infeasible():
    lp = LinearProgram(c=[1.0], A=[[-1.0]], b=[-2.0], lower=[0.0], upper=[1.0])
    assert solve(lp).status == "infeasible"


def test_no_rows_sits_at_lower_bounds_for_positive_costs():
    lp = LinearProgram(c=[1.0, 3.0], A=np.zeros((0, 2)), b=[], lower=[0.5, -1.0], upper=[2.0, 2.0])
    out = solve(lp)
    assert np.allclose(out.x, [0.5, -1.0])


def test_zero_row_with_negative_rhs_is_infeasible():
    lp = LinearProgram(c=[1.0], A=[[0.0]], b=[-1.0], lower=[0.0], upper=[1.0])
    assert solve(lp).status == "infeasible"


@given(st.integers(0, 2 ** 32 - 1))
@settings(max_examples=300, deadline=None)
def test_matches_vertex_enumeration(seed):
    lp = random_lp(np.random.default_rng(seed))
    out = solve(lp)
    ref = vertex_lp(lp)
    assert out.optimal == (ref is not None)
    if ref is not None:
        assert is_feasible(lp, out.x)
        assert out.objective == pytest.approx(ref[0], rel=1e-8, abs=1e-8)


def test_many_redundant_rows():
    """Constraint generation must still honour every row."""
    rng = np.random.default_rng(7)
    n = 8
    A = -np.abs(rng.normal(size=(300, n)))
    b = -rng.uniform(0.5, 2.0, 300)
    lp = LinearProgram(c=rng.uniform(0.1, 1.0, n), A=A, b=b, lower=np.zeros(n), upper=np.full(n, 50.0))
    out = solve(lp)
    assert out.optimal and is_feasible(lp, out.x)
    full = solve(lp, batch=300)
    assert out.objective == pytest.approx(full.objective, rel=1e-9)


def test_deterministic():
    lp = random_lp(np.random.default_rng(42))
    a, b = solve(lp), solve(lp)
    assert a.status == b.status
    if a.optimal:
        assert np.array_equal(a.x, b.x)


def test_validation():
    with pytest.raises(ValueError):
        LinearProgram(c=[1.0], A=[[1.0]], b=[1.0, 2.0], lower=[0.0], upper=[1.0])
    with pytest.raises(ValueError):
        LinearProgram(c=[1.0], A=[[1.0]], b=[1.0], lower=[2.0], upper=[1.0])
    with pytest.raises(ValueError):
        LinearProgram(c=[np.nan], A=[[1.0]], b=[1.0], lower=[0.0], upper=[1.0])


def test_format_round_trips_numbers():
    lp = LinearProgram(c=[2.0, 1.0], A=[[-1.0, -1.0]], b=[-1.0], lower=[0, 0], upper=[1, 1],
                       labels=["cover"])
    text = format_lp(lp)
    lines = text.splitlines()
    assert lines[0] == "LP 2 variables 1 constraints"
    assert "  r1  -1 -1  <=  -1   # cover" in lines
    assert lines[-1] == "end"
