"""
Long-running acceptance checks: bound preservation, temperature positivity
and entropy growth, first-law balance, manufactured-solution orders in 1D and 2D and
agreement with the explicit reference.

Deselected by default; run with ``pytest -m slow``.
"""
import numpy as np
import pytest

from thermotumor.schemas.controls import StepControls
from thermotumor.schemas.params import ModelParams
from thermotumor.services.diagnostics import entropy_tolerance, total_entropy
from thermotumor.services.grid import l2_norm
from thermotumor.services.stepper import advance, run
from thermotumor.services.verification import (
    FIELDS,
    CosineDecayCase,
    explicit_reference,
    run_mms,
    run_mms_temporal,
)
from thermotumor.utils.validation import admissibility_violations
from tests.factories import make_grid, random_admissible_state, smooth_state

pytestmark = pytest.mark.slow

SLACK = 1e-12


def test_random_runs_keep_bounds():
    """Test 50 random admissible runs in 1D and 2D stay inside the box"""
    rng = np.random.default_rng(7)
    p = ModelParams()
    c = StepControls(dt=1e-3)

    for index in range(50):
        grid = make_grid(dim=1, cells=64) if index % 2 == 0 else make_grid(dim=2, cells=32)
        violations = []

        def monitor(state, _report):
            found = admissibility_violations(state, SLACK)
            if found:
                violations.append((state.t, found))

        run(random_admissible_state(grid, rng), 1.0, c, p, sink=monitor)

        assert violations == [], f"run {index} on {grid.cells}"


def test_positive_temperature_floor_and_entropy():
    """Test θ stays positive and entropy never drops when θ₀ ≥ 0.5"""
    rng = np.random.default_rng(11)
    p = ModelParams()

    for index in range(10):
        state = random_admissible_state(make_grid(cells=64), rng, theta_floor=0.5)
        reports = []
        run(state, 1.0, StepControls(dt=1e-3), p, sink=lambda s, r: reports.append((s, r)))

        for new_state, report in reports:
            assert report.min_theta > 0.0, f"run {index} at t={new_state.t}"
            tolerance = entropy_tolerance(total_entropy(new_state, p.specific_heat))
            assert report.entropy_increment >= -tolerance


def test_energy_residual_halving():
    """Test the per-step energy residual drops by 3.5x per Δt halving"""
    state = smooth_state(make_grid(cells=32))
    p = ModelParams()
    residuals = [advance(state, StepControls(dt=dt, newton_tol=1e-12, linear_tol=1e-13), p)[1].energy_residual
                 for dt in (1e-2, 5e-3, 2.5e-3, 1.25e-3)]

    ratios = [coarse / fine for coarse, fine in zip(residuals, residuals[1:])]
    assert all(ratio >= 3.5 for ratio in ratios), ratios


def test_spatial_order():
    """Test second-order spatial convergence on (16, 32, 64) cells"""
    report = run_mms(CosineDecayCase(dim=1), [16, 32, 64])

    for name in FIELDS:
        assert 1.8 <= report.orders[name][-1] <= 2.3, report.orders
    assert all(report.passed.values())


def test_spatial_order_2d():
    """Test second-order spatial convergence on (8, 16, 32) cells per axis in 2D"""
    report = run_mms(CosineDecayCase(dim=2), [8, 16, 32])

    for name in FIELDS:
        assert report.orders[name][-1] >= 1.8, report.orders


def test_temporal_order():
    """Test first-order temporal convergence on a 128-cell grid"""
    report = run_mms_temporal(CosineDecayCase(dim=1), 128, [4e-3, 2e-3, 1e-3])

    for name in FIELDS:
        assert report.orders[name][-1] >= 0.9, report.orders


def test_explicit_reference_agreement():
    """Test implicit and explicit trajectories agree and converge at first order"""
    initial = smooth_state(make_grid(cells=32))
    p = ModelParams()
    explicit = explicit_reference(initial, 0.1, 1e-6, p)

    def relative_distance(dt: float) -> float:
        implicit = run(initial, 0.1, StepControls(dt=dt), p)
        return max(
            l2_norm(getattr(implicit, name) - getattr(explicit, name)) / max(l2_norm(getattr(explicit, name)), 1e-300)
            for name in FIELDS
        )

    coarse, fine = relative_distance(2e-3), relative_distance(1e-3)

    assert fine < 5e-3
    assert coarse / fine >= 1.5
