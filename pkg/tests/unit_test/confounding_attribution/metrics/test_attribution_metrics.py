import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from confounding_attribution.exceptions import EmptyConfounderSet, InconsistentWidth, ZeroTotalMass
from confounding_attribution.metrics import (
    ATTRIBUTION_METRICS,
    attribution_metric_factory,
    confounder_mass,
    confounder_recovery,
    rank_stability,
    stability_frame,
)


##############################
##### Role-aware metrics #####
##############################
def test_confounder_mass_uses_absolute_values():
    assert confounder_mass(np.array([-0.6, 0.2, 0.2]), [0]) == pytest.approx(0.6)


def test_confounder_mass_all_zero():
    with pytest.raises(ZeroTotalMass):
        confounder_mass(np.zeros(3), [0])


def test_confounder_recovery_counts_top_ranked():
    phi = np.array([0.9, 0.1, -0.5, 0.3])
    assert confounder_recovery(phi, [0, 2]) == 1.0
    assert confounder_recovery(phi, [0, 1]) == 0.5


def test_confounder_recovery_ties_favour_lower_index():
    assert confounder_recovery(np.array([0.5, 0.5]), [1]) == 0.0


def test_confounder_recovery_empty_set():
    with pytest.raises(EmptyConfounderSet):
        confounder_recovery(np.array([1.0]), [])


@st.composite
def attributions(draw):
    """Integer-valued phi with at least one non-zero entry and a confounder subset."""
    phi = np.array(draw(st.lists(st.integers(-20, 20), min_size=2, max_size=12)), dtype=np.float64)
    if not phi.any():
        phi[0] = 1.0
    confounders = draw(st.sets(st.integers(0, len(phi) - 1), min_size=1))
    return phi, sorted(confounders)


@settings(max_examples=100, deadline=None)
@given(case=attributions(), scale=st.floats(1e-3, 1e3))
def test_confounder_mass_is_scale_invariant(case, scale):
    phi, confounders = case
    assert confounder_mass(scale * phi, confounders) == pytest.approx(
        confounder_mass(phi, confounders), rel=1e-12, abs=1e-15
    )


@settings(max_examples=100, deadline=None)
@given(case=attributions())
def test_confounder_recovery_is_invariant_under_monotone_transforms(case):
    phi, confounders = case
    magnitude = np.abs(phi)
    # Strictly increasing in |phi| and exact on small integers
    transformed = -np.sign(phi) * (2 * magnitude**3 + magnitude + 1)
    assert confounder_recovery(transformed, confounders) == confounder_recovery(phi, confounders)


@pytest.mark.parametrize("metric", sorted(ATTRIBUTION_METRICS))
def test_attribution_metric_factory_binds_confounders(metric):
    func = attribution_metric_factory(metric, [1])
    assert 0.0 <= func(np.array([0.2, 0.8])) <= 1.0


def test_attribution_metric_factory_raise_error_with_unknown_metric():
    with pytest.raises(ValueError):
        attribution_metric_factory("auc", [0])


############################
##### Rank stability #####
############################
def test_rank_stability_counts_sum_to_runs():
    runs = [np.array([0.5, 0.1, -0.3]), np.array([0.2, 0.4, 0.1]), np.array([0.6, -0.1, 0.2])]
    table = rank_stability(runs, names=["a", "b", "c"])
    assert table.n_runs == 3
    np.testing.assert_array_equal(table.counts.sum(axis=0), 3)
    np.testing.assert_array_equal(table.counts.sum(axis=1), 3)
    assert table.counts[0].tolist() == [2, 1, 0]
    frame = table.to_frame()
    assert frame.loc["a", 1] == 2 and list(frame.columns) == [1, 2, 3]


def test_rank_stability_needs_two_runs():
    with pytest.raises(ValueError):
        rank_stability([np.array([1.0, 2.0])])


def test_rank_stability_inconsistent_width():
    with pytest.raises(InconsistentWidth):
        rank_stability([np.zeros(2), np.zeros(3)])


def test_stability_frame_long_format():
    frame = stability_frame([np.array([0.1, -0.2]), np.array([0.3, 0.0])], ["a", "b"], run_ids=[5, 6])
    assert list(frame.columns) == ["run", "covariate", "phi", "abs_phi", "rank"]
    assert frame[frame["run"] == 5]["rank"].tolist() == [2, 1]
    assert frame[frame["run"] == 6]["rank"].tolist() == [1, 2]
