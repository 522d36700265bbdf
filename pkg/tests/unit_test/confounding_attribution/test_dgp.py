import numpy as np
import pytest
from scipy.special import expit

from confounding_attribution.dgp import (
    ACTG_CONFOUNDERS,
    ACTG_COVARIATES,
    CancellationSpec,
    CurthDgpSpec,
    ProxyConfounderSpec,
    SemiSynthSource,
    SemiSynthSpec,
    actg_semisynth_spec,
    curth_ablation_spec,
    curth_preset,
    curth_propensity_logit,
    generate,
    generate_cancellation,
    generate_cancelling_confounder,
    generate_curth,
    generate_proxy_confounder,
    generate_semisynth,
    simulate_actg_covariates,
    spec_from_dict,
    spec_to_dict,
    with_seed,
)
from confounding_attribution.exceptions import InvalidSpec, LengthMismatch
from confounding_attribution.type import CovariateRole


@pytest.fixture(scope="module")
def curth11():
    return generate_curth(curth_preset("curth11", n=2000, seed=1))


##########################
##### Curth DGP #####
##########################
def test_generate_curth_shapes_and_roles(curth11):
    assert (curth11.n, curth11.p) == (2000, 11)
    assert curth11.names[0] == "x1" and curth11.names[-1] == "x11"
    assert curth11.roles[:2] == (CovariateRole.INSTRUMENT,) * 2
    assert curth11.confounders == (2, 3, 4)
    assert curth11.roles[-1] == CovariateRole.NOISE


def test_generate_curth_is_deterministic():
    spec = curth_preset("curth4", n=100, seed=5)
    first, second = generate_curth(spec), generate_curth(spec)
    np.testing.assert_array_equal(first.x, second.x)
    np.testing.assert_array_equal(first.y, second.y)


def test_generate_curth_effect_depends_on_modifiers_only(curth11):
    modifiers = curth11.x[:, list(curth11.indices_of(CovariateRole.EFFECT_MODIFIER))]
    np.testing.assert_allclose(curth11.tau_true, (modifiers**2).sum(axis=1))


def test_generate_curth_propensity_follows_logit(curth11):
    spec = curth_preset("curth11", n=2000, seed=1)
    np.testing.assert_allclose(curth11.propensity, expit(curth_propensity_logit(curth11.x, spec)))


def test_curth_propensity_logit_is_median_centred():
    spec = CurthDgpSpec(0, 2, 0, 0, 0, xi=3.0, gamma_z=0.0, n=500)
    x = generate_curth(spec).x
    assert np.median(curth_propensity_logit(x, spec)) == pytest.approx(0.0, abs=1e-12)


def test_noise_covariates_are_unaffected_by_other_blocks():
    # Blocks draw from their own streams, so adding confounders leaves noise columns alone
    base = generate_curth(CurthDgpSpec(1, 1, 1, 1, 2, n=50, seed=9))
    wider = generate_curth(CurthDgpSpec(1, 3, 1, 1, 2, n=50, seed=9))
    np.testing.assert_array_equal(base.x[:, -2:], wider.x[:, -2:])


@pytest.mark.parametrize(
    "kwargs",
    [
        {"n_instruments": -1},
        {"n_confounders": 0},
        {"sigma": -1.0},
        {"n": 1},
    ],
)
def test_CurthDgpSpec_raise_error_with_invalid_values(kwargs):
    base = dict(n_instruments=1, n_confounders=1, n_modifiers=1, n_outcome_only=1, n_noise=0)
    with pytest.raises(InvalidSpec):
        CurthDgpSpec(**{**base, **kwargs})


def test_CurthDgpSpec_allows_no_confounders_without_confounding():
    assert CurthDgpSpec(1, 0, 1, 1, 0, xi=0.0).p == 3


@pytest.mark.parametrize("p,counts", [(25, (4, 10, 4, 4, 3)), (5, (1, 2, 1, 1, 0)), (1, (0, 1, 0, 0, 0))])
def test_curth_ablation_spec_counts(p, counts):
    spec = curth_ablation_spec(p)
    assert spec.counts == counts and spec.p == p


def test_curth_preset_unknown():
    with pytest.raises(InvalidSpec):
        curth_preset("curth5")


################################
##### Mechanism DGPs #####
################################
def test_generate_cancellation_uses_cell_table():
    ds = generate_cancellation(n=4000, sigma=0.0, seed=0)
    assert ds.roles == (CovariateRole.CONFOUNDER, CovariateRole.CONFOUNDER)
    assert set(np.unique(ds.x)) == {0.0, 1.0}
    cell_11 = (ds.x == [1, 1]).all(axis=1)
    assert np.unique(ds.propensity[cell_11]).tolist() == [0.9]
    np.testing.assert_allclose(ds.y[cell_11], -7 / 6)
    assert (ds.tau_true == 0).all()


def test_CancellationSpec_raise_error_with_tiny_sample():
    with pytest.raises(InvalidSpec):
        CancellationSpec(n=4)


def test_generate_cancelling_confounder_layout():
    ds = generate_cancelling_confounder(n=500, seed=2)
    assert ds.names == ("Z", "C", "M", "O")
    np.testing.assert_allclose(ds.tau_true, 1 + 3 * ds.x[:, 2] ** 2)
    np.testing.assert_allclose(ds.propensity, expit(3 * ds.x[:, 1] + ds.x[:, 0]))


def test_generate_proxy_confounder_layout():
    ds = generate_proxy_confounder(n=1000, noise_sd=0.5, seed=0)
    assert ds.roles == (CovariateRole.INSTRUMENT, CovariateRole.OUTCOME_ONLY, CovariateRole.CONFOUNDER)
    np.testing.assert_allclose(ds.propensity, expit(2.0 * ds.x[:, 0]))
    assert np.std(ds.x[:, 0] - ds.x[:, 2]) == pytest.approx(0.5, rel=0.15)


def test_cancelling_confounder_effect_is_free_of_prognostic_covariates():
    ds = generate_cancelling_confounder(n=20000, seed=4)
    z, c, m, o = ds.x.T
    treated = ds.a == 1
    # mu1 - mu0 depends on M only; C and O enter the shared baseline
    residual = ds.y - (2 * c + o + 0.5 * o**2) - ds.a * (1 + 3 * m**2)
    assert abs(residual[treated].mean() - residual[~treated].mean()) < 0.05
    assert np.std(residual) == pytest.approx(0.5, rel=0.05)
    assert abs(np.corrcoef(ds.tau_true, c)[0, 1]) < 0.05
    assert abs(np.corrcoef(ds.tau_true, o)[0, 1]) < 0.05


@pytest.mark.parametrize(
    "make",
    [
        lambda seed: generate_curth(CurthDgpSpec(1, 1, 1, 1, 0, n=2, seed=seed)),
        lambda seed: generate_cancellation(n=8, sigma=1.0, seed=seed),
        lambda seed: generate_cancelling_confounder(n=2, seed=seed),
        lambda seed: generate_proxy_confounder(n=2, noise_sd=1.0, seed=seed),
    ],
    ids=["curth", "cancellation", "cancelling_confounder", "proxy_confounder"],
)
def test_generators_fill_both_arms_at_tiny_n(make):
    for seed in range(50):
        ds = make(seed)
        n_untreated, n_treated = ds.arm_sizes
        assert n_untreated > 0 and n_treated > 0


def test_ProxyConfounderSpec_needs_positive_noise():
    with pytest.raises(InvalidSpec):
        ProxyConfounderSpec(noise_sd=0.0)


##############################
##### Semi-synthetic #####
##############################
def test_simulate_actg_covariates_standardizes_continuous_columns():
    x, names = simulate_actg_covariates(n=1054, seed=42)
    assert names == ACTG_COVARIATES and x.shape == (1054, 11)
    age = x[:, names.index("age")]
    assert abs(age.mean()) < 1e-10 and age.std() == pytest.approx(1.0)
    assert set(np.unique(x[:, names.index("gender")])) <= {0.0, 1.0}


def test_generate_semisynth_marks_confounders():
    x, names = simulate_actg_covariates(n=300)
    ds = generate_semisynth(x, actg_semisynth_spec(), names=names)
    assert tuple(names[j] for j in ds.confounders) == ACTG_CONFOUNDERS
    assert (ds.tau_true == 0.45).all()


def test_randomized_semisynth_has_constant_propensity():
    x, names = simulate_actg_covariates(n=300)
    ds = generate_semisynth(x, actg_semisynth_spec(randomized=True), names=names)
    np.testing.assert_allclose(ds.propensity, 0.5)


def _semisynth_spec(**overrides) -> SemiSynthSpec:
    params = dict(confounder_indices=(0,), alpha0=0.0, alpha=(1.0,), beta0=0.0, beta=(1.0,), tau=1.0, sigma=0.1)
    return SemiSynthSpec(**{**params, **overrides})


def test_SemiSynthSpec_raise_error_on_length_mismatch():
    with pytest.raises(LengthMismatch):
        _semisynth_spec(confounder_indices=(0, 1), beta=(1.0, 1.0))


def test_generate_semisynth_index_out_of_range():
    with pytest.raises(LengthMismatch):
        generate_semisynth(np.zeros((10, 2)), _semisynth_spec(confounder_indices=(5,)))


def test_generate_semisynth_resamples_until_both_arms_filled():
    spec = _semisynth_spec(alpha0=-4.0, alpha=(0.0,), sigma=0.0)
    ds = generate_semisynth(np.zeros((20, 1)), spec)
    assert 0 < ds.arm_sizes[1] < 20


###################################
##### Spec (de)serialization #####
###################################
@pytest.mark.parametrize(
    "spec",
    [
        curth_preset("curth4", n=50),
        CancellationSpec(n=40, sigma=0.1, seed=2),
        ProxyConfounderSpec(n=60, noise_sd=1.0),
        SemiSynthSource(spec=actg_semisynth_spec(seed=3), n=80),
    ],
)
def test_spec_dict_round_trip(spec):
    assert spec_from_dict(spec_to_dict(spec)) == spec


def test_spec_from_dict_presets():
    assert spec_from_dict({"kind": "curth", "preset": "curth17", "n": 10}).counts == (3, 5, 3, 4, 2)
    source = spec_from_dict({"kind": "semisynth", "preset": "actg_randomized", "n": 100})
    assert source.n == 100 and source.spec.alpha0 == 0.0


@pytest.mark.parametrize(
    "block", [{"kind": "wavelet"}, {"kind": "curth", "bogus": 1}, {"kind": "semisynth", "preset": "lalonde"}]
)
def test_spec_from_dict_raise_error_with_bad_block(block):
    with pytest.raises(InvalidSpec):
        spec_from_dict(block)


def test_with_seed_changes_assignment_not_covariates():
    source = SemiSynthSource(spec=actg_semisynth_spec(), n=200)
    first, second = generate(source), generate(with_seed(source, 7))
    np.testing.assert_array_equal(first.x, second.x)
    assert not np.array_equal(first.a, second.a)


def test_generate_dispatches_every_kind():
    for block in (
        {"kind": "curth", "preset": "curth4", "n": 30},
        {"kind": "cancellation", "n": 40},
        {"kind": "cancelling_confounder", "n": 30},
        {"kind": "proxy_confounder", "n": 30},
        {"kind": "semisynth", "preset": "actg", "n": 60},
    ):
        assert generate(spec_from_dict(block)).n == block["n"]
