import io
import math

import numpy as np
import pytest

from urnlab.colors import right_shift_model, ssrw_model
from urnlab.errors import DomainError, InvalidSpec, SupportCapExceeded, TooLarge, WindowTooSmall
from urnlab.exact_law import (
    SparseLaw,
    brute_force_law,
    exact_law_cf,
    exact_law_dp,
    exact_law_ladder,
    law_moments,
    write_law_csv,
)
from urnlab.product_formula import mgf_zn


def max_entry_diff(a: SparseLaw, b: SparseLaw) -> float:
    keys = set(a.entries) | set(b.entries)
    return max(abs(a.entries.get(k, 0.0) - b.entries.get(k, 0.0)) for k in keys)


def test_dp_right_shift_n2(delta0):
    law = exact_law_dp(right_shift_model(), delta0(1), 2)
    assert abs(law.entries[(0,)] - 1.0 / 3.0) < 1e-15
    assert abs(law.entries[(1,)] - 0.5) < 1e-15
    assert abs(law.entries[(2,)] - 1.0 / 6.0) < 1e-15
    assert len(law.entries) == 3


def test_dp_ssrw1_n1(delta0):
    law = exact_law_dp(ssrw_model(1), delta0(1), 1)
    assert law.entries == {(-1,): 0.25, (0,): 0.5, (1,): 0.25}


def test_dp_n0_returns_u0(delta0):
    u0 = SparseLaw.from_entries({(2,): 0.75, (-1,): 0.25})
    law = exact_law_dp(right_shift_model(), u0, 0)
    assert law.entries == u0.entries
    assert law.n == 0


def test_dp_matches_brute_force_small(models, delta0):
    for name in ("right-shift", "ssrw1"):
        model = models[name]
        u0 = delta0(model.dim)
        for n in range(1, 7):
            dp = exact_law_dp(model, u0, n, prune_eps=0.0)
            bf = brute_force_law(model, u0, n)
            assert max_entry_diff(dp, bf) < 1e-14, (name, n)


def test_dp_with_spread_u0():
    model = right_shift_model()
    u0 = SparseLaw.from_entries({(0,): 0.5, (5,): 0.5})
    dp = exact_law_dp(model, u0, 3, prune_eps=0.0)
    bf = brute_force_law(model, u0, 3)
    assert max_entry_diff(dp, bf) < 1e-15


def test_brute_force_right_shift_exact(delta0):
    law = brute_force_law(right_shift_model(), delta0(1), 3)
    assert law.entries[(3,)] == 1.0 / 24.0
    assert law.pruned_mass == 0.0


def test_brute_force_caps(delta0):
    with pytest.raises(TooLarge):
        brute_force_law(right_shift_model(), delta0(1), 15)


def test_generic_dimension_path(delta0):
    model = ssrw_model(3)
    u0 = delta0(3)
    dp = exact_law_dp(model, u0, 4, prune_eps=0.0)
    bf = brute_force_law(model, u0, 4)
    assert max_entry_diff(dp, bf) < 1e-15


def test_ladder_validation(models, delta0):
    with pytest.raises(InvalidSpec):
        exact_law_ladder(models["ssrw1"], delta0(1), [10, 10])
    with pytest.raises(InvalidSpec):
        exact_law_ladder(models["ssrw1"], delta0(1), [])
    with pytest.raises(InvalidSpec):
        exact_law_ladder(models["ssrw1"], delta0(1), [5], prune_eps=-1.0)
    with pytest.raises(InvalidSpec):
        exact_law_dp(models["ssrw1"], SparseLaw.delta((0, 0)), 3)


def test_ladder_snapshots_match_single_runs(models, delta0):
    model = models["ssrw1"]
    u0 = delta0(1)
    ladder = exact_law_ladder(model, u0, [3, 7, 20], prune_eps=0.0)
    for law in ladder:
        single = exact_law_dp(model, u0, law.n, prune_eps=0.0)
        assert max_entry_diff(law, single) == 0.0


def test_conservation_with_pruning(models, delta0):
    for name in ("ssrw1", "ssrw2"):
        model = models[name]
        laws = exact_law_ladder(model, delta0(model.dim), [10, 100, 1000],
                                prune_eps=1e-10)
        for law in laws:
            law.validate(tol=1e-12)
            assert law.pruned_mass <= 1e-10


def test_support_cap_guard(delta0):
    with pytest.raises(SupportCapExceeded):
        exact_law_dp(ssrw_model(1), delta0(1), 500, prune_eps=0.0, max_cells=100)


def test_mean_harmonic_sum(delta0):
    n = 500
    law = exact_law_dp(right_shift_model(), delta0(1), n, prune_eps=0.0)
    mean, _ = law_moments(law)
    harmonic = math.fsum(1.0 / (j + 1) for j in range(1, n + 1))
    assert abs(mean[0] - harmonic) < 1e-12


def test_variance_bernoulli_sum(delta0):
    n = 10**4
    law = exact_law_dp(right_shift_model(), delta0(1), n, prune_eps=0.0)
    _, cov = law_moments(law)
    expected = math.fsum((1.0 / (j + 1)) * (1.0 - 1.0 / (j + 1))
                         for j in range(1, n + 1))
    assert abs(cov[0, 0] - expected) < 1e-9


def test_law_moments_ssrw1_n1(models, delta0):
    law = exact_law_dp(models["ssrw1"], delta0(1), 1)
    mean, cov = law_moments(law)
    assert abs(mean[0]) < 1e-15
    assert abs(cov[0, 0] - 0.5) < 1e-15


def test_law_moments_mass_guard():
    law = SparseLaw(entries={(0,): 0.9}, pruned_mass=0.1, n=5, dim=1)
    with pytest.raises(DomainError):
        law_moments(law)


def test_mgf_consistency_light(models, delta0):
    for name in ("right-shift", "ssrw1"):
        model = models[name]
        u0 = delta0(1)
        u0_mgf = lambda lam: u0.mgf(lam, model.embedding)
        for n in (10, 100):
            law = exact_law_dp(model, u0, n, prune_eps=0.0)
            for lam in np.linspace(-0.3, 0.3, 5):
                direct = law.mgf([lam])
                product = math.exp(mgf_zn(model, u0_mgf, [lam], n))
                assert abs(direct - product) / product < 1e-9


def test_cf_inversion_agreement(models, delta0):
    model = models["right-shift"]
    u0 = delta0(1)
    dp = exact_law_dp(model, u0, 100, prune_eps=0.0)
    cf = exact_law_cf(model, u0, 100, grid=256)
    assert max_entry_diff(dp, cf) < 1e-9
    assert abs(cf.total_mass() + cf.pruned_mass - 1.0) < 1e-10

    model = models["ssrw2"]
    u02 = delta0(2)
    dp = exact_law_dp(model, u02, 50, prune_eps=0.0)
    cf = exact_law_cf(model, u02, 50, grid=64)
    assert max_entry_diff(dp, cf) < 1e-9


def test_cf_inversion_n0(models, delta0):
    law = exact_law_cf(models["right-shift"], delta0(1), 0, grid=16)
    assert set(law.entries) == {(0,)}
    assert abs(law.entries[(0,)] - 1.0) < 1e-12


def test_cf_inversion_window_guard(models, delta0):
    with pytest.raises(WindowTooSmall):
        exact_law_cf(models["right-shift"], delta0(1), 100, grid=8)
    with pytest.raises(DomainError):
        exact_law_cf(ssrw_model(3), SparseLaw.delta((0, 0, 0)), 5, grid=8)


def test_sparse_law_validate():
    with pytest.raises(InvalidSpec):
        SparseLaw(entries={(0,): 0.5}, pruned_mass=0.0, n=0, dim=1).validate()
    with pytest.raises(InvalidSpec):
        SparseLaw(entries={(0,): 1.0}, pruned_mass=-0.1, n=0, dim=1).validate()
    with pytest.raises(InvalidSpec):
        SparseLaw(entries={(0,): -0.2, (1,): 1.2}, pruned_mass=0.0, n=0, dim=1).validate()
    SparseLaw.delta((0,)).validate()


def test_csv_emission_golden(delta0):
    law = exact_law_dp(right_shift_model(), delta0(1), 2)
    buf = io.StringIO()
    write_law_csv(law, buf)
    expected = (
        "c1,x1,prob\n"
        "0,0,0.33333333333333337\n"
        "1,1,0.5\n"
        "2,2,0.16666666666666666\n"
    )
    assert buf.getvalue() == expected
    buf2 = io.StringIO()
    write_law_csv(law, buf2)
    assert buf2.getvalue() == buf.getvalue()


def test_support_growth_under_pruning(models, delta0):
    laws = exact_law_ladder(models["ssrw1"], delta0(1), [10**5], prune_eps=1e-10)
    n = 10**5
    assert len(laws[0].entries) < 10 * math.log(n) ** 2
