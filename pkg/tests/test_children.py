"""Offspring-law construction against independent enumeration oracles."""

import math

import numpy as np
import pytest

from cascade_lab import (
    JointPmf,
    SystemModel,
    VulnerabilityProfile,
    constant_profile,
)
from cascade_lab.children import (
    ChildrenPmf,
    SizeBiasedPmf,
    ZeroInternalDegreeError,
    build_children,
    check_vulnerability_scaling,
    children_distribution_fresh,
    children_distribution_infected,
    inter_cs_infection_prob,
    internal_vulnerability,
)
from cascade_lab.pmf import MarginalPmf, PmfError, marginal, mean_vector

from conftest import brute_force_children, random_model


class TestSizeBiased:
    def test_weights_proportional_to_degree(self):
        p = MarginalPmf(np.array([0, 1, 2, 3]), np.array([0.5, 0.15, 0.2, 0.15]))
        w = SizeBiasedPmf.from_marginal(p)
        assert w.support.tolist() == [1, 2, 3]
        assert w.mass == pytest.approx([0.15, 0.4, 0.45], abs=1e-12)

    def test_zero_mean_degree(self):
        with pytest.raises(ZeroInternalDegreeError):
            SizeBiasedPmf.from_marginal(MarginalPmf(np.array([0]), np.array([1.0])))


class TestInternalVulnerability:
    def test_constant_profile_gives_one(self):
        p = MarginalPmf(np.array([1, 2, 5]), np.array([0.2, 0.5, 0.3]))
        assert internal_vulnerability(p, constant_profile(1.0)) == pytest.approx(1.0)

    def test_point_mass_inverse_degree(self):
        p = MarginalPmf(np.array([2]), np.array([1.0]))
        phi = VulnerabilityProfile(kind="power-law", scale=1.0, exponent=1.0)
        assert internal_vulnerability(p, phi) == pytest.approx(0.5)

    def test_three_term_hand_sum(self):
        p = MarginalPmf(np.array([0, 1, 2, 3]), np.array([0.5, 0.15, 0.2, 0.15]))
        phi = VulnerabilityProfile(kind="power-law", scale=1.0, exponent=0.5)
        expected = 0.15 * 1.0 + 0.4 / math.sqrt(2.0) + 0.45 / math.sqrt(3.0)
        assert internal_vulnerability(p, phi) == pytest.approx(expected, abs=1e-12)


class TestInterCsInfection:
    def test_single_supporter_indicator(self):
        chi = MarginalPmf(np.array([1, 2, 3]), np.array([0.4, 0.35, 0.25]))
        eta = {1: 1.0, 2: 0.0, 3: 0.0}
        assert inter_cs_infection_prob(chi, eta) == pytest.approx(0.4)

    def test_constant_eta_is_one(self):
        chi = MarginalPmf(np.array([1, 4]), np.array([0.5, 0.5]))
        assert inter_cs_infection_prob(chi, lambda d: 1.0) == pytest.approx(1.0)

    def test_two_term_sum(self):
        chi = MarginalPmf(np.array([1, 2]), np.array([0.3, 0.7]))
        assert inter_cs_infection_prob(chi, {1: 1.0, 2: 0.5}) == pytest.approx(0.65)

    def test_rejects_degree_zero_support(self):
        chi = MarginalPmf(np.array([0, 1]), np.array([0.5, 0.5]))
        with pytest.raises(PmfError):
            inter_cs_infection_prob(chi, lambda d: 1.0)


class TestChildrenFresh:
    def test_identity_thinning_point_mass(self):
        model = SystemModel(
            degree_dists=(
                JointPmf.from_dict({(2, 1): 1.0}),
                JointPmf.from_dict({(0, 1): 1.0}),
            ),
            infection=[[np.nan, 1.0], [1.0, np.nan]],
            vulnerability=(constant_profile(1.0), constant_profile(1.0)),
            internal_degree_floor=False,
        )
        h = children_distribution_fresh(model, 0)
        # Type order (cs0 fresh, cs1 fresh, cs0 infected, cs1 infected):
        # both internal neighbors become infected-type children.
        assert h.as_dict() == {(0, 1, 2, 0): 1.0}

    def test_example1_children_means(self, model_p1):
        h = children_distribution_fresh(model_p1, 0)
        means = h.mean()
        assert means[1] == pytest.approx(0.35, abs=1e-9)
        assert means[2] == pytest.approx(1.00, abs=1e-9)

    def test_two_point_model_exhaustive(self):
        model = SystemModel(
            degree_dists=(
                JointPmf.from_dict({(1, 1): 0.5, (2, 0): 0.5}),
                JointPmf.from_dict({(0, 1): 1.0}),
            ),
            infection=[[np.nan, 0.5], [0.5, np.nan]],
            vulnerability=(constant_profile(1.0), constant_profile(1.0)),
            internal_degree_floor=False,
        )
        h = children_distribution_fresh(model, 0)
        assert h.as_dict() == pytest.approx(
            {(0, 0, 1, 0): 0.25, (0, 1, 1, 0): 0.25, (0, 0, 2, 0): 0.5}
        )


class TestChildrenInfected:
    def test_example1_infected_means(self, model_p1):
        h = children_distribution_infected(model_p1, 0)
        means = h.mean()
        assert means[2] == pytest.approx(0.50, abs=1e-9)
        assert means[1] == pytest.approx(0.35, abs=1e-9)

    def test_degree_one_no_external(self):
        model = SystemModel(
            degree_dists=(
                JointPmf.from_dict({(1, 0): 1.0}),
                JointPmf.from_dict({(0, 1): 1.0}),
            ),
            infection=[[np.nan, 1.0], [1.0, np.nan]],
            vulnerability=(constant_profile(1.0), constant_profile(1.0)),
        )
        h = children_distribution_infected(model, 0)
        assert h.as_dict() == {(0, 0, 0, 0): 1.0}

    def test_internal_deficiency_maps_to_zero(self):
        # Floor lifted: internal degree 0 loses nothing when the parent slot
        # is removed.
        model = SystemModel(
            degree_dists=(
                JointPmf.from_dict({(0, 1): 0.5, (2, 0): 0.5}),
                JointPmf.from_dict({(1, 0): 1.0}),
            ),
            infection=[[np.nan, 1.0], [1.0, np.nan]],
            vulnerability=(constant_profile(1.0), constant_profile(1.0)),
            internal_degree_floor=False,
        )
        h = children_distribution_infected(model, 0)
        assert h.as_dict() == pytest.approx({(0, 1, 0, 0): 0.5, (0, 0, 1, 0): 0.5})


class TestZeroPattern:
    def test_forbidden_coordinate_rejected(self):
        with pytest.raises(PmfError):
            ChildrenPmf(
                origin_type=0,
                n_systems=2,
                support=np.array([[1, 0, 0, 0]]),
                mass=np.array([1.0]),
            )

    def test_all_built_children_respect_pattern(self):
        rng = np.random.default_rng(19)
        for _ in range(10):
            model = random_model(rng, dependent=True)
            n = model.n_systems
            for h in build_children(model):
                allowed = {j for j in range(n) if j != h.origin_cs} | {n + h.origin_cs}
                forbidden = [j for j in range(2 * n) if j not in allowed]
                assert np.all(h.support[:, forbidden] == 0)


class TestOracleEquivalence:
    def test_matches_exhaustive_enumeration(self):
        rng = np.random.default_rng(5)
        for trial in range(25):
            model = random_model(rng, max_degree=3, dependent=bool(trial % 2))
            cs = int(rng.integers(0, model.n_systems))
            for drop, builder in [
                (False, children_distribution_fresh),
                (True, children_distribution_infected),
            ]:
                expected = brute_force_children(model, cs, drop_internal=drop)
                got = builder(model, cs).as_dict()
                assert set(got) == set(expected)
                for key, value in expected.items():
                    assert got[key] == pytest.approx(value, abs=1e-12)

    def test_thinning_mean_identities(self):
        rng = np.random.default_rng(23)
        from cascade_lab.children import thinning_probabilities

        for _ in range(20):
            model = random_model(rng, dependent=True)
            n = model.n_systems
            for cs in range(n):
                probs = thinning_probabilities(model, cs)
                means = mean_vector(model.degree_dists[cs])
                fresh = children_distribution_fresh(model, cs).mean()
                for j in range(n):
                    target = n + cs if j == cs else j
                    assert fresh[target] == pytest.approx(probs[j] * means[j], abs=1e-10)
                infected = children_distribution_infected(model, cs).mean()
                internal = marginal(model.degree_dists[cs], cs)
                drop_mean = sum(
                    m * max(int(d) - 1, 0) for d, m in zip(internal.support, internal.mass)
                )
                assert infected[n + cs] == pytest.approx(probs[cs] * drop_mean, abs=1e-10)

    def test_floor_and_unit_probabilities_shift_mean_by_one(self):
        rng = np.random.default_rng(31)
        for _ in range(10):
            base = random_model(rng, n_systems=2)
            model = SystemModel(
                degree_dists=base.degree_dists,
                infection=[[np.nan, 1.0], [1.0, np.nan]],
                vulnerability=(constant_profile(1.0), constant_profile(1.0)),
                internal_degree_floor=True,
            )
            for cs in range(2):
                internal_mean = mean_vector(model.degree_dists[cs])[cs]
                infected = children_distribution_infected(model, cs).mean()
                assert infected[2 + cs] == pytest.approx(internal_mean - 1.0, abs=1e-10)


class TestSupportGuard:
    def test_support_explosion_raises(self, monkeypatch, model_p1):
        import cascade_lab.children as children_mod

        monkeypatch.setattr(children_mod, "MAX_SUPPORT_POINTS", 5)
        with pytest.raises(children_mod.SupportExplosionError):
            children_distribution_fresh(model_p1, 0)


class TestVulnerabilityScaling:
    def test_square_root_profile_holds(self):
        phi = VulnerabilityProfile(kind="power-law", scale=1.0, exponent=0.5)
        assert check_vulnerability_scaling(phi, 100).holds

    def test_inverse_square_violates(self):
        phi = VulnerabilityProfile(kind="power-law", scale=1.0, exponent=2.0)
        result = check_vulnerability_scaling(phi, 10)
        assert not result.holds
        assert result.violated_at == 1

    def test_constant_profile_holds(self):
        assert check_vulnerability_scaling(constant_profile(0.3), 50).holds
