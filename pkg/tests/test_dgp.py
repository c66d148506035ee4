from __future__ import annotations

import numpy as np
import pandas as pd
import pytest

import frontier_rd as fr

AT_CUTOFF = dict(
    log_population_mean=8.517,
    log_density_mean=5.991,
    nonag_logit_mean=1.0986,
)


class TestDgpParams:
    @pytest.mark.parametrize(
        "kwargs",
        [
            {"n_settlements": 5},
            {"n_districts": 1},
            {"n_districts": 10_000, "n_settlements": 100},
            {"n_states": 0},
            {"n_states": 500, "n_districts": 100},
            {"log_population_sd": 0.0},
            {"compliance_jump": -0.1},
            {"takeup_level": 0.8, "compliance_jump": 0.5},
            {"takeup_cluster_sd": -1.0},
            {"outcome_noise_sd": -0.5},
            {"cluster_rho": 1.0},
            {"endogeneity": 1.5},
            {"density_jump_at_cutoff": 0.0},
            {"manipulation_window": 1.0},
            {"late": {}, "direct_effect": {}},
            {"late": {"bad name": 1.0}},
        ],
    )
    def test_invalid_params_rejected(self, kwargs):
        with pytest.raises(fr.ConfigError):
            fr.DgpParams(**kwargs)

    def test_from_mapping_parses_dotted_outcomes(self):
        params = fr.DgpParams.from_mapping(
            {
                "n_settlements": "400",
                "late.schools": "1.5",
                "late.banks": "0.5",
                "direct_effect.schools": "0.2",
                "round_outcomes": "true",
            }
        )
        assert params.n_settlements == 400
        assert params.late == {"schools": 1.5, "banks": 0.5}
        assert params.direct_effect == {"schools": 0.2}
        assert params.round_outcomes is True

    def test_from_mapping_rejects_unknown_key(self):
        with pytest.raises(fr.ConfigError, match="unknown dgp"):
            fr.DgpParams.from_mapping({"gravity": "9.8"})

    def test_from_mapping_rejects_bad_value(self):
        with pytest.raises(fr.ConfigError, match="bad value"):
            fr.DgpParams.from_mapping({"n_settlements": "many"})

    def test_from_file(self, tmp_path):
        path = tmp_path / "dgp.cfg"
        path.write_text("n_settlements = 500\nseed = 3\nlate.schools = 1.0\n")
        params = fr.DgpParams.from_file(path)
        assert params.n_settlements == 500
        assert params.seed == 3
        assert params.late == {"schools": 1.0}

    def test_outcome_names_sorted_union(self):
        params = fr.DgpParams(
            late={"b_thing": 1.0}, direct_effect={"a_thing": 0.1, "b_thing": 0.0}
        )
        assert params.outcome_names() == ("a_thing", "b_thing")

    def test_bundled_config_loads(self):
        # simulation configs carry run-level keys the CLI strips first
        kv = fr.configio.read_kv("sample_data/dgp_small.cfg")
        kv.pop("reps", None)
        kv.pop("reference_first_stage_f", None)
        params = fr.DgpParams.from_mapping(kv)
        assert params.n_settlements >= 10


class TestGenerate:
    def test_deterministic_given_seed(self):
        params = fr.DgpParams(n_settlements=300, seed=12)
        a = fr.generate(params).frame
        b = fr.generate(params).frame
        pd.testing.assert_frame_equal(a, b)

    def test_different_seed_differs(self):
        a = fr.generate(fr.DgpParams(n_settlements=300, seed=1)).frame
        b = fr.generate(fr.DgpParams(n_settlements=300, seed=2)).frame
        assert not a["population_2001"].equals(b["population_2001"])

    def test_structural_identities(self):
        data = fr.generate(fr.DgpParams(n_settlements=500, seed=4))
        frame = data.frame
        assert len(frame) == 500
        assert frame["settlement_id"].is_unique
        np.testing.assert_allclose(
            frame["area_2001"], frame["population_2001"] / frame["density_2001"]
        )
        z = (
            (frame["population_2001"] >= 5000)
            & (frame["density_2001"] >= 400)
            & (frame["nonag_male_share_2001"] >= 0.75)
        ).astype(int)
        assert (frame["ct_2001"] == z).all()
        assert set(frame["statutory_2011"].unique()) <= {0, 1}
        assert data.outcome_names == ("amenity_count",)

    def test_compliance_jump_recovered(self):
        params = fr.DgpParams(
            n_settlements=20000,
            takeup_level=0.0,
            takeup_cluster_sd=0.0,
            compliance_jump=0.3,
            seed=1,
            **AT_CUTOFF,
        )
        frame = fr.generate(params).frame
        fit = fr.ols(
            fr.RegressionSpec(outcome="statutory_2011", controls=("ct_2001",)), frame
        )
        coef, se = fit.coefficients["ct_2001"], fit.se["ct_2001"]
        assert abs(coef - 0.3) < 4 * se

    def test_round_outcomes_are_counts(self):
        params = fr.DgpParams(n_settlements=400, round_outcomes=True, seed=6)
        y = fr.generate(params).frame["amenity_count"]
        assert (y >= 0).all()
        np.testing.assert_array_equal(y, y.round())

    def test_direct_effect_only_outcome_generated(self):
        params = fr.DgpParams(
            n_settlements=300, late={}, direct_effect={"spillover": 0.4}, seed=8
        )
        data = fr.generate(params)
        assert "spillover" in data.frame.columns
        assert data.outcome_names == ("spillover",)

    def test_manipulation_creates_detectable_bunching(self):
        params = fr.DgpParams(
            n_settlements=20000, density_jump_at_cutoff=2.0, seed=3, **AT_CUTOFF
        )
        r_p = fr.generate(params).frame["population_2001"].to_numpy() / 5000.0 - 1.0
        res = fr.mccrary_test(r_p)
        assert res.log_diff > 0.3
        assert res.pvalue < 0.001

    def test_manipulation_away_from_cutoff_flips_sign(self):
        params = fr.DgpParams(
            n_settlements=20000, density_jump_at_cutoff=0.5, seed=3, **AT_CUTOFF
        )
        r_p = fr.generate(params).frame["population_2001"].to_numpy() / 5000.0 - 1.0
        res = fr.mccrary_test(r_p)
        assert res.log_diff < -0.3
        assert res.pvalue < 0.001

    def test_clean_generator_passes_density_test(self):
        params = fr.DgpParams(n_settlements=20000, seed=3, **AT_CUTOFF)
        r_p = fr.generate(params).frame["population_2001"].to_numpy() / 5000.0 - 1.0
        assert fr.mccrary_test(r_p).pvalue > 0.05

    def test_endogeneity_biases_ols_not_tsls(self):
        params = fr.DgpParams(
            n_settlements=20000,
            n_districts=300,
            endogeneity=0.5,
            compliance_jump=0.4,
            takeup_level=0.3,
            outcome_noise_sd=0.5,
            seed=5,
            **AT_CUTOFF,
        )
        frame = fr.analysis_frame(fr.generate(params))
        iv = fr.tsls(fr.base_spec("amenity_count", local=False), frame)
        ls = fr.ols(
            fr.RegressionSpec(
                outcome="amenity_count",
                controls=("statutory_2011", *fr.default_controls()),
                fixed_effect="district_id",
                cluster="district_id",
            ),
            frame,
        )
        truth = params.late["amenity_count"]
        iv_est = iv.coefficients["statutory_2011"]
        assert abs(iv_est - truth) < 4 * iv.se["statutory_2011"]
        assert ls.coefficients["statutory_2011"] - truth > 0.2


class TestReplicate:
    def small_params(self):
        return fr.DgpParams(
            n_settlements=2000,
            n_districts=80,
            compliance_jump=0.4,
            takeup_level=0.3,
            outcome_noise_sd=0.5,
            seed=11,
            **AT_CUTOFF,
        )

    def test_summary_fields(self):
        res = fr.replicate(self.small_params(), 8)
        assert res.n_reps == 8
        assert res.n_failed == 0
        assert len(res.records) == 8
        assert res.truth == 2.0
        assert np.isfinite(res.mean_estimate)
        assert 0.0 <= res.coverage <= 1.0
        assert res.bias == pytest.approx(res.mean_estimate - res.truth, rel=1e-12)
        assert list(res.records["rep"]) == list(range(8))

    def test_parallel_matches_serial(self):
        serial = fr.replicate(self.small_params(), 6, n_jobs=1)
        parallel = fr.replicate(self.small_params(), 6, n_jobs=2)
        pd.testing.assert_frame_equal(serial.records, parallel.records)

    def test_unknown_outcome_rejected(self):
        with pytest.raises(fr.ConfigError, match="unknown outcome"):
            fr.replicate(self.small_params(), 2, outcome="nope")

    def test_n_reps_validated(self):
        with pytest.raises(fr.ConfigError, match="n_reps"):
            fr.replicate(self.small_params(), 0)

    def test_to_dict_keys(self):
        d = fr.replicate(self.small_params(), 3).to_dict()
        assert d["n_reps"] == 3
        assert "records" not in d
        assert d["mean_f_stat"] > 0
