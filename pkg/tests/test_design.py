from __future__ import annotations

import math

import numpy as np
import pandas as pd
import pytest
from hypothesis import given
from hypothesis import strategies as st
from sklearn.base import clone

import frontier_rd as fr
from frontier_rd.design import SOURCE_COLUMNS

from conftest import small_frame

finite = st.floats(
    min_value=-50.0, max_value=50.0, allow_nan=False, allow_infinity=False
)


class TestNormalize:
    def test_hand_values(self):
        r_p, r_d, r_n = fr.normalize(10000.0, 200.0, 0.75)
        assert r_p == pytest.approx(1.0)
        assert r_d == pytest.approx(-0.5)
        assert r_n == pytest.approx(0.0)

    def test_vectorized(self):
        r_p, _, _ = fr.normalize(np.array([2500.0, 5000.0]), np.array([400.0, 400.0]), np.array([0.75, 0.75]))
        assert np.allclose(r_p, [-0.5, 0.0])

    def test_nonfinite_names_field(self):
        with pytest.raises(fr.InputError, match="density"):
            fr.normalize(5000.0, float("nan"), 0.75)

    def test_custom_cutoffs(self):
        cfg = fr.DesignConfig(population_cutoff=1000.0)
        r_p, _, _ = fr.normalize(1500.0, 400.0, 0.75, cfg)
        assert r_p == pytest.approx(0.5)


class TestEligibility:
    def test_boundary_is_inclusive_by_default(self):
        z_p, z_d, z_n, z = fr.eligibility(0.0, 0.0, 0.0)
        assert (z_p, z_d, z_n, z) == (1, 1, 1, 1)

    def test_exclusive_mode(self):
        cfg = fr.DesignConfig(inclusive=False)
        assert fr.eligibility(0.0, 0.1, 0.1, cfg)[3] == 0

    def test_conjunction_truth_table(self):
        for bits in range(8):
            r = [0.2 if bits & (1 << j) else -0.2 for j in range(3)]
            z_p, z_d, z_n, z = fr.eligibility(*r)
            assert z == int(z_p and z_d and z_n)
            assert z == int(bits == 7)

    def test_vectorized_matches_scalar(self):
        rng = np.random.default_rng(0)
        r = rng.normal(size=(3, 50))
        vec = fr.eligibility(r[0], r[1], r[2])[3]
        onebyone = [fr.eligibility(a, b, c)[3] for a, b, c in r.T]
        assert list(vec) == onebyone


class TestFrontierDistance:
    def test_against_direct_formula(self):
        # plain (unshifted) evaluation is stable at moderate values
        r, tau = (0.12, -0.3, 0.5), 0.07
        direct = -tau * math.log(sum(math.exp(-x / tau) for x in r))
        assert fr.frontier_distance(*r, tau) == pytest.approx(direct, abs=1e-12)

    def test_huge_negatives_do_not_overflow(self):
        val = fr.frontier_distance(-1e6, -2e6, 3.0, 0.05)
        assert math.isfinite(val)
        assert val == pytest.approx(-2e6, rel=1e-9)

    def test_tau_must_be_positive(self):
        with pytest.raises(fr.ConfigError):
            fr.frontier_distance(0.1, 0.1, 0.1, 0.0)
        with pytest.raises(fr.ConfigError):
            fr.frontier_distance(0.1, 0.1, 0.1, -1.0)

    @given(finite, finite, finite, st.floats(min_value=1e-3, max_value=2.0))
    def test_bounds(self, a, b, c, tau):
        m = min(a, b, c)
        val = fr.frontier_distance(a, b, c, tau)
        assert m - tau * math.log(3.0) - 1e-9 <= val <= m + 1e-9

    @given(finite, finite, finite, st.floats(min_value=1e-3, max_value=2.0))
    def test_permutation_invariance(self, a, b, c, tau):
        assert fr.frontier_distance(a, b, c, tau) == pytest.approx(
            fr.frontier_distance(c, a, b, tau), abs=1e-12
        )

    @given(finite, finite, finite, st.floats(min_value=1e-3, max_value=1.0), finite)
    def test_translation(self, a, b, c, tau, shift):
        lhs = fr.frontier_distance(a + shift, b + shift, c + shift, tau)
        rhs = fr.frontier_distance(a, b, c, tau) + shift
        assert lhs == pytest.approx(rhs, abs=1e-9)

    @given(
        finite,
        finite,
        finite,
        st.floats(min_value=1e-3, max_value=1.0),
        st.floats(min_value=0.0, max_value=5.0),
    )
    def test_monotone_in_each_argument(self, a, b, c, tau, bump):
        base = fr.frontier_distance(a, b, c, tau)
        assert fr.frontier_distance(a + bump, b, c, tau) >= base - 1e-9
        assert fr.frontier_distance(a, b + bump, c, tau) >= base - 1e-9
        assert fr.frontier_distance(a, b, c + bump, tau) >= base - 1e-9

    @given(finite, finite, finite)
    def test_small_tau_converges_to_hard_min(self, a, b, c):
        tau = 1e-4
        assert fr.frontier_distance(a, b, c, tau) == pytest.approx(
            fr.hard_min(a, b, c), abs=tau * math.log(3.0) + 1e-12
        )

    def test_hard_min(self):
        assert fr.hard_min(0.3, -0.2, 0.1) == -0.2


class TestLocalFilter:
    def test_matches_bruteforce(self):
        rng = np.random.default_rng(1)
        pop = rng.uniform(0, 20000, 500)
        den = rng.uniform(0, 1500, 500)
        non = rng.uniform(0, 1, 500)
        got = fr.local_filter(pop, den, non)
        want = [
            abs(p - 5000) <= 5000 and abs(d - 400) <= 400 and abs(s - 0.75) <= 0.2
            for p, d, s in zip(pop, den, non)
        ]
        assert list(got) == want

    def test_band_edges_inclusive(self):
        assert fr.local_filter(10000.0, 400.0, 0.55) is True
        assert fr.local_filter(10000.1, 400.0, 0.75) is False


class TestBuildDesign:
    def test_columns_and_order(self, tiny_dataset):
        design = fr.build_design(tiny_dataset)
        assert list(design.columns) == ["settlement_id", *fr.DESIGN_COLUMNS]
        ids = design["settlement_id"].tolist()
        assert ids == sorted(ids)

    def test_z_is_conjunction(self, tiny_dataset):
        design = fr.build_design(tiny_dataset)
        assert (design["z"] == (design["z_p"] & design["z_d"] & design["z_n"])).all()

    def test_local_flag_matches_filter(self, tiny_dataset):
        design = fr.build_design(tiny_dataset).sort_values("settlement_id")
        frame = tiny_dataset.frame.sort_values("settlement_id")
        want = fr.local_filter(
            frame["population_2001"].to_numpy(),
            frame["density_2001"].to_numpy(),
            frame["nonag_male_share_2001"].to_numpy(),
        )
        assert np.array_equal(design["in_local_sample"].to_numpy(), want)

    def test_hardmin_mode(self, tiny_dataset):
        cfg = fr.DesignConfig(frontier_mode="hardmin")
        design = fr.build_design(tiny_dataset, cfg)
        r = design[["r_p", "r_d", "r_n"]].to_numpy()
        assert np.allclose(design["frontier"], r.min(axis=1))

    def test_softmin_frontier_bounds(self, tiny_dataset):
        cfg = fr.DesignConfig(tau=0.05)
        design = fr.build_design(tiny_dataset, cfg)
        r = design[["r_p", "r_d", "r_n"]].to_numpy()
        m = r.min(axis=1)
        assert (design["frontier"] <= m + 1e-12).all()
        assert (design["frontier"] >= m - 0.05 * math.log(3.0) - 1e-12).all()

    def test_nonfinite_rows_logged(self):
        frame = small_frame(5)
        frame.loc[2, "density_2001"] = np.nan
        design = fr.build_design(frame)
        assert len(design) == 4
        assert design.attrs["exclusions"] == [("V0002", "non-finite value: density_2001")]

    def test_design_rows_roundtrip(self, tiny_dataset):
        design = fr.build_design(tiny_dataset)
        rows = fr.design_rows(design.head(3))
        assert rows[0].settlement_id == design.loc[0, "settlement_id"]
        assert rows[0].z in (0, 1)

    def test_write_design_csv_interface(self, tmp_path, tiny_dataset):
        path = tmp_path / "design.csv"
        fr.write_design_csv(fr.build_design(tiny_dataset), path)
        header = path.read_text().splitlines()[0]
        assert header == "r_p,r_d,r_n,z_p,z_d,z_n,z,frontier,in_local_sample"


class TestDesignConfig:
    def test_rejects_bad_values(self):
        with pytest.raises(fr.ConfigError):
            fr.DesignConfig(tau=0.0)
        with pytest.raises(fr.ConfigError):
            fr.DesignConfig(population_cutoff=-5.0)
        with pytest.raises(fr.ConfigError):
            fr.DesignConfig(frontier_mode="mean")

    def test_file_round_trip(self, tmp_path):
        cfg = fr.DesignConfig(tau=0.1, nonag_band=0.25, inclusive=False)
        path = tmp_path / "design.cfg"
        cfg.to_file(path)
        assert fr.DesignConfig.from_file(path) == cfg

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "design.cfg"
        path.write_text("tau = 0.05\nmystery = 1\n")
        with pytest.raises(fr.ConfigError, match="mystery"):
            fr.DesignConfig.from_file(path)


class TestFrontierDesignTransformer:
    def test_transform_preserves_row_order(self, tiny_dataset):
        frame = tiny_dataset.frame
        est = fr.FrontierDesign().fit(frame)
        out = est.transform(frame)
        assert list(out.columns) == list(fr.DESIGN_COLUMNS)
        assert len(out) == len(frame)
        r_p = frame["population_2001"] / 5000.0 - 1.0
        assert np.allclose(out["r_p"], r_p)

    def test_sklearn_contract(self):
        est = fr.FrontierDesign(tau=0.1)
        cloned = clone(est)
        assert cloned.get_params()["tau"] == 0.1
        assert list(est.get_feature_names_out()) == list(fr.DESIGN_COLUMNS)

    def test_fit_validates_columns(self):
        with pytest.raises(fr.InputError, match="missing"):
            fr.FrontierDesign().fit(pd.DataFrame({"population_2001": [1.0]}))

    def test_transform_requires_fit(self, tiny_dataset):
        with pytest.raises(fr.InputError, match="not fitted"):
            fr.FrontierDesign().transform(tiny_dataset.frame)

    def test_invalid_params_surface_at_fit(self, tiny_dataset):
        with pytest.raises(fr.ConfigError):
            fr.FrontierDesign(tau=-1.0).fit(tiny_dataset.frame)

    def test_matches_build_design(self, tiny_dataset):
        out = fr.FrontierDesign().fit_transform(tiny_dataset.frame)
        design = fr.build_design(tiny_dataset).set_index("settlement_id")
        merged = out.assign(settlement_id=tiny_dataset.frame["settlement_id"]).set_index(
            "settlement_id"
        )
        for col in fr.DESIGN_COLUMNS:
            assert np.allclose(
                merged[col].astype(float).sort_index(),
                design[col].astype(float).sort_index(),
            )


class TestAnalysisFrame:
    def test_adds_design_and_powers(self, tiny_dataset):
        frame = fr.analysis_frame(tiny_dataset, degree=2)
        for col in SOURCE_COLUMNS:
            assert col in frame.columns
        for col in fr.DESIGN_COLUMNS:
            assert col in frame.columns
        assert np.allclose(frame["r_p2"], frame["r_p"] ** 2)

    def test_default_controls(self):
        assert fr.default_controls() == (
            "r_p",
            "r_d",
            "r_n",
            "literacy_rate_2001",
            "sc_share_2001",
            "st_share_2001",
        )
        assert "r_d3" in fr.default_controls(3)

    def test_degree_validated(self, tiny_dataset):
        with pytest.raises(fr.ConfigError):
            fr.analysis_frame(tiny_dataset, degree=0)
