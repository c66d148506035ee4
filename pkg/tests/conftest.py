from __future__ import annotations

import numpy as np
import pandas as pd
import pytest
from hypothesis import HealthCheck, settings

import frontier_rd as fr

settings.register_profile(
    "suite",
    max_examples=60,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")


def small_frame(n: int = 40, seed: int = 0) -> pd.DataFrame:
    """Tiny canonical settlement frame with two outcomes."""
    rng = np.random.default_rng(seed)
    population = rng.uniform(500, 12000, n)
    density = rng.uniform(50, 900, n)
    frame = pd.DataFrame(
        {
            "settlement_id": [f"V{i:04d}" for i in range(n)],
            "state_id": ["ST1" if i % 2 else "ST2" for i in range(n)],
            "district_id": [f"D{i % 5}" for i in range(n)],
            "population_2001": population,
            "area_2001": population / density,
            "density_2001": density,
            "nonag_male_share_2001": rng.uniform(0.3, 0.99, n),
            "literacy_rate_2001": rng.uniform(0.2, 0.9, n),
            "main_worker_rate_2001": rng.uniform(0.1, 0.6, n),
            "sc_share_2001": rng.uniform(0.0, 0.4, n),
            "st_share_2001": rng.uniform(0.0, 0.3, n),
            "ct_2001": rng.integers(0, 2, n),
            "statutory_2011": rng.integers(0, 2, n),
            "primary_schools": rng.poisson(5.0, n).astype(float),
            "bank_branches": rng.poisson(2.0, n).astype(float),
        }
    )
    return frame


@pytest.fixture
def tiny_dataset() -> fr.Dataset:
    return fr.dataset_from_frame(
        small_frame(), outcome_names=("primary_schools", "bank_branches")
    )
