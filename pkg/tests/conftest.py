import sys
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from chaosvae.data import load_schema

ROOT = Path(__file__).resolve().parents[1]
MEDICARE_SCHEMA = ROOT / "schemas" / "medicare.yaml"

PROVIDER_TYPES = ["Internal Medicine", "Family Practice", "Cardiology",
                  "Dermatology", "Ophthalmology", "Nurse Practitioner"]


def medicare_frame(n=8304, n_fraud=895, seed=0):
    """Random table with the Medicare Part B columns and fraud count."""
    rng = np.random.default_rng(seed)
    labels = np.zeros(n, dtype=int)
    labels[rng.choice(n, n_fraud, replace=False)] = 1
    srvc = rng.lognormal(4.0, 1.0, n).round()
    frame = pd.DataFrame({
        "npi": 1_000_000_000 + 37 * rng.permutation(n),
        "provider_type": rng.choice(PROVIDER_TYPES, n),
        "nppes_provider_gender": rng.choice(["M", "F"], n),
        "line_srvc_cnt": srvc,
        "bene_unique_cnt": np.maximum(1, (srvc * rng.uniform(0.2, 1.0, n)).round()),
        "bene_day_srvc_cnt": np.maximum(1, (srvc * rng.uniform(0.5, 1.0, n)).round()),
        "average_submitted_chrg_amnt": rng.gamma(2.0, 80.0, n).round(2) * (1 + labels),
        "average_medicare_payment_amt": rng.gamma(2.0, 30.0, n).round(2),
        "exclusion": labels,
    })
    return frame


@pytest.fixture(scope="session")
def medicare_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("medicare") / "medicare.csv"
    medicare_frame().to_csv(path, index=False)
    return path


@pytest.fixture(scope="session")
def medicare_schema():
    return load_schema(MEDICARE_SCHEMA)


@pytest.fixture
def toy_csv(tmp_path):
    path = tmp_path / "toy.csv"
    path.write_text("id,amount,gender,label\n"
                    "a,2,M,0\n"
                    "b,6,F,0\n"
                    "c,4,M,1\n")
    schema = tmp_path / "toy.yaml"
    schema.write_text("label: label\n"
                      "columns:\n"
                      "  - {name: id, kind: identifier}\n"
                      "  - {name: amount, kind: numerical}\n"
                      "  - {name: gender, kind: categorical}\n")
    return path, schema


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        terminalreporter.write_line(results[n])
