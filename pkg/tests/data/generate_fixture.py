"""Regenerate the bundled CSV fixture and its pinned golden report.

Run from the repository root:

    python tests/data/generate_fixture.py

The CSV is a small synthetic mediation dataset (two real mediators, six
inert ones, one covariate, a few missing cells) used by the CLI tests;
the golden report pins the exact analyze output for the flags below.
"""

from pathlib import Path

import numpy as np
import pandas as pd

HERE = Path(__file__).parent

ANALYZE_ARGS = [
    "analyze",
    "--input", str(HERE / "golden_input.csv"),
    "--exposure", "dose",
    "--outcome", "score",
    "--covariates", "age",
    "--mediator-prefix", "marker_",
    "--pathb", "pls",
    "--q", "0.3",
    "--seed", "7",
    "--bootstrap-reps", "50",
    "--output", str(HERE / "golden_report.json"),
]


def make_csv() -> None:
    rng = np.random.default_rng(2024)
    n = 160
    p = 12
    dose = rng.standard_normal(n)
    age = 0.4 * dose + rng.standard_normal(n)
    markers = 0.2 * age[:, None] + rng.standard_normal((n, p))
    true = [0, 3, 5, 8]
    for j, load in zip(true, (1.2, 1.0, 1.1, 0.9)):
        markers[:, j] += load * dose
    score = (
        markers[:, true] @ np.array([1.2, 0.9, 1.0, 1.1]) + 0.5 * dose + 0.3 * age
        + 0.6 * rng.standard_normal(n)
    )
    frame = pd.DataFrame(
        {"dose": dose, "age": age, "score": score}
        | {f"marker_{j + 1}": markers[:, j] for j in range(p)}
    ).round(6)
    # a few missing cells so the drop-and-report path is exercised
    frame.loc[3, "age"] = np.nan
    frame.loc[17, "marker_2"] = np.nan
    frame.loc[44, "score"] = np.nan
    frame.to_csv(HERE / "golden_input.csv", index=False, na_rep="NA")


if __name__ == "__main__":
    from knockmed.cli import main

    make_csv()
    status = main(ANALYZE_ARGS)
    raise SystemExit(status)
