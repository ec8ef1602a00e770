"""Fine-grid Brownian oracle for constants with no closed form used here.

The constants (E[Tau], E[Sigma ^ Tau], E[sup|B|^2], ...) are estimated once on
a fine grid with a registered seed and stored in ``data/oracle_constants.json``
together with the seed, grid size, sample count and standard errors.
"""

from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path

import numpy as np

from .montecarlo import SeedSpec, estimate_many
from .wiener import sample_brownian

ORACLE_SEED = 20051117
ORACLE_STREAM = 7
ORACLE_M = 100_000
ORACLE_SAMPLES = 100_000

QUANTITIES = (
    "E_sigma",         # E[Sigma], argmax time of B
    "E_tau",           # E[Tau], argmax time of |B|
    "E_min_sigma_tau",  # E[Sigma ^ Tau]
    "E_signed_min",    # E[sign(B_Tau) (Sigma ^ Tau)]
    "E_max_sq",        # E[(max B)^2]
    "E_supnorm_sq",    # E[(sup |B|)^2]
)

FIXTURE_PATH = Path(__file__).parent / "data" / "oracle_constants.json"


def oracle_sample(rng, m=ORACLE_M):
    v = sample_brownian(1.0, 1.0, m, rng).values
    ks = int(np.argmax(v))
    kt = int(np.argmax(np.abs(v)))
    s, t = ks / m, kt / m
    sign = -1.0 if v[kt] < 0 else 1.0
    return (s, t, min(s, t), sign * min(s, t), v[ks] ** 2, v[kt] ** 2)


def _digest(constants) -> str:
    blob = json.dumps(constants, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()


def run_oracle(m=ORACLE_M, samples=ORACLE_SAMPLES, seed=ORACLE_SEED,
               stream=ORACLE_STREAM, workers=None) -> dict:
    reports = estimate_many(lambda rng: oracle_sample(rng, m), samples,
                            SeedSpec(seed, stream), workers)
    constants = {
        name: {"value": r.mean, "stderr": r.stderr}
        for name, r in zip(QUANTITIES, reports)
    }
    return {
        "seed": seed,
        "stream": stream,
        "m": m,
        "samples": samples,
        "sigma": 1.0,
        "constants": constants,
        "sha256": _digest(constants),
    }


def write_fixtures(data: dict, path=FIXTURE_PATH) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


class FixtureError(ValueError):
    pass


def validate_fixtures(data: dict) -> None:
    """Structural and plausibility checks; raises FixtureError naming the failed check."""
    for key in ("seed", "m", "samples", "constants", "sha256"):
        if key not in data:
            raise FixtureError(f"fixtures.missing_key: {key}")
    constants = data["constants"]
    for name in QUANTITIES:
        entry = constants.get(name)
        if entry is None:
            raise FixtureError(f"fixtures.missing_constant: {name}")
        if not (math.isfinite(entry["value"]) and entry["stderr"] > 0):
            raise FixtureError(f"fixtures.non_finite: {name}")
    if _digest(constants) != data["sha256"]:
        raise FixtureError("fixtures.digest_mismatch")
    c = {k: v["value"] for k, v in constants.items()}
    se = constants["E_sigma"]["stderr"]
    if abs(c["E_sigma"] - 0.5) > 5 * se:
        raise FixtureError("fixtures.sigma_symmetry")
    if not c["E_min_sigma_tau"] <= min(c["E_sigma"], c["E_tau"]):
        raise FixtureError("fixtures.min_ordering")
    if not 0.5 < c["E_tau"] < 1.0:
        raise FixtureError("fixtures.tau_range")
    if not c["E_supnorm_sq"] >= c["E_max_sq"]:
        raise FixtureError("fixtures.supnorm_ordering")


def load_fixtures(path=None) -> dict:
    path = FIXTURE_PATH if path is None else Path(path)
    data = json.loads(Path(path).read_text())
    validate_fixtures(data)
    return data


def constant(name: str, path=None):
    """(value, stderr) of a registered oracle constant."""
    entry = load_fixtures(path)["constants"][name]
    return entry["value"], entry["stderr"]
