"""JSON specifications for laws, decorations, shifts, and verify targets."""

from __future__ import annotations

import json
import math
import os
from typing import Optional

from .branching import MeasureSampler
from .errors import ConfigError
from .martingale import ShiftSampler, constant_shift, sample_S
from .point_measure import PointMeasure
from .poisson import DecorationLaw, cox_sampler, normalize_decoration, sdppp_sampler
from .reproduction import (
    BinaryDeterministic,
    BinaryGaussian,
    PoissonGaussian,
    ReproductionLaw,
)


def load_json_arg(value: str) -> dict:
    """Parse an inline JSON object or read it from a file path."""
    text = value.strip()
    if not text.startswith("{"):
        if not os.path.exists(text):
            raise ConfigError(f"no such config file: {text}")
        with open(text) as fh:
            text = fh.read()
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise ConfigError("expected a JSON object")
    return obj


def law_from_obj(obj: dict) -> ReproductionLaw:
    try:
        family = obj["family"]
    except (KeyError, TypeError) as exc:
        raise ConfigError("law spec needs a 'family' field") from exc
    try:
        if family == "binary_gaussian":
            return BinaryGaussian(mu=float(obj["mu"]), sigma=float(obj["sigma"]))
        if family == "poisson_gaussian":
            return PoissonGaussian(
                m=float(obj["m"]), mu=float(obj["mu"]), sigma=float(obj["sigma"])
            )
        if family == "binary_deterministic":
            return BinaryDeterministic(a=float(obj["a"]), b=float(obj["b"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad parameters for family {family!r}: {exc}") from exc
    raise ConfigError(f"unknown law family {family!r}")


def law_to_obj(law: ReproductionLaw) -> dict:
    if isinstance(law, BinaryGaussian):
        return {"family": "binary_gaussian", "mu": law.mu, "sigma": law.sigma}
    if isinstance(law, PoissonGaussian):
        return {
            "family": "poisson_gaussian", "m": law.m, "mu": law.mu, "sigma": law.sigma
        }
    return {"family": "binary_deterministic", "a": law.a, "b": law.b}


def decoration_from_obj(obj: dict) -> DecorationLaw:
    try:
        mixture = obj["mixture"]
        pairs = [(float(c["p"]), PointMeasure(c["atoms"])) for c in mixture]
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad decoration spec: {exc}") from exc
    try:
        return DecorationLaw.from_mixture(pairs)
    except ValueError as exc:
        raise ConfigError(f"bad decoration mixture: {exc}") from exc


def decoration_to_obj(dec: DecorationLaw) -> dict:
    if dec.mixture is None:
        return {"sampler": dec.sampler.description, "window": dec.window}
    return {
        "mixture": [
            {"p": p, "atoms": [float(a) for a in comp.atoms]}
            for p, comp in dec.mixture
        ]
    }


def shift_from_spec(
    spec: str,
    alpha: float,
    law: Optional[ReproductionLaw] = None,
    generations: int = 12,
    case: str = "auto",
) -> ShiftSampler:
    """Parse "const:<v>" or "martingale" into a shift sampler."""
    if spec.startswith("const:"):
        try:
            value = float(spec.split(":", 1)[1])
        except ValueError as exc:
            raise ConfigError(f"bad constant shift {spec!r}") from exc
        if value < 0:
            raise ConfigError("constant shift must be non-negative")
        return constant_shift(value, alpha)
    if spec == "martingale":
        if law is None:
            raise ConfigError("martingale shift needs a reproduction law")
        return sample_S(law, alpha, n=generations, case=case)
    raise ConfigError(f"unknown shift spec {spec!r} (use const:<v> or martingale)")


def empirical_sampler(measures: list[PointMeasure], description: str) -> MeasureSampler:
    """Bootstrap sampler over a fixed collection of measures."""
    if not measures:
        raise ConfigError("empty sample file")
    floor = max(m.floor for m in measures)

    def draw(rng):
        return measures[int(rng.integers(0, len(measures)))]

    return MeasureSampler(draw=draw, declared_floor=floor, description=description)


def read_measures_csv(path: str) -> list[PointMeasure]:
    import csv

    measures = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ConfigError(f"empty CSV file: {path}")
        for row in reader:
            if row:
                measures.append(PointMeasure.from_csv_row(row))
    return measures


def target_from_spec(
    spec: str,
    law: ReproductionLaw,
    alpha: float,
    floor: float,
    generations: int = 12,
    case: str = "auto",
) -> MeasureSampler:
    """Build the measure law named by a verify/extract target spec.

    ``cox``              Cox process with intensity S e^{-alpha x} dx,
                         shift from the martingale limit of ``law``.
    ``sdppp:<json>``     SDPPP with the given decoration (normalized on the
                         fly) and the same martingale shift.
    ``file:<path>``      bootstrap resampling of measures stored as CSV rows.
    """
    if spec == "cox":
        shift = sample_S(law, alpha, n=generations, case=case)
        return cox_sampler(shift, 1.0, alpha, floor)
    if spec.startswith("sdppp:"):
        dec_raw = decoration_from_obj(load_json_arg(spec.split(":", 1)[1]))
        _, star = normalize_decoration(dec_raw, alpha)
        shift = sample_S(law, alpha, n=generations, case=case)
        return sdppp_sampler(shift, alpha, star, floor)
    if spec.startswith("file:"):
        path = spec.split(":", 1)[1]
        return empirical_sampler(read_measures_csv(path), f"file[{path}]")
    raise ConfigError(
        f"unknown target {spec!r} (use cox, sdppp:<decoration>, or file:<csv>)"
    )


def parse_extended_float(text: str) -> float:
    """Float parser accepting -inf/inf spellings; NaN is rejected."""
    try:
        value = float(text)
    except ValueError as exc:
        raise ConfigError(f"bad number {text!r}") from exc
    if math.isnan(value):
        raise ConfigError("NaN is not a valid value")
    return value
