"""Break-even arithmetic for the distill-then-reconstruct pipeline.

The pipeline pays for a longer instruction prompt and for the
reconstruction pass; it earns the output tokens the generator did not
produce. It saves money when

    gen_output_price * gained_output
        >= gen_input_price * extra_input
         + recon_input_price * recon_input
         + recon_output_price * recon_output

Token counts are accepted as reals so whole-word counts can be scaled by
a words-to-billing-tokens factor when comparing against provider bills.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError, TrimkitError


@dataclass(frozen=True)
class CostParams:
    """Prices per token for the generation and reconstruction models."""

    gen_input_price: float
    gen_output_price: float
    recon_input_price: float = 0.0
    recon_output_price: float = 0.0
    currency: str = "USD"

    def __post_init__(self):
        for name in ("gen_input_price", "gen_output_price",
                     "recon_input_price", "recon_output_price"):
            if getattr(self, name) < 0:
                raise TrimkitError(f"{name} must be >= 0")

    def scaled(self, factor: float) -> "CostParams":
        return CostParams(self.gen_input_price * factor, self.gen_output_price * factor,
                          self.recon_input_price * factor, self.recon_output_price * factor,
                          self.currency)


@dataclass(frozen=True)
class UsageProfile:
    """Token counts for one query through the pipeline.

    extra_input: instruction-prompt tokens added to the query.
    gained_output: output tokens the generator skipped.
    recon_input / recon_output: tokens in and out of the reconstructor.
    """

    extra_input: float
    gained_output: float
    recon_input: float = 0.0
    recon_output: float = 0.0

    def __post_init__(self):
        for name in ("extra_input", "gained_output", "recon_input", "recon_output"):
            if getattr(self, name) < 0:
                raise TrimkitError(f"{name} must be >= 0")

    def scaled(self, token_factor: float) -> "UsageProfile":
        """Convert word counts to billing tokens with a flat factor."""
        return UsageProfile(self.extra_input * token_factor, self.gained_output * token_factor,
                            self.recon_input * token_factor, self.recon_output * token_factor)


@dataclass(frozen=True)
class BreakEven:
    lhs: float
    rhs: float
    saves: bool
    margin: float
    currency: str = "USD"


def break_even(params: CostParams, profile: UsageProfile) -> BreakEven:
    """Evaluate both sides of the saving inequality."""
    lhs = params.gen_output_price * profile.gained_output
    rhs = (params.gen_input_price * profile.extra_input
           + params.recon_input_price * profile.recon_input
           + params.recon_output_price * profile.recon_output)
    return BreakEven(lhs=lhs, rhs=rhs, saves=lhs >= rhs, margin=lhs - rhs,
                     currency=params.currency)


def min_gain(params: CostParams, extra_input: float,
             recon_input: float = 0.0, recon_output: float = 0.0) -> float:
    """Smallest gained-output token count that still saves money."""
    if params.gen_output_price <= 0:
        raise TrimkitError("min_gain needs a positive generation output price")
    rhs = (params.gen_input_price * extra_input
           + params.recon_input_price * recon_input
           + params.recon_output_price * recon_output)
    return rhs / params.gen_output_price


def load_pricing(path: str | Path) -> CostParams:
    """Pricing file: JSON object with the four price fields and a currency label."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"pricing file not found: {path}")
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: malformed pricing JSON: {exc}") from exc
    try:
        return CostParams(
            gen_input_price=float(payload["gen_input_price"]),
            gen_output_price=float(payload["gen_output_price"]),
            recon_input_price=float(payload.get("recon_input_price", 0.0)),
            recon_output_price=float(payload.get("recon_output_price", 0.0)),
            currency=str(payload.get("currency", "USD")),
        )
    except KeyError as exc:
        raise ConfigError(f"{path}: missing pricing key {exc}") from exc
