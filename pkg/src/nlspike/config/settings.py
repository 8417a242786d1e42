import json
import os
import logging
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, Optional

logger = logging.getLogger(__name__)

DEFAULTS_JSON = Path(__file__).parent / "defaults.json"


def load_defaults(defaults_data: Optional[dict] = None) -> Dict[str, Any]:
    """Load the packaged default kernel configuration."""
    if defaults_data is None:
        with open(DEFAULTS_JSON, "r") as f:
            defaults_data = json.load(f)
    return defaults_data


@dataclass(frozen=True)
class KernelDefaults:
    """Recommended kernel configuration (H=5, K=64, (T, L)=(16, 256), n=8)."""

    H: float = 5.0  # PWL-Exp half-interval
    K: int = 64  # PWL-Exp segment count
    T: int = 16  # division window length
    L: int = 256  # division population size
    n_cordic: int = 8
    rms_eps: float = 1e-5
    slope_bits: int = 8
    intercept_bits: int = 16
    sqrt_d_bits: int = 16
    work_frac_bits: int = 32  # fractional bits of the exp/norm/division datapath
    input_bits: int = 8
    logit_scale: float = 4.0  # std of sampled softmax logits
    input_scale_exp: Dict[str, int] = field(
        default_factory=lambda: {
            "softmax": -3,
            "silu": -4,
            "rmsnorm": -5,
            "layernorm": -5,
        }
    )

    @classmethod
    def from_json(cls, defaults_data: Optional[dict] = None) -> "KernelDefaults":
        """Create from the packaged defaults.json (unknown keys are rejected)."""
        data = load_defaults(defaults_data)
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(
                f"Unknown keys in defaults: {sorted(unknown)}, expected a subset of {sorted(known)}"
            )
        return cls(**data)

    def input_scale_for(self, operator: str) -> int:
        try:
            return self.input_scale_exp[operator]
        except KeyError:
            raise ValueError(
                f"No input grid for operator {operator}, use one of {sorted(self.input_scale_exp)}"
            )


@dataclass
class RunSettings:
    """Process-level settings for experiment runs."""

    threads: int = 1
    seed: int = 7
    log_level: Optional[str] = None

    @staticmethod
    def _get_env_var(key: str, default: str = None) -> str:
        """Helper method to get environment variables."""
        return os.getenv(key, default)

    @classmethod
    def _parse_positive_int(cls, key: str, default: int) -> int:
        raw = cls._get_env_var(key)
        if raw is None or raw.strip() == "":
            return default
        try:
            value = int(raw)
        except ValueError:
            raise ValueError(f"{key} must be a positive integer, got {raw!r}")
        if value < 1:
            raise ValueError(f"{key} must be a positive integer, got {raw!r}")
        return value

    @classmethod
    def from_env(cls) -> "RunSettings":
        """Create from environment variables"""
        threads = cls._parse_positive_int("NLSPIKE_THREADS", os.cpu_count() or 1)
        seed_raw = cls._get_env_var("NLSPIKE_SEED", "7")
        try:
            seed = int(seed_raw)
        except ValueError:
            raise ValueError(f"NLSPIKE_SEED must be an integer, got {seed_raw!r}")
        settings = cls(
            threads=threads,
            seed=seed,
            log_level=cls._get_env_var("NLSPIKE_LOG_LEVEL"),
        )
        logger.debug(f"Run settings: threads={settings.threads}, seed={settings.seed}")
        return settings
