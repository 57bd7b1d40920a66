"""
Library and CLI configuration settings
"""
from typing import List

from pydantic_settings import BaseSettings

from ration_lab.core.errors import ConfigError


class Settings(BaseSettings):
    """ration_lab settings, overridable through RATION_LAB_* variables"""

    # Evaluation
    THREADS: int = 1
    PATH_CHUNK: int = 256
    EXACT_SCENARIO_LIMIT: int = 1_000_000
    FILL_RATE_TOL: float = 1e-12

    # Policies
    TFR_GRID: int = 1001
    DP_STATE_BUDGET: int = 2_000_000

    # Bounds and instances
    CV_GRID: int = 10_000
    WORST_CASE_ATOMS: int = 2000

    # Demand banks
    KNN_K: int = 10

    # Output
    RESULTS_DIR: str = "results"
    LOG_LEVEL: str = "INFO"

    class Config:
        env_file = ".env"
        env_prefix = "RATION_LAB_"
        case_sensitive = True


settings = Settings()


def parse_floats(text: str) -> List[float]:
    """'1,2.5,3' -> [1.0, 2.5, 3.0]"""
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"expected comma-separated numbers, got '{text}'") from None
    if not values:
        raise ConfigError("expected a comma-separated list of numbers")
    return values
