import os
from dataclasses import dataclass

from dotenv import load_dotenv


@dataclass(frozen=True)
class Settings:
    """Process-level settings read from the environment."""

    output_dir: str = "output"
    log_level: str = "INFO"
    log_json: bool = False
    enable_metrics: bool = True


def _flag(name: str, default: str) -> bool:
    return os.getenv(name, default).lower() == "true"


def load_settings(env_file: str = ".env.local") -> Settings:
    """Load settings, letting ``env_file`` fill unset variables.

    Args:
        env_file (str): dotenv file to read first

    Returns:
        Settings: The resolved settings
    """
    load_dotenv(env_file)
    return Settings(
        output_dir=os.getenv("HOLORENORM_OUTPUT_DIR", "output"),
        log_level=os.getenv("HOLORENORM_LOG_LEVEL", "INFO"),
        log_json=_flag("HOLORENORM_LOG_JSON", "false"),
        enable_metrics=_flag("ENABLE_METRICS", "true"),
    )
