import os
from pathlib import Path
from typing import Optional

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    model_config = SettingsConfigDict(env_file=".env", env_prefix="EAHKIT_", extra='ignore')

    # brute-force oracle: max number of joint pure profiles (EAHKIT_MAX_BRUTE)
    max_brute: int = Field(default=4096, ge=1)
    # vertex enumeration is only attempted up to this dimension
    vertex_enum_max_dim: int = Field(default=12, ge=1)

    # ellipsoid constants; explicit exponents win over the derived ones
    ellipsoid_r_exp: Optional[int] = None
    ellipsoid_eps_exp: Optional[int] = None
    r_exp_ceiling: int = Field(default=48, ge=1)
    eps_exp_ceiling: int = Field(default=192, ge=1)
    max_iters_ceiling: int = Field(default=20000, ge=1)
    iter_constant: int = Field(default=10, ge=1)
    precision_bits: int = Field(default=96, ge=16)

    escalation_cap: int = Field(default=4, ge=0)
    # 0 means: try the compressed program every `dim` new responses
    compress_check_every: int = Field(default=0, ge=0)
    replay_check: bool = False

    fm_max_rows: int = Field(default=400, ge=1)
    self_map_check_max_vertices: int = Field(default=4096, ge=1)

    log_level: str = "INFO"
    log_every: int = Field(default=100, ge=1)
    logs_dir: str = "./logs"
    database_url: str = "sqlite:///./eahkit.db"


settings = Settings()

# Normalize paths and ensure directories exist
try:
    settings.logs_dir = os.path.abspath(os.path.expanduser(str(settings.logs_dir)))
    Path(settings.logs_dir).mkdir(parents=True, exist_ok=True)
except Exception:
    # Avoid raising on import; loggers may not be configured yet
    pass
