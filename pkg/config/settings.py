from pathlib import Path
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        env_prefix="SNS_",
        extra="ignore",
    )

    # Runs
    default_workers: int = 4
    default_master_seed: int = 20240601
    output_root: str = "./data/runs"
    log_level: str = "INFO"

    # FFT threads per transform (scipy.fft workers); keep 1 when paths run in parallel
    fft_workers: int = 1

    # Calibration
    calibration_attempts: int = 3
    calibration_safety_factor: float = 1.5
    max_refinement_drift: float = 2.0

    # Noise condition audit
    audit_samples: int = 1000
    envelope_margin: float = 1.05

    @property
    def output_path(self) -> Path:
        return Path(self.output_root)


settings = Settings()
