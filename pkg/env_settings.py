# env_settings.py
from pathlib import Path
from pydantic_settings import BaseSettings, SettingsConfigDict

BASE_DIR = Path(__file__).parent

class EnvSettings(BaseSettings):
    # 情境 JSON 與 CLI 旗標都沒有指定時才會用到這些預設值
    HBAR: float = 1.0
    N_POINTS: int = 512
    GRID_LENGTH: float = 51.2
    SEED: int = 0
    OUTPUT_DIR: str = "output"
    JOBS: int = 1

    model_config = SettingsConfigDict(
        env_file=BASE_DIR / '.env',
        env_file_encoding='utf-8',
        extra='ignore'
    )
