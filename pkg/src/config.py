"""Library settings loaded from the environment."""
from pydantic import Field
from pydantic_settings import BaseSettings, PydanticBaseSettingsSource, SettingsConfigDict


class Settings(BaseSettings):
    """Numerical defaults shared by the library modules.

    Values are read from ``LEVY_*`` environment variables (and a ``.env`` file)
    when the library is used directly.
    """

    model_config = SettingsConfigDict(env_prefix="LEVY_", env_file=".env", extra="ignore", frozen=True)

    log_level: str = Field("INFO", description="Root log level")
    grid_points: int = Field(4096, ge=256, description="Default points of a pdf or BP grid")
    inversion_max_points: int = Field(
        2**20, ge=256, description="Largest internal grid used by characteristic-function inversion"
    )
    nyquist_tol: float = Field(1e-8, gt=0, description="Spectrum level required at the Nyquist frequency")
    workers: int = Field(1, ge=1, description="Threads used across benchmark realizations")
    golden_iterations: int = Field(40, ge=1, description="Iterations of the oracle lambda search")
    default_seed: int = Field(20130101, ge=0, description="Seed used when none is given")


class IsolatedSettings(Settings):
    """Settings built only from explicit keyword arguments.

    The command-line front end uses this class so that its behavior depends
    on declared flags alone.
    """

    @classmethod
    def settings_customise_sources(
        cls,
        settings_cls: type[BaseSettings],
        init_settings: PydanticBaseSettingsSource,
        env_settings: PydanticBaseSettingsSource,
        dotenv_settings: PydanticBaseSettingsSource,
        file_secret_settings: PydanticBaseSettingsSource,
    ) -> tuple[PydanticBaseSettingsSource, ...]:
        return (init_settings,)


_active_settings: Settings | None = None


def get_settings() -> Settings:
    """Return the process-wide settings, reading the environment on first use."""
    global _active_settings
    if _active_settings is None:
        _active_settings = Settings()
    return _active_settings


def use_settings(settings: Settings) -> Settings:
    """Install ``settings`` as the process-wide settings."""
    global _active_settings
    _active_settings = settings
    return settings
