from logging import getLogger

from pydantic_settings import BaseSettings

logger = getLogger(__name__)


class RisnetSettings(BaseSettings):
    RISNET_THREADS: int | None = None  # None -> os.cpu_count()
    RISNET_LOG_LEVEL: str = "INFO"
    RISNET_MC_BATCH_SIZE: int = 256  # samples per Monte Carlo batch

    def print_settings(self):
        logger.info(f"Current {self.__class__.__name__} settings:")
        logger.info(vars(self))


config = RisnetSettings()
