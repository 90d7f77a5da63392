import logging
import sys


def setup_logging(level: str = "INFO"):
    """Настройка логирования для CLI"""

    # Формат логов
    log_format = "%(asctime)s | %(levelname)-8s | %(name)s | %(message)s"
    date_format = "%Y-%m-%d %H:%M:%S"

    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.INFO),
        format=log_format,
        datefmt=date_format,
        handlers=[
            logging.StreamHandler(sys.stderr)
        ],
        force=True,
    )

    # Уменьшаем шум от библиотек
    logging.getLogger("aiosqlite").setLevel(logging.WARNING)
    logging.getLogger("asyncio").setLevel(logging.WARNING)

    # SEBO пишет на каждый блок, это слишком шумно даже для DEBUG
    logging.getLogger("search_core").setLevel(logging.INFO)

    logging.getLogger(__name__).debug(f"Logging configured at {level.upper()}")
