"""
Configuração de logging estruturado
"""
import logging
import sys
from pathlib import Path
from typing import Optional, Union

from config.settings import LOGGING_CONFIG

def setup_logger(name: str, log_file: Optional[Union[str, Path]] = None) -> logging.Logger:
    """
    Configura logger com formatação padronizada

    Args:
        name: Nome do logger (geralmente __name__)
        log_file: Arquivo de log opcional

    Returns:
        Logger configurado
    """
    logger = logging.getLogger(name)

    # Evitar duplicação de handlers
    if logger.handlers:
        return logger

    logger.setLevel(getattr(logging, LOGGING_CONFIG["level"]))

    formatter = _build_formatter()

    # Console handler
    console_handler = logging.StreamHandler(sys.stdout)
    console_handler.setFormatter(formatter)
    logger.addHandler(console_handler)

    if log_file:
        attach_file_handler(logger, log_file)

    return logger

def attach_file_handler(logger: logging.Logger, log_file: Union[str, Path]) -> logging.FileHandler:
    """Adiciona um arquivo de log (o diretório é criado se preciso)"""
    log_path = Path(log_file)
    log_path.parent.mkdir(parents=True, exist_ok=True)

    file_handler = logging.FileHandler(log_path)
    file_handler.setFormatter(_build_formatter())
    logger.addHandler(file_handler)
    return file_handler

def set_level(level: str) -> None:
    """Ajusta o nível de todos os loggers do projeto já criados"""
    for logger in logging.Logger.manager.loggerDict.values():
        if isinstance(logger, logging.Logger) and logger.handlers:
            logger.setLevel(getattr(logging, level.upper()))

def _build_formatter() -> logging.Formatter:
    return logging.Formatter(
        LOGGING_CONFIG["format"],
        datefmt=LOGGING_CONFIG["date_format"]
    )
