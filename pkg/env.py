"""
Environment configuration module.

This module centralizes environment variable loading and the logging helpers
used by every service.
"""

import sys
import os
import logging

# Append project root to path so services resolve when a module is run directly
sys.path.append(os.path.dirname(os.path.abspath(__file__)))

from dotenv import load_dotenv

load_dotenv(override=True)

IS_DEBUG_MODE: bool = os.getenv("ROBUSTFAIR_DEBUG", "1") != "0"

# Configure basic logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(levelname)s - %(message)s'
)
app_logger: logging.Logger = logging.getLogger("robustfair")


class ConstantsVar:
    """
    Centralized environment-derived settings.

    Every value is read once from the process environment (or the .env file).
    """

    # Result Constants (also the CLI exit codes)
    PASS_RESULT: int = 0
    FAIL_RESULT: int = 1
    SOLVER_FAIL_RESULT: int = 2

    ## Output directory override for experiment runs
    OUTPUT_DIR: str = os.getenv("ROBUSTFAIR_OUTPUT_DIR", "")

    ## Optional HTTP authentication
    API_KEY: str = os.getenv("ROBUSTFAIR_API_KEY", "")


def debug_error(text: str) -> None:
    """
    Log an error message.

    Params:
        text (str): The error message to log.
    """
    if IS_DEBUG_MODE:
        app_logger.error(text)


def debug_info(text: str) -> None:
    """
    Log an informational message.

    Params:
        text (str): The info message to log.
    """
    if IS_DEBUG_MODE:
        app_logger.info(text)


def debug_warning(text: str) -> None:
    """
    Log a warning message.

    Params:
        text (str): The warning message to log.
    """
    if IS_DEBUG_MODE:
        app_logger.warning(text)


def debug_success(text: str) -> None:
    """
    Log a success message (as info).

    Params:
        text (str): The success message to log.
    """
    if IS_DEBUG_MODE:
        # Logging doesn't have a 'success' level, map to INFO with a prefix
        app_logger.info(f"[SUCCESS] {text}")


def debug_critical(text: str) -> None:
    """
    Log a critical message.

    Params:
        text (str): The critical message to log.
    """
    if IS_DEBUG_MODE:
        app_logger.critical(text)


if __name__ == "__main__":
    print("=" * 60)
    print("Environment Configuration Check")
    print("=" * 60)
    print(f"Output dir override: {ConstantsVar.OUTPUT_DIR or 'NOT SET'}")
    print(f"API key configured: {bool(ConstantsVar.API_KEY)}")
    print(f"Debug Mode: {IS_DEBUG_MODE}")
    print("=" * 60)
