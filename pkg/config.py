"""
Configuration management for the hypcross toolkit
Loads settings from environment variables and provides default values
"""

import os
from pathlib import Path
from typing import Optional

from dotenv import load_dotenv

from src.utils.logger import get_logger

logger = get_logger(__name__)


def _env_bool(name: str, default: str) -> bool:
    return os.getenv(name, default).lower() in ('yes', 'true', '1')


class Config:
    """Application configuration loaded from environment variables"""

    def __init__(self, env_file: Optional[str] = None):
        """
        Initialize configuration

        Args:
            env_file: Optional path to .env file to load
        """
        # Exported variables always win over the file
        if env_file:
            if not load_dotenv(env_file, override=False):
                logger.warning("env_file_not_loaded", env_file=env_file)
        elif Path('.env').exists():
            load_dotenv('.env', override=False)

    # Enumeration and grid limits
    @property
    def ENUM_CAP(self) -> int:
        return int(os.getenv('HYPX_ENUM_CAP', '5000000'))

    @property
    def GRID_POINT_CAP(self) -> int:
        return int(os.getenv('HYPX_GRID_POINT_CAP', str(2 ** 24)))

    @property
    def OVERSAMPLING_LQ(self) -> float:
        return float(os.getenv('HYPX_OVERSAMPLING_LQ', '4'))

    @property
    def OVERSAMPLING_LINF(self) -> float:
        return float(os.getenv('HYPX_OVERSAMPLING_LINF', '8'))

    # Randomness and concurrency
    @property
    def DEFAULT_SEED(self) -> int:
        return int(os.getenv('HYPX_DEFAULT_SEED', '0'))

    @property
    def JOBS(self) -> int:
        return max(1, int(os.getenv('HYPX_JOBS', '1')))

    # Approximation and recovery
    @property
    def MAUREY_TRIALS(self) -> int:
        return int(os.getenv('HYPX_MAUREY_TRIALS', '10'))

    @property
    def BUDGET_CONSTANT(self) -> float:
        return float(os.getenv('HYPX_BUDGET_CONSTANT', '2.0'))

    @property
    def OMP_TOL(self) -> float:
        return float(os.getenv('HYPX_OMP_TOL', '1e-10'))

    @property
    def COND_LIMIT(self) -> float:
        return float(os.getenv('HYPX_COND_LIMIT', '1e10'))

    @property
    def LASSO_ITERS(self) -> int:
        return int(os.getenv('HYPX_LASSO_ITERS', '2000'))

    @property
    def LASSO_TOL(self) -> float:
        return float(os.getenv('HYPX_LASSO_TOL', '1e-10'))

    @property
    def MEASURE_CACHE_MB(self) -> int:
        return int(os.getenv('HYPX_MEASURE_CACHE_MB', '512'))

    # Output
    @property
    def RECORD_WALL_TIME(self) -> bool:
        return _env_bool('HYPX_RECORD_WALL_TIME', 'false')

    @property
    def BASE_DATA_PATH(self) -> str:
        return os.getenv('HYPX_BASE_DATA_PATH', './data')

    @property
    def OUTPUT_PATH(self) -> str:
        return os.getenv('HYPX_OUTPUT_PATH', str(Path(self.BASE_DATA_PATH) / 'results'))

    @property
    def LOGS_PATH(self) -> str:
        return os.getenv('LOGS_PATH', str(Path(self.BASE_DATA_PATH) / 'logs'))

    # Logging Configuration
    @property
    def LOG_LEVEL(self) -> str:
        return os.getenv('LOG_LEVEL', 'INFO').upper()

    @property
    def LOG_FORMAT(self) -> str:
        return os.getenv('LOG_FORMAT', 'console').lower()

    @property
    def LOG_TO_FILE(self) -> bool:
        return _env_bool('LOG_TO_FILE', 'false')

    def validate_config(self) -> bool:
        """
        Validate configuration values

        Returns:
            True if configuration is valid, False otherwise
        """
        errors = []

        try:
            if self.ENUM_CAP < 1:
                errors.append("HYPX_ENUM_CAP must be >= 1")
            if self.GRID_POINT_CAP < 1:
                errors.append("HYPX_GRID_POINT_CAP must be >= 1")
            if self.OVERSAMPLING_LQ < 1 or self.OVERSAMPLING_LINF < 1:
                errors.append("grid oversampling factors must be >= 1")
            if self.MAUREY_TRIALS < 1:
                errors.append("HYPX_MAUREY_TRIALS must be >= 1")
            if self.BUDGET_CONSTANT <= 0:
                errors.append("HYPX_BUDGET_CONSTANT must be > 0")
            if self.OMP_TOL < 0 or self.LASSO_TOL < 0:
                errors.append("solver tolerances must be >= 0")
            if self.LASSO_ITERS < 1:
                errors.append("HYPX_LASSO_ITERS must be >= 1")
        except ValueError as e:
            errors.append(f"Malformed numeric setting: {e}")

        if self.LOG_FORMAT not in ('console', 'json'):
            errors.append(f"LOG_FORMAT must be 'console' or 'json', got {self.LOG_FORMAT!r}")

        try:
            for path in [self.OUTPUT_PATH, self.LOGS_PATH]:
                Path(path).mkdir(parents=True, exist_ok=True)
        except Exception as e:
            errors.append(f"Could not create required directories: {str(e)}")

        if errors:
            for error in errors:
                logger.error("configuration_error", error=error)
            return False

        logger.debug("configuration_valid")
        return True

    def get_config_summary(self) -> dict:
        """Get a summary of current configuration"""
        return {
            'enum_cap': self.ENUM_CAP,
            'grid_point_cap': self.GRID_POINT_CAP,
            'oversampling_lq': self.OVERSAMPLING_LQ,
            'oversampling_linf': self.OVERSAMPLING_LINF,
            'default_seed': self.DEFAULT_SEED,
            'jobs': self.JOBS,
            'maurey_trials': self.MAUREY_TRIALS,
            'budget_constant': self.BUDGET_CONSTANT,
            'omp_tol': self.OMP_TOL,
            'cond_limit': self.COND_LIMIT,
            'lasso_iters': self.LASSO_ITERS,
            'lasso_tol': self.LASSO_TOL,
            'measure_cache_mb': self.MEASURE_CACHE_MB,
            'record_wall_time': self.RECORD_WALL_TIME,
            'output_path': self.OUTPUT_PATH,
            'logs_path': self.LOGS_PATH,
            'log_level': self.LOG_LEVEL,
            'log_format': self.LOG_FORMAT,
        }


# Global config instance
_config = None


def get_config() -> Config:
    """Get global configuration instance"""
    global _config
    if _config is None:
        _config = Config()
    return _config
