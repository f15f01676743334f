"""
工具类模块

包含日志、配置管理、随机种子与异常类型。
"""

from src.utils.logger import Logger
from src.utils.config import Config
from src.utils.rng import RngSeed

__all__ = ["Logger", "Config", "RngSeed"]
