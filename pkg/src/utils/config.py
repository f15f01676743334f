"""
配置管理模块

提供实验室的配置加载、保存和管理功能。
"""

import copy
import json
import os
from pathlib import Path
from typing import Any, Dict, Optional

import yaml

from src.utils.logger import Logger


class Config:
    """
    配置管理类

    支持从YAML或JSON文件加载配置，并提供点号分隔键的访问、修改和保存。
    """

    def __init__(self, config_path: Optional[str] = None, auto_save: bool = False):
        """
        初始化配置管理器

        Args:
            config_path: 配置文件路径
            auto_save: 是否在修改后自动保存
        """
        self.logger = Logger.get_logger(__name__)
        self._config_path = config_path
        self._auto_save = auto_save
        self._defaults = self._get_defaults()
        self._config: Dict[str, Any] = copy.deepcopy(self._defaults)

        if config_path:
            self.load(config_path)

    # ==================== 配置加载 ====================

    def load(self, config_path: str) -> bool:
        """
        从文件加载配置，文件中的键覆盖默认值

        Args:
            config_path: 配置文件路径

        Returns:
            加载是否成功
        """
        self._config_path = config_path
        path = Path(config_path)

        if not path.exists():
            self.logger.warning(f"配置文件不存在: {config_path}，使用默认配置")
            return False

        try:
            loaded = self.read_file(path)
        except (OSError, ValueError, yaml.YAMLError) as e:
            self.logger.error(f"加载配置失败: {e}")
            return False

        self._config = copy.deepcopy(self._defaults)
        self.update(loaded, auto_save=False)
        self.logger.info(f"配置加载成功: {config_path}")
        return True

    @staticmethod
    def read_file(path: Path) -> Dict[str, Any]:
        """
        读取 YAML 或 JSON 文件为字典

        Raises:
            ValueError: 不支持的扩展名或顶层不是映射
        """
        with open(path, "r", encoding="utf-8") as f:
            if path.suffix in (".yaml", ".yml"):
                data = yaml.safe_load(f) or {}
            elif path.suffix == ".json":
                data = json.load(f)
            else:
                raise ValueError(f"不支持的配置文件格式: {path.suffix}")
        if not isinstance(data, dict):
            raise ValueError(f"配置文件顶层必须是映射: {path}")
        return data

    # ==================== 配置保存 ====================

    def save(self, config_path: Optional[str] = None) -> bool:
        """
        保存配置到文件

        Args:
            config_path: 配置文件路径，默认使用初始化时的路径

        Returns:
            保存是否成功
        """
        save_path = config_path or self._config_path
        if not save_path:
            self.logger.error("未指定配置文件保存路径")
            return False

        path = Path(save_path)
        path.parent.mkdir(parents=True, exist_ok=True)
        try:
            with open(path, "w", encoding="utf-8") as f:
                if path.suffix in (".yaml", ".yml"):
                    yaml.safe_dump(self._config, f, allow_unicode=True, sort_keys=False)
                elif path.suffix == ".json":
                    json.dump(self._config, f, ensure_ascii=False, indent=2)
                else:
                    self.logger.error(f"不支持的配置文件格式: {path.suffix}")
                    return False
        except OSError as e:
            self.logger.error(f"保存配置失败: {e}")
            return False

        self.logger.info(f"配置保存成功: {save_path}")
        return True

    # ==================== 配置访问 ====================

    def get(self, key: str, default: Any = None) -> Any:
        """
        获取配置值（支持点号分隔的嵌套键）

        Args:
            key: 配置键，如 "harness.threads" 或 "logging.level"
            default: 默认值

        Returns:
            配置值
        """
        value: Any = self._config
        for k in key.split("."):
            if isinstance(value, dict) and k in value:
                value = value[k]
            else:
                return default
        return value

    def set(self, key: str, value: Any, auto_save: Optional[bool] = None) -> None:
        """
        设置配置值（支持点号分隔的嵌套键）

        Args:
            key: 配置键
            value: 配置值
            auto_save: 是否自动保存，默认使用初始化时的设置
        """
        keys = key.split(".")
        config = self._config
        for k in keys[:-1]:
            config = config.setdefault(k, {})
        config[keys[-1]] = value

        if auto_save or (auto_save is None and self._auto_save):
            self.save()

    def update(self, config: Dict[str, Any], auto_save: Optional[bool] = None) -> None:
        """
        批量深度更新配置

        Args:
            config: 配置字典
            auto_save: 是否自动保存
        """
        def deep_update(base: dict, updates: dict) -> dict:
            for key, value in updates.items():
                if isinstance(value, dict) and isinstance(base.get(key), dict):
                    base[key] = deep_update(base[key], value)
                else:
                    base[key] = value
            return base

        self._config = deep_update(self._config, copy.deepcopy(config))

        if auto_save or (auto_save is None and self._auto_save):
            self.save()

    def has(self, key: str) -> bool:
        """检查配置项是否存在"""
        return self.get(key) is not None

    def get_all(self) -> Dict[str, Any]:
        """获取所有配置（深拷贝）"""
        return copy.deepcopy(self._config)

    # ==================== 默认配置 ====================

    def _get_defaults(self) -> Dict[str, Any]:
        """
        获取默认配置

        Returns:
            默认配置字典
        """
        return {
            "app": {
                "name": "QCMA Query Lab",
                "version": "0.1.0"
            },
            "run": {
                "seed": 0,
                "trials": 100
            },
            "harness": {
                "threads": 1,
                "output_dir": "results",
                "write_csv": True,
                "write_json": True
            },
            "logging": {
                "level": "INFO",
                "console_level": "INFO",
                "file_level": "DEBUG",
                "log_dir": None
            },
            "experiments": {}
        }

    # ==================== 环境变量支持 ====================

    @classmethod
    def from_env(cls, prefix: str = "QLAB_") -> "Config":
        """
        从环境变量加载配置

        例如: QLAB_HARNESS__THREADS=4 -> harness.threads = "4"

        Args:
            prefix: 环境变量前缀

        Returns:
            配置实例
        """
        return cls().apply_env(prefix)

    def apply_env(self, prefix: str = "QLAB_") -> "Config":
        """用环境变量覆盖当前配置，返回自身"""
        for key, value in os.environ.items():
            if key.startswith(prefix):
                self.set(key[len(prefix):].lower().replace("__", "."), value, auto_save=False)
        return self

    # ==================== 字典接口 ====================

    def __getitem__(self, key: str) -> Any:
        return self.get(key)

    def __setitem__(self, key: str, value: Any) -> None:
        self.set(key, value)

    def __contains__(self, key: str) -> bool:
        return self.has(key)

    def __repr__(self) -> str:
        return f"Config(path={self._config_path})"
