"""
实验配置与运行记录数据模型
"""

import copy
import hashlib
import json
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Tuple

import yaml

from src.utils.errors import ConfigError

EXPERIMENT_IDS = ("grover-advice", "hybrid", "ensemble", "randstate", "gnm", "affine-check")

# 每个实验的参数表：键 -> (类型, 默认值)
SCHEMAS: Dict[str, Dict[str, Tuple[type, Any]]] = {
    "grover-advice": {
        "n_values": (list, [8]),
        "m_values": (list, [40]),
        "budgets": (list, []),          # 为空时取 1, 2, 4, … 与满预算
        "dense_budgets": (bool, False),  # 为真时取 1..满预算的全部整数
        "hybrid": (bool, False),
    },
    "hybrid": {
        "n": (int, 6),
        "iterations": (int, 4),
        "algorithm": (str, "grover"),   # grover / amplify / prepare
        "m": (int, 40),
    },
    "ensemble": {
        "n": (int, 8),
        "k": (int, 1),
        "samples": (int, 2000),
        "ensemble": (str, "sigma"),     # sigma / haar / prepared
        "precision": (int, 0),
    },
    "randstate": {
        "n": (int, 6),
        "precision": (int, 6),
        "max_attempts": (int, 0),       # 0 表示默认 20·q
    },
    "gnm": {
        "catalog_id": (str, "symmetric"),
        "params": (list, [4]),
        "h": (list, [[1, 2, 0, 3], [0, 2, 3, 1]]),
        "x": (list, [1, 0, 2, 3]),
        "kernel_mode": (str, "ehk"),
        "cheating": (int, 0),
        "r": (int, 6),
    },
    "affine-check": {
        "family": (str, "pauli"),       # pauli / diagonal
        "N": (int, 2),
        "extensions": (int, 100),
    },
}


def _check_type(experiment: str, key: str, value: Any, expected: type) -> Any:
    if expected is float and isinstance(value, int) and not isinstance(value, bool):
        return float(value)
    if expected is int and isinstance(value, bool):
        raise ConfigError(f"{experiment}.{key} 需要整数，实际为布尔值")
    if expected is list and isinstance(value, tuple):
        return list(value)
    if not isinstance(value, expected):
        raise ConfigError(f"{experiment}.{key} 需要 {expected.__name__}，实际为 {type(value).__name__}")
    return value


@dataclass
class ExperimentConfig:
    """
    单个实验的完整配置

    参数按实验的参数表校验：未知键报错，缺失键取默认值。
    """

    experiment: str
    params: Dict[str, Any] = field(default_factory=dict)
    seed: int = 0
    trials: int = 100
    output: Optional[str] = None
    threads: int = 1

    def __post_init__(self):
        if self.experiment not in SCHEMAS:
            raise ConfigError(f"未知实验: {self.experiment}，可选 {', '.join(EXPERIMENT_IDS)}")
        schema = SCHEMAS[self.experiment]
        unknown = sorted(set(self.params) - set(schema))
        if unknown:
            raise ConfigError(f"{self.experiment} 不接受参数: {', '.join(unknown)}")
        resolved = {}
        for key, (expected, default) in schema.items():
            value = self.params[key] if key in self.params else copy.deepcopy(default)
            resolved[key] = _check_type(self.experiment, key, value, expected)
        self.params = resolved
        if not isinstance(self.seed, int) or not 0 <= self.seed < (1 << 64):
            raise ConfigError(f"seed 必须是 64 位无符号整数: {self.seed}")
        if not isinstance(self.trials, int) or self.trials < 1:
            raise ConfigError(f"trials 必须是正整数: {self.trials}")
        if not isinstance(self.threads, int) or self.threads < 1:
            raise ConfigError(f"threads 必须是正整数: {self.threads}")

    def to_dict(self) -> Dict[str, Any]:
        """转换为字典格式"""
        return {
            "experiment": self.experiment,
            "params": dict(self.params),
            "seed": self.seed,
            "trials": self.trials,
            "output": self.output,
            "threads": self.threads
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ExperimentConfig":
        """从字典创建实例"""
        unknown = sorted(set(data) - {"experiment", "params", "seed", "trials", "output", "threads"})
        if unknown:
            raise ConfigError(f"实验配置包含未知键: {', '.join(unknown)}")
        if "experiment" not in data:
            raise ConfigError("实验配置缺少 experiment")
        return cls(
            experiment=str(data["experiment"]),
            params=dict(data.get("params") or {}),
            seed=data.get("seed", 0),
            trials=data.get("trials", 100),
            output=data.get("output"),
            threads=data.get("threads", 1)
        )

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.to_dict(), allow_unicode=True, sort_keys=True)

    @classmethod
    def from_yaml(cls, text: str) -> "ExperimentConfig":
        try:
            data = yaml.safe_load(text)
        except yaml.YAMLError as e:
            raise ConfigError(f"实验配置无法解析: {e}") from e
        if not isinstance(data, dict):
            raise ConfigError("实验配置顶层必须是映射")
        return cls.from_dict(data)

    @property
    def config_hash(self) -> str:
        """规范 JSON 的 sha256（不含输出路径与线程数，二者不影响结果）"""
        data = self.to_dict()
        data.pop("output")
        data.pop("threads")
        return hashlib.sha256(json.dumps(data, sort_keys=True).encode("utf-8")).hexdigest()


@dataclass
class RunRecord:
    """一次实验运行的记录"""

    config: Dict[str, Any]
    config_hash: str
    rows: List[Dict[str, Any]] = field(default_factory=list)
    summary: Dict[str, Any] = field(default_factory=dict)
    wall_time: float = 0.0
    version: str = ""
    failures: List[str] = field(default_factory=list)

    @property
    def experiment(self) -> str:
        return str(self.config.get("experiment", ""))

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_dict(self) -> Dict[str, Any]:
        """转换为字典格式"""
        return {
            "config": self.config,
            "config_hash": self.config_hash,
            "rows": self.rows,
            "summary": self.summary,
            "wall_time": self.wall_time,
            "version": self.version,
            "failures": self.failures
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "RunRecord":
        """从字典创建实例"""
        try:
            return cls(
                config=dict(data["config"]),
                config_hash=str(data["config_hash"]),
                rows=list(data.get("rows", [])),
                summary=dict(data.get("summary", {})),
                wall_time=float(data.get("wall_time", 0.0)),
                version=str(data.get("version", "")),
                failures=list(data.get("failures", []))
            )
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigError(f"运行记录格式错误: {e}") from e
