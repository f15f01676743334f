"""
见证数据模型

AdviceWitness：标记态搜索的 m 比特经典见证；
GnmWitness：群非成员问题中 Merlin 的四段式见证。
"""

import json
from dataclasses import dataclass, field
from typing import Any, Dict, List, Tuple

from src.utils.errors import WitnessFormatError

# 四分之一相位 {1, −1, i, −i} 及其 2 比特编码 00, 01, 10, 11
QUARTER_PHASES: Tuple[complex, ...] = (1 + 0j, -1 + 0j, 1j, -1j)
PHASE_NAMES: Tuple[str, ...] = ("1", "-1", "i", "-i")


@dataclass(frozen=True)
class AdviceWitness:
    """
    经典建议见证

    entries 中每项为 (基态下标 z, 相位编码 code)，code 是 QUARTER_PHASES 的下标。
    """

    n: int
    entries: Tuple[Tuple[int, int], ...]

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple((int(z), int(c)) for z, c in self.entries))
        if self.n < 1:
            raise WitnessFormatError(f"比特数必须为正: {self.n}")
        if not self.entries:
            raise WitnessFormatError("见证至少包含一项")
        indices = [z for z, _ in self.entries]
        if len(set(indices)) != len(indices):
            raise WitnessFormatError(f"见证下标重复: {indices}")
        for z, code in self.entries:
            if not 0 <= z < (1 << self.n):
                raise WitnessFormatError(f"下标越界: {z} (n={self.n})")
            if not 0 <= code < len(QUARTER_PHASES):
                raise WitnessFormatError(f"相位编码非法: {code}")

    @property
    def t(self) -> int:
        """见证项数"""
        return len(self.entries)

    @property
    def bit_length(self) -> int:
        """序列化长度 t·(n+2)"""
        return self.t * (self.n + 2)

    def phase(self, i: int) -> complex:
        """第 i 项的相位 β"""
        return QUARTER_PHASES[self.entries[i][1]]

    def to_dict(self) -> Dict[str, Any]:
        """转换为字典格式"""
        return {
            "n": self.n,
            "entries": [[z, PHASE_NAMES[c]] for z, c in self.entries]
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "AdviceWitness":
        """从字典创建实例"""
        try:
            entries = tuple((int(z), PHASE_NAMES.index(str(p))) for z, p in data["entries"])
        except (KeyError, ValueError, TypeError) as e:
            raise WitnessFormatError(f"见证字典格式错误: {e}") from e
        return cls(n=int(data["n"]), entries=entries)

    def __str__(self) -> str:
        terms = " + ".join(f"({PHASE_NAMES[c]})|{z}⟩" for z, c in self.entries)
        return f"AdviceWitness(n={self.n}, t={self.t}): {terms}"


@dataclass(frozen=True)
class ModelSpec:
    """模型群在目录中的标识：目录 id 加整数参数"""

    catalog_id: str
    params: Tuple[int, ...] = ()

    def to_dict(self) -> Dict[str, Any]:
        return {"catalog_id": self.catalog_id, "params": list(self.params)}


@dataclass
class GnmWitness:
    """
    群非成员见证

    model 为显式模型群 Γ；gammas 为 Γ 的高效生成集；g_labels 为对应的黑盒群标签；
    z 与 lambdas 为 Γ 中的元素（规范整数 id）。
    """

    model: ModelSpec
    gammas: List[int]
    g_labels: List[int]
    z: int
    lambdas: List[int] = field(default_factory=list)

    @property
    def k(self) -> int:
        return len(self.gammas)

    def to_dict(self) -> Dict[str, Any]:
        """转换为结构化文本记录使用的字典（标签为十六进制）"""
        return {
            "catalog_id": self.model.catalog_id,
            "params": list(self.model.params),
            "k": self.k,
            "gammas": list(self.gammas),
            "g_labels": [format(label, "x") for label in self.g_labels],
            "z": self.z,
            "lambdas": list(self.lambdas)
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "GnmWitness":
        """从字典创建实例，k 与列表长度不符时报错"""
        try:
            witness = cls(
                model=ModelSpec(str(data["catalog_id"]), tuple(int(p) for p in data.get("params", []))),
                gammas=[int(g) for g in data["gammas"]],
                g_labels=[int(str(label), 16) for label in data["g_labels"]],
                z=int(data["z"]),
                lambdas=[int(v) for v in data.get("lambdas", [])]
            )
        except (KeyError, ValueError, TypeError) as e:
            raise WitnessFormatError(f"GNM 见证格式错误: {e}") from e
        if int(data.get("k", witness.k)) != witness.k:
            raise WitnessFormatError(f"k={data.get('k')} 与生成元个数 {witness.k} 不符")
        return witness

    def to_text(self) -> str:
        """结构化文本记录（JSON）"""
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_text(cls, text: str) -> "GnmWitness":
        """解析结构化文本记录"""
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise WitnessFormatError(f"GNM 见证文本无法解析: {e}") from e
        if not isinstance(data, dict):
            raise WitnessFormatError("GNM 见证文本顶层必须是对象")
        return cls.from_dict(data)
