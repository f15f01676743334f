"""
纯态数据模型

定义稠密复振幅向量 PureState 与球冠规格 CapSpec。
"""

import math
from dataclasses import dataclass, field
from typing import Any, Dict, Sequence, Union

import numpy as np

from src.utils.errors import DimensionError, DomainError, ValidationError

# 用户可见寄存器的比特上限；联合寄存器（控制位、标志位）可以再多两个比特
MAX_QUBITS = 14
MAX_JOINT_QUBITS = MAX_QUBITS + 2

NORM_TOLERANCE = 1e-10
RENORMALIZE_EVERY = 32


def qubit_count(dimension: int) -> int:
    """由维度 N = 2^n 求 n，非 2 的幂时抛出 DimensionError"""
    if dimension < 2 or dimension & (dimension - 1):
        raise DimensionError(f"维度必须是 2 的幂且至少为 2: {dimension}")
    return dimension.bit_length() - 1


@dataclass(frozen=True, eq=False)
class PureState:
    """
    n 量子比特纯态

    振幅数组在构造后只读；所有运算返回新的 PureState。
    比特 0 对应基态下标的最高位。
    """

    amplitudes: np.ndarray
    ops: int = field(default=0, compare=False)   # 自上次归一化以来叠加的运算数

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=np.complex128).reshape(-1)
        n = qubit_count(amps.size)
        if n > MAX_JOINT_QUBITS:
            raise DimensionError(f"量子比特数超出模拟上限: {n}")
        norm = float(np.linalg.norm(amps))
        if abs(norm - 1.0) > NORM_TOLERANCE:
            raise ValidationError(f"振幅范数偏离 1: {norm!r}")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    # ==================== 构造 ====================

    @classmethod
    def from_amplitudes(cls, amplitudes: Union[Sequence[complex], np.ndarray],
                        normalize: bool = False) -> "PureState":
        """从振幅序列构造，可选先归一化"""
        amps = np.asarray(amplitudes, dtype=np.complex128).reshape(-1)
        if normalize:
            norm = np.linalg.norm(amps)
            if norm == 0:
                raise ValidationError("零向量无法归一化")
            amps = amps / norm
        return cls(amps)

    @classmethod
    def basis(cls, n: int, index: int) -> "PureState":
        """计算基态 |index⟩"""
        if not 0 <= index < (1 << n):
            raise DimensionError(f"基态下标越界: {index} (n={n})")
        amps = np.zeros(1 << n, dtype=np.complex128)
        amps[index] = 1.0
        return cls(amps)

    @classmethod
    def uniform(cls, n: int) -> "PureState":
        """均匀叠加态 H^⊗n|0…0⟩"""
        size = 1 << n
        return cls(np.full(size, 1.0 / math.sqrt(size), dtype=np.complex128))

    # ==================== 属性 ====================

    @property
    def n(self) -> int:
        """量子比特数"""
        return self.amplitudes.size.bit_length() - 1

    @property
    def dimension(self) -> int:
        """希尔伯特空间维度 N"""
        return self.amplitudes.size

    @property
    def probabilities(self) -> np.ndarray:
        """计算基测量分布"""
        return np.abs(self.amplitudes) ** 2

    # ==================== 演化 ====================

    def evolve(self, amplitudes: np.ndarray) -> "PureState":
        """
        返回由一次保范运算得到的新态

        每累计 RENORMALIZE_EVERY 次运算重新归一化一次，抑制浮点漂移。
        """
        ops = self.ops + 1
        if ops >= RENORMALIZE_EVERY:
            amplitudes = amplitudes / np.linalg.norm(amplitudes)
            ops = 0
        return PureState(amplitudes, ops)

    def tensor(self, other: "PureState") -> "PureState":
        """张量积 self ⊗ other（self 占高位比特）"""
        return PureState(np.kron(self.amplitudes, other.amplitudes))

    def allclose(self, other: "PureState", atol: float = NORM_TOLERANCE) -> bool:
        """逐振幅比较（不忽略全局相位）"""
        return self.dimension == other.dimension and bool(
            np.allclose(self.amplitudes, other.amplitudes, atol=atol, rtol=0.0))

    def to_dict(self) -> Dict[str, Any]:
        """转换为字典格式"""
        return {
            "n": self.n,
            "real": self.amplitudes.real.tolist(),
            "imag": self.amplitudes.imag.tolist()
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "PureState":
        """从字典创建实例"""
        return cls(np.asarray(data["real"]) + 1j * np.asarray(data["imag"]))

    def __repr__(self) -> str:
        return f"PureState(n={self.n}, ops={self.ops})"


@dataclass(frozen=True)
class CapSpec:
    """
    球冠规格：以 axis 为中心、Haar 质量为 p 的区域 {|⟨ψ|axis⟩| ≥ h(p)}
    """

    p: float
    axis: PureState

    def __post_init__(self):
        if not 0.0 < self.p <= 1.0:
            raise DomainError(f"球冠质量 p 必须在 (0,1] 内: {self.p}")

    @property
    def dimension(self) -> int:
        return self.axis.dimension

    @property
    def h(self) -> float:
        """阈值 h(p) = sqrt(1 − p^(1/(N−1)))"""
        return math.sqrt(max(0.0, 1.0 - self.p ** (1.0 / (self.dimension - 1))))
