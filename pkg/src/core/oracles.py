"""
量子黑盒模块

标记态反射 U_|ψ⟩、恒等黑盒与 BQP/qpoly 黑盒，均带查询计数。
受控调用与普通调用各计 1 次查询。
"""

import threading
from abc import ABC, abstractmethod
from typing import Mapping, Optional, Union

import numpy as np

from src.models.state import PureState
from src.utils.errors import DimensionError, ValidationError
from src.utils.logger import Logger

logger = Logger.get_logger(__name__)


class QueryCounter:
    """
    线程安全的查询计数器

    多个并行试验可共享同一个黑盒，各自用 snapshot() 开窗口读取增量。
    """

    def __init__(self):
        self._count = 0
        self._lock = threading.Lock()

    def increment(self, amount: int = 1) -> int:
        with self._lock:
            self._count += amount
            return self._count

    @property
    def count(self) -> int:
        with self._lock:
            return self._count

    def snapshot(self) -> int:
        """当前计数，用作计数窗口起点"""
        return self.count

    def since(self, snapshot: int) -> int:
        """自 snapshot 以来的查询数"""
        return self.count - snapshot

    def reset(self) -> None:
        with self._lock:
            self._count = 0


class QuantumOracle(ABC):
    """
    作用在 n 比特寄存器上的自逆酉黑盒
    """

    def __init__(self, n: int):
        self.n = n
        self.counter = QueryCounter()

    @property
    def dimension(self) -> int:
        return 1 << self.n

    @property
    def queries(self) -> int:
        return self.counter.count

    @abstractmethod
    def _act(self, vectors: np.ndarray) -> np.ndarray:
        """
        对原始振幅做线性作用

        Args:
            vectors: 形状 (..., N) 的数组，最后一维是黑盒寄存器

        Returns:
            同形状的新数组
        """

    def apply(self, state: PureState) -> PureState:
        """
        普通调用一次黑盒

        Raises:
            DimensionError: 态维度与黑盒寄存器不符
        """
        if state.dimension != self.dimension:
            raise DimensionError(f"态维度 {state.dimension} 与黑盒维度 {self.dimension} 不符")
        self.counter.increment()
        return state.evolve(self._act(state.amplitudes))

    def apply_to_register(self, joint: PureState) -> PureState:
        """
        作用在联合态的低位 n 比特寄存器上（高位为工作区），计 1 次查询
        """
        if joint.dimension % self.dimension:
            raise DimensionError(f"联合态维度 {joint.dimension} 不含黑盒寄存器 {self.dimension}")
        matrix = joint.amplitudes.reshape(-1, self.dimension)
        self.counter.increment()
        return joint.evolve(self._act(matrix).reshape(-1))

    def apply_controlled(self, joint: PureState, control_index: int) -> PureState:
        """
        受控调用：控制比特为 1 的分支上作用黑盒，为 0 的分支保持不变

        联合态由控制比特与黑盒寄存器组成，其余比特按原顺序构成黑盒寄存器。

        Args:
            joint: n+1 比特联合态
            control_index: 控制比特下标
        """
        total = joint.n
        if total != self.n + 1:
            raise DimensionError(f"联合态应有 {self.n + 1} 比特，实际 {total}")
        if not 0 <= control_index < total:
            raise DimensionError(f"控制比特下标越界: {control_index}")

        tensor = joint.amplitudes.reshape((2,) * total)
        moved = np.moveaxis(tensor, control_index, 0).reshape(2, self.dimension).copy()
        moved[1] = self._act(moved[1])
        restored = np.moveaxis(moved.reshape((2,) * total), 0, control_index)
        self.counter.increment()
        return joint.evolve(restored.reshape(-1))


class MarkedStateOracle(QuantumOracle):
    """
    标记态黑盒 U_|ψ⟩ = I − 2|ψ⟩⟨ψ|

    把 |ψ⟩ 映到 −|ψ⟩，固定其正交补。
    """

    def __init__(self, marked: PureState):
        super().__init__(marked.n)
        self.marked = marked

    def _act(self, vectors: np.ndarray) -> np.ndarray:
        psi = self.marked.amplitudes
        coefficients = vectors @ psi.conj()
        return vectors - 2.0 * np.multiply.outer(coefficients, psi)


class IdentityOracle(QuantumOracle):
    """恒等黑盒：U = I，仍然计查询"""

    def _act(self, vectors: np.ndarray) -> np.ndarray:
        return np.array(vectors, copy=True)


def apply_marked(oracle: MarkedStateOracle, state: PureState) -> PureState:
    """|φ⟩ ↦ |φ⟩ − 2⟨ψ|φ⟩|ψ⟩，计 1 次查询"""
    return oracle.apply(state)


def apply_controlled(oracle: QuantumOracle, joint: PureState, control_index: int) -> PureState:
    """受控黑盒调用，计 1 次查询"""
    return oracle.apply_controlled(joint, control_index)


class QpolyOracle(QuantumOracle):
    """
    BQP/qpoly 黑盒

    作用在 2n 比特上：第一个寄存器（高位）放建议态，第二个寄存器放输入 x。
    U(|ψ_n⟩|x⟩) = (−1)^{L(x)}|ψ_n⟩|x⟩，与 |ψ_n⟩ 正交的态不变。
    """

    MAX_INPUT_QUBITS = 7

    def __init__(self, advice_state: PureState,
                 language_bits: Union[Mapping[int, int], np.ndarray]):
        n = advice_state.n
        if n > self.MAX_INPUT_QUBITS:
            raise DimensionError(f"输入比特数 {n} 超过 {self.MAX_INPUT_QUBITS}")
        super().__init__(2 * n)
        self.input_qubits = n
        self.advice_state = advice_state
        bits = np.zeros(1 << n, dtype=np.int8)
        if isinstance(language_bits, Mapping):
            for x, value in language_bits.items():
                if not 0 <= int(x) < (1 << n):
                    raise ValidationError(f"输入下标越界: {x}")
                bits[int(x)] = int(value) & 1
        else:
            array = np.asarray(language_bits).reshape(-1)
            if array.size != (1 << n):
                raise ValidationError(f"语言比特表长度应为 {1 << n}: {array.size}")
            bits[:] = array.astype(np.int8) & 1
        self.language_bits = bits
        bits.setflags(write=False)

    def language(self, x: int) -> int:
        """L(x)"""
        return int(self.language_bits[x])

    def _act(self, vectors: np.ndarray) -> np.ndarray:
        side = 1 << self.input_qubits
        psi = self.advice_state.amplitudes
        lead = vectors.shape[:-1]
        blocks = vectors.reshape(lead + (side, side))   # [..., 建议寄存器, x]
        flip = self.language_bits.astype(bool)
        out = np.array(blocks, copy=True)
        coefficients = np.einsum("a,...ax->...x", psi.conj(), blocks)
        correction = 2.0 * np.einsum("a,...x->...ax", psi, coefficients)
        out[..., flip] -= correction[..., flip]
        return out.reshape(vectors.shape)


def apply_qpoly(oracle: QpolyOracle, joint: PureState) -> PureState:
    """
    对 2n 比特联合态作用 BQP/qpoly 黑盒

    Raises:
        DimensionError: 联合态维度不是 2^(2n)
    """
    return oracle.apply(joint)


def describe(oracle: QuantumOracle, label: Optional[str] = None) -> str:
    """黑盒的简短描述，用于日志"""
    name = label or type(oracle).__name__
    return f"{name}(n={oracle.n}, queries={oracle.queries})"
