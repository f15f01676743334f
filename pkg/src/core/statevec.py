"""
稠密态矢量核心

基本门、测量，以及纯态上的概率测度：Haar 测度、球冠测度 τ(p)。
"""

import math
from typing import Sequence, Tuple

import numpy as np
from scipy import stats

from src.models.state import MAX_QUBITS, CapSpec, PureState
from src.utils.errors import DimensionError, DomainError, ValidationError
from src.utils.logger import Logger
from src.utils.rng import SeedLike, as_generator

logger = Logger.get_logger(__name__)

PHASE_TOLERANCE = 1e-12
_SQRT_HALF = 1.0 / math.sqrt(2.0)

HADAMARD = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=np.complex128) * _SQRT_HALF


def _check_qubits(n: int) -> None:
    if not 1 <= n <= MAX_QUBITS:
        raise DimensionError(f"量子比特数必须在 1..{MAX_QUBITS} 内: {n}")


# ==================== 随机态采样 ====================

def _complex_gaussian(rng: np.random.Generator, shape) -> np.ndarray:
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def haar_samples(n: int, count: int, seed: SeedLike = None) -> np.ndarray:
    """
    批量 Haar 随机态

    Returns:
        形状 (count, 2^n) 的复数组，每行单位范数
    """
    _check_qubits(n)
    rng = as_generator(seed)
    g = _complex_gaussian(rng, (count, 1 << n))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def haar_sample(n: int, seed: SeedLike = None) -> PureState:
    """
    Haar 随机纯态：逐分量独立复高斯后归一化

    Args:
        n: 量子比特数 (1..14)
        seed: 随机种子

    Returns:
        单位范数态，分布在任意固定酉变换下不变
    """
    return PureState(haar_samples(n, 1, seed)[0])


def cap_threshold(p: float, N: int) -> float:
    """
    球冠阈值 h(p) = sqrt(1 − p^(1/(N−1)))

    Haar 随机态满足 Pr[|⟨ψ|0⟩| ≥ h] = (1 − h²)^(N−1)，解出 h 即得。
    """
    if not 0.0 < p <= 1.0:
        raise DomainError(f"p 必须在 (0,1] 内: {p}")
    if N < 2:
        raise DomainError(f"维度 N 至少为 2: {N}")
    return math.sqrt(max(0.0, -math.expm1(math.log(p) / (N - 1))))


def cap_samples(spec: CapSpec, count: int, seed: SeedLike = None) -> np.ndarray:
    """
    批量球冠均匀采样（逆变换法）

    r = sqrt(1 − (p·v)^(1/(N−1)))，v ~ U(0,1]；轴分量取 r·e^{iθ}，
    正交补填入按 sqrt(1 − r²) 缩放的 Haar 向量。

    Returns:
        形状 (count, N) 的复数组
    """
    rng = as_generator(seed)
    N = spec.dimension
    axis = spec.axis.amplitudes

    v = 1.0 - rng.random(count)
    r = np.sqrt(-np.expm1(np.log(spec.p * v) / (N - 1)))
    phase = np.exp(2j * np.pi * rng.random(count))

    g = _complex_gaussian(rng, (count, N))
    g -= np.outer(g @ axis.conj(), axis)
    g /= np.linalg.norm(g, axis=1, keepdims=True)

    out = (r * phase)[:, None] * axis[None, :] + np.sqrt(1.0 - r ** 2)[:, None] * g
    return out / np.linalg.norm(out, axis=1, keepdims=True)


def cap_sample(spec: CapSpec, seed: SeedLike = None) -> PureState:
    """在球冠 {|⟨ψ|axis⟩| ≥ h(p)} 上均匀采样一个态"""
    return PureState(cap_samples(spec, 1, seed)[0])


# ==================== 内积与门 ====================

def overlap(a: PureState, b: PureState) -> complex:
    """复内积 ⟨a|b⟩"""
    if a.dimension != b.dimension:
        raise DimensionError(f"维度不一致: {a.dimension} vs {b.dimension}")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def hadamard_transform(amplitudes: np.ndarray) -> np.ndarray:
    """对原始振幅数组做 H^⊗n（快速 Walsh–Hadamard 变换），返回新数组"""
    v = np.array(amplitudes, dtype=np.complex128)
    size = v.size
    half = 1
    while half < size:
        v = v.reshape(-1, 2, half)
        a = v[:, 0, :]
        b = v[:, 1, :]
        v = np.stack((a + b, a - b), axis=1)
        half *= 2
    return v.reshape(size) * (1.0 / math.sqrt(size))


def apply_hadamard_layer(state: PureState) -> PureState:
    """H^⊗n · state"""
    return state.evolve(hadamard_transform(state.amplitudes))


def apply_single_qubit_gate(state: PureState, gate: np.ndarray, qubit: int) -> PureState:
    """
    在第 qubit 个比特上作用 2×2 酉矩阵

    Args:
        state: 输入态
        gate: 2×2 复矩阵
        qubit: 比特下标，0 为最高位
    """
    n = state.n
    if not 0 <= qubit < n:
        raise DimensionError(f"比特下标越界: {qubit} (n={n})")
    tensor = state.amplitudes.reshape((1 << qubit, 2, 1 << (n - qubit - 1)))
    out = np.einsum("ij,ajb->aib", np.asarray(gate, dtype=np.complex128), tensor)
    return state.evolve(out.reshape(-1))


def apply_diagonal(state: PureState, phases: Sequence[complex]) -> PureState:
    """
    逐振幅乘以单位模相位

    Raises:
        ValidationError: 长度不符或存在非单位模相位
    """
    d = np.asarray(phases, dtype=np.complex128).reshape(-1)
    if d.size != state.dimension:
        raise ValidationError(f"相位长度 {d.size} 与维度 {state.dimension} 不符")
    worst = float(np.max(np.abs(np.abs(d) - 1.0)))
    if worst > PHASE_TOLERANCE:
        raise ValidationError(f"存在非单位模相位，偏差 {worst:.3e}")
    return state.evolve(state.amplitudes * d)


def householder_preparation(target: PureState) -> np.ndarray:
    """
    把 |0…0⟩ 映到 target（至多差一个全局相位）的 Householder 反射矩阵

    Returns:
        N×N 酉矩阵
    """
    psi = target.amplitudes
    a0 = psi[0]
    phase = a0 / abs(a0) if abs(a0) > 1e-15 else 1.0
    b = psi / phase
    e0 = np.zeros_like(psi)
    e0[0] = 1.0
    u = e0 - b
    norm = np.linalg.norm(u)
    identity = np.eye(psi.size, dtype=np.complex128)
    if norm < 1e-14:
        return identity
    u = u / norm
    return identity - 2.0 * np.outer(u, u.conj())


# ==================== 测量 ====================

def measure_register(state: PureState, qubit_indices: Sequence[int],
                     seed: SeedLike = None) -> Tuple[Tuple[int, ...], PureState, float]:
    """
    按 Born 规则测量若干比特

    Args:
        state: 被测态
        qubit_indices: 互不相同的比特下标
        seed: 随机种子

    Returns:
        (结果比特, 坍缩并重新归一化的态, 该结果的测量前概率)
    """
    indices = [int(q) for q in qubit_indices]
    if not indices:
        raise DimensionError("测量比特集合为空")
    n = state.n
    if len(set(indices)) != len(indices) or any(not 0 <= q < n for q in indices):
        raise DimensionError(f"测量比特下标非法: {indices} (n={n})")

    rng = as_generator(seed)
    tensor = state.amplitudes.reshape((2,) * n)
    rest = [q for q in range(n) if q not in indices]
    probs = np.sum(np.abs(np.transpose(tensor, indices + rest)) ** 2,
                   axis=tuple(range(len(indices), n))).reshape(-1)
    probs = probs / probs.sum()
    outcome_index = int(rng.choice(probs.size, p=probs))
    bits = tuple((outcome_index >> (len(indices) - 1 - j)) & 1 for j in range(len(indices)))

    mask = np.ones(state.dimension, dtype=bool)
    basis = np.arange(state.dimension)
    for q, bit in zip(indices, bits):
        mask &= ((basis >> (n - 1 - q)) & 1) == bit
    collapsed = np.where(mask, state.amplitudes, 0.0)
    probability = float(np.sum(np.abs(collapsed) ** 2))
    logger.debug(f"测量比特 {indices} 得到 {bits}，概率 {probability:.6f}")
    return bits, PureState(collapsed / math.sqrt(probability)), probability


def marginal_probability(state: PureState, qubit: int, value: int = 1) -> float:
    """单个比特取 value 的边缘概率（精确值，不采样）"""
    n = state.n
    basis = np.arange(state.dimension)
    mask = ((basis >> (n - 1 - qubit)) & 1) == value
    return float(np.sum(state.probabilities[mask]))


# ==================== 分布检验 ====================

def cap_survival(s: np.ndarray, p: float, N: int) -> np.ndarray:
    """球冠条件下 Pr[|⟨ψ|axis⟩| ≥ s] = (1 − s²)^(N−1)/p（s ≥ h(p)）"""
    s = np.clip(np.asarray(s, dtype=float), 0.0, 1.0)
    return np.minimum(1.0, (1.0 - s ** 2) ** (N - 1) / p)


def cap_ks_test(samples: np.ndarray, spec: CapSpec) -> float:
    """
    球冠样本的 |⟨ψ|axis⟩| 与理论条件分布的 Kolmogorov–Smirnov 检验

    Returns:
        p 值
    """
    mags = np.abs(np.asarray(samples) @ spec.axis.amplitudes.conj())
    N = spec.dimension
    result = stats.kstest(mags, lambda s: 1.0 - cap_survival(s, spec.p, N))
    return float(result.pvalue)


def haar_two_sample_test(first: np.ndarray, second: np.ndarray, index: int = 0) -> float:
    """
    两组样本在 |⟨index|ψ⟩|² 上的双样本 KS 检验

    Returns:
        p 值
    """
    a = np.abs(np.asarray(first)[:, index]) ** 2
    b = np.abs(np.asarray(second)[:, index]) ** 2
    return float(stats.ks_2samp(a, b).pvalue)
