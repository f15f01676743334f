"""
显式 h-网模块

前缀和界、见证编码/解码、逐比特序列化、QNET 见证文件格式，
以及（非构造性的）网大小公式。
"""

import math
import struct
from pathlib import Path
from typing import Sequence, Tuple, Union

import numpy as np

from src.models.state import PureState
from src.models.witness import QUARTER_PHASES, AdviceWitness
from src.utils.errors import DomainError, ValidationError, WitnessFormatError
from src.utils.logger import Logger

logger = Logger.get_logger(__name__)

WITNESS_MAGIC = b"QNET"
WITNESS_VERSION = 1
_HEADER = struct.Struct(">4sBBH")

_QUARTER = np.array(QUARTER_PHASES, dtype=np.complex128)


# ==================== 前缀和界 ====================

def prefix_lower_bound(N: int, k: int) -> float:
    """前缀和界的下界 sqrt(k/(N·ceil(log2 N)))"""
    return math.sqrt(k / (N * max(1, math.ceil(math.log2(N)))))


def prefix_bound(sorted_mags: Sequence[float], k: int) -> Tuple[int, float]:
    """
    在 t ∈ [1,k] 上最大化 (x_1+…+x_t)/√t

    Args:
        sorted_mags: 非增非负实数，平方和为 1
        k: 前缀长度上限，1 ≤ k ≤ N

    Returns:
        (t, 最大值)；值相同时取最小的 t

    Raises:
        ValidationError: 输入未排序、含负数或未归一化
    """
    x = np.asarray(sorted_mags, dtype=float).reshape(-1)
    N = x.size
    if N == 0 or np.any(x < 0):
        raise ValidationError("幅度序列必须非空且非负")
    if np.any(np.diff(x) > 1e-12):
        raise ValidationError("幅度序列必须非增")
    if abs(float(np.sum(x ** 2)) - 1.0) > 1e-9:
        raise ValidationError(f"幅度平方和偏离 1: {float(np.sum(x ** 2))!r}")
    if not 1 <= k <= N:
        raise ValidationError(f"k 必须在 1..{N} 内: {k}")

    values = np.cumsum(x[:k]) / np.sqrt(np.arange(1, k + 1))
    best = int(np.argmax(values))
    return best + 1, float(values[best])


# ==================== 见证编码 ====================

def witness_capacity(n: int, m: int) -> int:
    """比特预算 m 可容纳的项数 k = floor(m/(n+2))"""
    return m // (n + 2)


def overlap_guarantee(n: int, m: int) -> float:
    """解码态与目标态重叠的保证下界 sqrt(k/(2Nn))"""
    return math.sqrt(witness_capacity(n, m) / (2.0 * (1 << n) * n))


def nearest_quarter_phase(value: complex) -> int:
    """最近的四分之一相位编码，距离相同时取顺序 1, −1, i, −i 中靠前者"""
    unit = value / abs(value)
    return int(np.argmin(np.abs(unit - _QUARTER)))


def encode_witness(psi: PureState, m: int) -> AdviceWitness:
    """
    把态 psi 编码为 m 比特以内的经典见证

    按 |α_z| 非增排序，由前缀和界选 t，每项相位取最近的四分之一相位。

    Raises:
        DomainError: m < n+2
    """
    n = psi.n
    k = witness_capacity(n, m)
    if k < 1:
        raise DomainError(f"比特预算 m={m} 小于 n+2={n + 2}")

    alpha = psi.amplitudes
    mags = np.abs(alpha)
    order = np.argsort(-mags, kind="stable")
    t, value = prefix_bound(mags[order], min(k, psi.dimension))
    while t > 1 and mags[order[t - 1]] == 0.0:
        t -= 1

    entries = tuple((int(z), nearest_quarter_phase(alpha[z])) for z in order[:t])
    logger.debug(f"编码见证: n={n}, m={m}, k={k}, t={t}, 前缀值={value:.6f}")
    return AdviceWitness(n=n, entries=entries)


def decode_witness(w: AdviceWitness) -> PureState:
    """|φ⟩ = (1/√t) Σ β_{z_i}|z_i⟩"""
    amps = np.zeros(1 << w.n, dtype=np.complex128)
    for z, code in w.entries:
        amps[z] = QUARTER_PHASES[code]
    return PureState(amps / math.sqrt(w.t))


# ==================== 序列化 ====================

def serialize(w: AdviceWitness) -> str:
    """
    逐项写出 n 个下标比特（高位在前）与 2 个相位比特

    Returns:
        由 '0'/'1' 组成的比特串，长度 t·(n+2)
    """
    return "".join(format(z, f"0{w.n}b") + format(code, "02b") for z, code in w.entries)


def deserialize(bits: str, n: int) -> AdviceWitness:
    """
    解析比特串；末尾不足一项的比特视为填充，必须全为 0

    Raises:
        WitnessFormatError: 非法字符、填充非零、长度不足一项或下标重复
    """
    if n < 1:
        raise WitnessFormatError(f"比特数必须为正: {n}")
    if any(ch not in "01" for ch in bits):
        raise WitnessFormatError("比特串只能包含 0 和 1")
    width = n + 2
    usable = len(bits) - len(bits) % width
    if "1" in bits[usable:]:
        raise WitnessFormatError(f"长度 {len(bits)} 不是 {width} 的整数倍且填充非零")
    if usable == 0:
        raise WitnessFormatError("比特串不足一项")
    entries = tuple(
        (int(bits[i:i + n], 2), int(bits[i + n:i + width], 2))
        for i in range(0, usable, width)
    )
    return AdviceWitness(n=n, entries=entries)


def write_witness_file(w: AdviceWitness, path: Union[str, Path]) -> int:
    """
    写出 QNET 见证文件：魔数、版本、n、t（16 位大端）与按字节补零的比特串

    Returns:
        写入的字节数
    """
    bits = serialize(w)
    padded = bits + "0" * (-len(bits) % 8)
    payload = int(padded, 2).to_bytes(len(padded) // 8, "big") if padded else b""
    data = _HEADER.pack(WITNESS_MAGIC, WITNESS_VERSION, w.n, w.t) + payload
    Path(path).write_bytes(data)
    logger.info(f"写出见证文件 {path}: t={w.t}, {len(bits)} 比特")
    return len(data)


def read_witness_file(path: Union[str, Path]) -> AdviceWitness:
    """
    读取 QNET 见证文件

    Raises:
        WitnessFormatError: 魔数、版本或长度不符
    """
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise WitnessFormatError("见证文件过短")
    magic, version, n, t = _HEADER.unpack_from(data)
    if magic != WITNESS_MAGIC or version != WITNESS_VERSION:
        raise WitnessFormatError(f"见证文件头非法: {magic!r} v{version}")
    payload = data[_HEADER.size:]
    need = t * (n + 2)
    if len(payload) != (need + 7) // 8:
        raise WitnessFormatError(f"见证文件负载长度 {len(payload)} 与 t={t}, n={n} 不符")
    bits = "".join(format(byte, "08b") for byte in payload)
    if "1" in bits[need:]:
        raise WitnessFormatError("见证文件填充比特非零")
    return deserialize(bits[:need], n)


# ==================== 网大小公式 ====================

def net_size_bound(N: int, h: float) -> float:
    """
    h-网大小的数量级上界 N^(3/2)·log(2 + N·h²)/(1 − h²)^N（隐含常数取 1）

    只作为数量级参考，不构造网本身。

    Raises:
        DomainError: h 不在 (0,1) 内
    """
    if not 0.0 < h < 1.0:
        raise DomainError(f"h 必须在 (0,1) 内: {h}")
    if N < 1:
        raise DomainError(f"维度 N 必须为正: {N}")
    log_value = (1.5 * math.log(N) + math.log(math.log(2.0 + N * h * h))
                 - N * math.log1p(-h * h))
    try:
        return math.exp(log_value)
    except OverflowError:
        return math.inf
