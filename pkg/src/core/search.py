"""
搜索与验证模块

Hadamard 测试 QMA 验证器、从建议态出发的振幅放大，以及端到端 QCMA 验证器。
"""

import math
from enum import Enum
from typing import Optional, Tuple

import numpy as np

from src.core.advice_net import decode_witness, deserialize, overlap_guarantee, witness_capacity
from src.core.oracles import MarkedStateOracle, QpolyOracle, QuantumOracle
from src.core.statevec import (HADAMARD, apply_single_qubit_gate, marginal_probability,
                               measure_register)
from src.models.reports import SearchReport
from src.models.state import PureState
from src.utils.errors import DimensionError, WitnessFormatError
from src.utils.logger import Logger
from src.utils.rng import SeedLike, as_generator

logger = Logger.get_logger(__name__)


class Verdict(Enum):
    """验证结论；MALFORMED 是确定性的结构拒绝，与概率性拒绝区分"""

    ACCEPT = "accept"
    REJECT = "reject"
    MALFORMED = "malformed"


# ==================== Hadamard 测试 ====================

def hadamard_test(oracle: QuantumOracle, phi: PureState,
                  seed: SeedLike = None) -> Tuple[bool, float]:
    """
    控制比特制备为 (|0⟩+|1⟩)/√2，受控调用黑盒，再对控制比特作 H 并测量

    对 U_|ψ⟩ 接受概率为 |⟨ψ|φ⟩|²；对恒等黑盒恰为 0。消耗 1 次查询。

    Returns:
        (是否接受, 精确接受概率)
    """
    if phi.dimension != oracle.dimension:
        raise DimensionError(f"态维度 {phi.dimension} 与黑盒维度 {oracle.dimension} 不符")
    joint = PureState.uniform(1).tensor(phi)
    joint = oracle.apply_controlled(joint, 0)
    joint = apply_single_qubit_gate(joint, HADAMARD, 0)
    probability = marginal_probability(joint, 0, 1)
    bits, _, _ = measure_register(joint, [0], seed)
    return bits[0] == 1, probability


def qpoly_decide(oracle: QpolyOracle, x: int, seed: SeedLike = None) -> Tuple[int, float]:
    """
    以 |ψ_n⟩ 为建议，在 |ψ_n⟩|x⟩ 上做 Hadamard 测试判定 L(x)

    Returns:
        (判定比特, 输出 1 的精确概率)；概率恰为 L(x)
    """
    n = oracle.input_qubits
    if not 0 <= x < (1 << n):
        raise DimensionError(f"输入越界: {x} (n={n})")
    joint = oracle.advice_state.tensor(PureState.basis(n, x))
    accepted, probability = hadamard_test(oracle, joint, seed)
    return int(accepted), probability


# ==================== 振幅放大 ====================

def _rotation_angle(oracle: QuantumOracle, phi: PureState) -> float:
    """θ = arcsin|⟨ψ|φ⟩|；非标记态黑盒视为零重叠"""
    if not isinstance(oracle, MarkedStateOracle):
        return 0.0
    value = abs(np.vdot(oracle.marked.amplitudes, phi.amplitudes))
    return math.asin(min(1.0, value))


def grover_schedule(theta: float, max_iters: int) -> int:
    """
    迭代次数 floor(π/(4θ))，受 max_iters 限制

    若 sin²((2T+1)θ) < 1/2，再比较 T−1 与 T+1 取最优（并列取较小者）。
    """
    if theta <= 0.0 or max_iters <= 0:
        return 0
    T = min(int(math.floor(math.pi / (4.0 * theta))), max_iters)
    if math.sin((2 * T + 1) * theta) ** 2 >= 0.5:
        return T
    candidates = [t for t in (T - 1, T, T + 1) if 0 <= t <= max_iters]
    return max(candidates, key=lambda t: (math.sin((2 * t + 1) * theta) ** 2, -t))


def reflect_about(phi: PureState, state: PureState) -> PureState:
    """R_φ = 2|φ⟩⟨φ| − I"""
    a = phi.amplitudes
    v = state.amplitudes
    return state.evolve(2.0 * np.vdot(a, v) * a - v)


def amplitude_amplify(oracle: QuantumOracle, phi: PureState, max_iters: int,
                      seed: SeedLike = None) -> SearchReport:
    """
    从 |φ⟩ 出发迭代 Q = R_φ ∘ U_ψ，最后做一次 Hadamard 测试

    Args:
        oracle: 黑盒
        phi: 起始（建议）态
        max_iters: 迭代次数上限
        seed: 测量随机种子

    Returns:
        SearchReport，queries_used = T + 1
    """
    start = oracle.counter.snapshot()
    theta = _rotation_angle(oracle, phi)
    T = grover_schedule(theta, max(0, int(max_iters)))

    state = phi
    for _ in range(T):
        state = reflect_about(phi, oracle.apply(state))

    accepted, probability = hadamard_test(oracle, state, as_generator(seed))
    final_overlap = 0.0
    if isinstance(oracle, MarkedStateOracle):
        final_overlap = abs(complex(np.vdot(oracle.marked.amplitudes, state.amplitudes)))

    report = SearchReport(
        found=accepted,
        queries_used=oracle.counter.since(start),
        iterations=T,
        final_overlap=final_overlap,
        success_probability=probability
    )
    logger.debug(f"振幅放大: θ={theta:.6f}, T={T}, 成功概率={probability:.6f}")
    return report


# ==================== QCMA 验证器 ====================

def query_budget(n: int, m: int) -> int:
    """迭代预算 ceil(π/(4·arcsin h))，h = sqrt(k/(2Nn))"""
    h = min(1.0, overlap_guarantee(n, m))
    if h <= 0.0:
        return 0
    return int(math.ceil(math.pi / (4.0 * math.asin(h))))


def qcma_verify(oracle: QuantumOracle, witness_bits: str, n: int, m: int,
                seed: SeedLike = None,
                max_iters: Optional[int] = None) -> Tuple[Verdict, SearchReport]:
    """
    QCMA 验证：解码见证、振幅放大、Hadamard 测试

    完备性：诚实见证与 U_|ψ⟩ 下接受概率 ≥ 2/3；可靠性：恒等黑盒下接受概率为 0。

    Args:
        oracle: 黑盒
        witness_bits: 见证比特串
        n: 量子比特数
        m: 见证比特预算
        seed: 随机种子
        max_iters: 额外的迭代上限（用于扫描受限查询预算）

    Returns:
        (结论, 搜索报告)；见证格式错误时为 (MALFORMED, 零查询报告)
    """
    if oracle.n != n:
        raise DimensionError(f"黑盒比特数 {oracle.n} 与 n={n} 不符")
    try:
        if len(witness_bits) > m:
            raise WitnessFormatError(f"见证长度 {len(witness_bits)} 超过预算 m={m}")
        witness = deserialize(witness_bits, n)
        if witness.t > witness_capacity(n, m):
            raise WitnessFormatError(f"见证项数 {witness.t} 超过 k={witness_capacity(n, m)}")
    except WitnessFormatError as e:
        logger.warning(f"见证格式错误，结构性拒绝: {e}")
        return Verdict.MALFORMED, SearchReport(False, 0, 0, 0.0, 0.0)

    budget = query_budget(n, m)
    iterations = budget if max_iters is None else min(budget, max(0, int(max_iters)))
    report = amplitude_amplify(oracle, decode_witness(witness), iterations, seed)
    verdict = Verdict.ACCEPT if report.found else Verdict.REJECT
    logger.debug(f"QCMA 验证: {verdict.value}, 查询 {report.queries_used}/{budget + 1}")
    return verdict, report
