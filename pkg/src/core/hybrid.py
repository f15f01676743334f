"""
混合论证实验模块

逐步混合不等式、球冠测度下的期望重叠，以及成功率-查询数扫描。
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import integrate

from src.core.advice_net import decode_witness, encode_witness, serialize
from src.core.oracles import MarkedStateOracle
from src.core.search import query_budget, qcma_verify, Verdict
from src.core.statevec import cap_threshold, haar_sample, hadamard_transform, householder_preparation
from src.models.reports import HybridTranscript
from src.models.state import PureState
from src.utils.errors import DimensionError, DomainError, ValidationError
from src.utils.logger import Logger
from src.utils.rng import RngSeed

logger = Logger.get_logger(__name__)

Operator = Union[np.ndarray, Callable[[np.ndarray], np.ndarray]]


# ==================== 算法描述 ====================

@dataclass(frozen=True)
class GateStage:
    """固定酉变换：矩阵或作用在整个联合振幅向量上的函数"""

    operator: Operator
    label: str = "gate"

    def apply(self, vector: np.ndarray) -> np.ndarray:
        if callable(self.operator):
            out = self.operator(vector)
        else:
            out = self.operator @ vector
        if out.shape != vector.shape:
            raise DimensionError(f"门 {self.label} 输出维度 {out.shape} 与输入 {vector.shape} 不符")
        return out


@dataclass(frozen=True)
class QueryStage:
    """一次黑盒查询；control 为工作区中的控制比特（None 表示非受控）"""

    control: Optional[int] = None


Stage = Union[GateStage, QueryStage]


@dataclass
class AlgorithmSpec:
    """
    T 次查询算法：工作区（高位比特）加查询寄存器（低位 n 比特），
    从 |0…0⟩ 出发依次执行各阶段
    """

    query_qubits: int
    stages: Tuple[Stage, ...]
    workspace_qubits: int = 0
    accept_qubit: Optional[int] = None
    name: str = "algorithm"

    def __post_init__(self):
        self.stages = tuple(self.stages)
        total = self.query_qubits + self.workspace_qubits
        if self.query_qubits < 1 or total > 16:
            raise DimensionError(f"寄存器规模非法: 查询 {self.query_qubits} 工作区 {self.workspace_qubits}")
        for stage in self.stages:
            if isinstance(stage, QueryStage):
                if stage.control is not None and not 0 <= stage.control < self.workspace_qubits:
                    raise ValidationError(f"受控查询的控制比特不在工作区内: {stage.control}")
            elif isinstance(stage, GateStage):
                if not callable(stage.operator):
                    shape = np.shape(stage.operator)
                    if shape != (1 << total, 1 << total):
                        raise DimensionError(f"门 {stage.label} 形状 {shape} 与联合维度 {1 << total} 不符")
            else:
                raise ValidationError(f"未知阶段类型: {type(stage).__name__}")
        if self.accept_qubit is not None and not 0 <= self.accept_qubit < total:
            raise ValidationError(f"接受比特越界: {self.accept_qubit}")

    @property
    def T(self) -> int:
        """查询次数"""
        return sum(1 for stage in self.stages if isinstance(stage, QueryStage))

    @property
    def total_qubits(self) -> int:
        return self.query_qubits + self.workspace_qubits


def _apply_query(vector: np.ndarray, spec: AlgorithmSpec, psi: np.ndarray,
                 stage: QueryStage) -> np.ndarray:
    N = 1 << spec.query_qubits
    rows = vector.reshape(-1, N)
    coefficients = rows @ psi.conj()
    if stage.control is not None:
        workspace = np.arange(rows.shape[0])
        bit = (workspace >> (spec.workspace_qubits - 1 - stage.control)) & 1
        coefficients = coefficients * bit
    return (rows - 2.0 * np.outer(coefficients, psi)).reshape(-1)


def _simulate(spec: AlgorithmSpec, psi: np.ndarray, identity_prefix: int,
              record: Optional[List[np.ndarray]] = None) -> np.ndarray:
    """前 identity_prefix 次查询用恒等，其余用 U_ψ；可记录每次查询前的态"""
    vector = np.zeros(1 << spec.total_qubits, dtype=np.complex128)
    vector[0] = 1.0
    query_index = 0
    for stage in spec.stages:
        if isinstance(stage, QueryStage):
            if record is not None:
                record.append(vector.copy())
            if query_index >= identity_prefix:
                vector = _apply_query(vector, spec, psi, stage)
            query_index += 1
        else:
            vector = stage.apply(vector)
    return vector


def _query_weight(vector: np.ndarray, spec: AlgorithmSpec, psi: np.ndarray) -> float:
    """⟨ψ|ρ_t|ψ⟩：查询寄存器约化态在 ψ 上的权重，按工作区分支求和"""
    rows = vector.reshape(-1, 1 << spec.query_qubits)
    return float(np.sum(np.abs(rows @ psi.conj()) ** 2))


def _accept_probability(vector: np.ndarray, spec: AlgorithmSpec) -> Optional[float]:
    if spec.accept_qubit is None:
        return None
    basis = np.arange(vector.size)
    mask = ((basis >> (spec.total_qubits - 1 - spec.accept_qubit)) & 1) == 1
    return float(np.sum(np.abs(vector[mask]) ** 2))


def run_hybrid(alg: AlgorithmSpec, psi: PureState) -> HybridTranscript:
    """
    计算全部 Φ_t（前 t 次查询为恒等、其余为 U_ψ），共 T+1 次完整模拟

    ρ_t 取恒等（对照）运行中第 t 次查询前查询寄存器的约化态。

    Raises:
        DimensionError: psi 维度与查询寄存器不符
    """
    if psi.n != alg.query_qubits:
        raise DimensionError(f"ψ 比特数 {psi.n} 与查询寄存器 {alg.query_qubits} 不符")
    target = psi.amplitudes
    T = alg.T

    control_states: List[np.ndarray] = []
    finals = [_simulate(alg, target, t) for t in range(T)]
    finals.append(_simulate(alg, target, T, record=control_states))
    transcript = HybridTranscript(
        deltas=[float(np.linalg.norm(finals[t] - finals[t - 1])) for t in range(1, T + 1)],
        bounds=[2.0 * math.sqrt(_query_weight(control_states[t - 1], alg, target))
                for t in range(1, T + 1)],
        total_delta=float(np.linalg.norm(finals[T] - finals[0])),
        accept_with_oracle=_accept_probability(finals[0], alg),
        accept_with_identity=_accept_probability(finals[T], alg)
    )
    logger.debug(f"混合论证 {alg.name}: T={T}, 最大违背={transcript.max_violation:.3e}")
    return transcript


# ==================== 算法构造 ====================

def _register_map(spec_qubits: int, operator: Callable[[np.ndarray], np.ndarray]) -> Callable:
    """把作用在查询寄存器上的函数提升为作用在联合向量每个工作区分支上"""
    N = 1 << spec_qubits

    def lifted(vector: np.ndarray) -> np.ndarray:
        return operator(vector.reshape(-1, N)).reshape(-1)
    return lifted


def _reflection(axis: np.ndarray) -> Callable[[np.ndarray], np.ndarray]:
    """2|a⟩⟨a| − I，逐行作用"""
    def reflect(rows: np.ndarray) -> np.ndarray:
        return 2.0 * np.outer(rows @ axis.conj(), axis) - rows
    return reflect


def grover_algorithm(n: int, iterations: int) -> AlgorithmSpec:
    """H^⊗n 后交替执行查询与关于均匀叠加态的扩散"""
    uniform = PureState.uniform(n).amplitudes
    stages: List[Stage] = [GateStage(hadamard_transform, "H")]
    for _ in range(iterations):
        stages.append(QueryStage())
        stages.append(GateStage(_register_map(n, _reflection(uniform)), "diffusion"))
    return AlgorithmSpec(query_qubits=n, stages=tuple(stages), name=f"grover-{iterations}")


def preparation_algorithm(psi: PureState) -> AlgorithmSpec:
    """在查询寄存器中制备 |ψ⟩（差一个全局相位）后查询一次"""
    prepare = householder_preparation(psi)
    return AlgorithmSpec(query_qubits=psi.n,
                         stages=(GateStage(prepare, "prepare"), QueryStage()),
                         name="prepare-query")


def _single_qubit_on_workspace(spec_total: int, qubit: int, gate: np.ndarray) -> Callable:
    def apply(vector: np.ndarray) -> np.ndarray:
        tensor = vector.reshape((1 << qubit, 2, 1 << (spec_total - qubit - 1)))
        return np.einsum("ij,ajb->aib", gate, tensor).reshape(-1)
    return apply


def amplification_algorithm(phi: PureState, iterations: int) -> AlgorithmSpec:
    """
    建议态振幅放大算法：制备 |φ⟩，iterations 轮 (查询, R_φ)，最后做受控查询的 Hadamard 测试

    一个工作区比特作控制位，其取 1 的概率即接受概率。
    """
    n = phi.n
    prepare = householder_preparation(phi)
    hadamard = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=np.complex128) / math.sqrt(2.0)

    stages: List[Stage] = [GateStage(_register_map(n, lambda rows: rows @ prepare.T), "prepare")]
    for _ in range(iterations):
        stages.append(QueryStage())
        stages.append(GateStage(_register_map(n, _reflection(phi.amplitudes)), "reflect"))
    stages.append(GateStage(_single_qubit_on_workspace(n + 1, 0, hadamard), "H-control"))
    stages.append(QueryStage(control=0))
    stages.append(GateStage(_single_qubit_on_workspace(n + 1, 0, hadamard), "H-control"))
    return AlgorithmSpec(query_qubits=n, workspace_qubits=1, stages=tuple(stages),
                         accept_qubit=0, name=f"amplify-{iterations}")


# ==================== 球冠期望 ====================

def expected_overlap(p: float, N: int) -> float:
    """
    τ(p) 下 |⟨ψ|0⟩|² 的精确期望 1/N + h(p)²·(1 − 1/N)

    Raises:
        DomainError: p 不在 (0,1] 内
    """
    h = cap_threshold(p, N)
    return 1.0 / N + h * h * (1.0 - 1.0 / N)


def expected_overlap_quadrature(p: float, N: int) -> float:
    """
    数值积分 E[s²] = h² + ∫_{h²}^{1} (1−u)^(N−1)/p du，用于核对闭式
    """
    h2 = cap_threshold(p, N) ** 2
    upper = 1.0 - h2
    # 换元 w = 1 − u，被积函数集中在上端点附近
    points = [upper * (1.0 - 10.0 / N)] if N > 10 else None
    value, _ = integrate.quad(lambda w: math.exp((N - 1) * math.log(w) - math.log(p)) if w > 0 else 0.0,
                              0.0, upper, points=points, limit=200, epsabs=1e-14, epsrel=1e-12)
    return h2 + value


def cap_mixture_overlap(p: float, N: int, masses: Sequence[float],
                        weights: Sequence[float]) -> Tuple[float, float]:
    """
    球冠混合测度（各分量质量 ≥ p，因而整体 p-一致）的期望重叠，与 τ(p) 比较

    Returns:
        (混合测度期望, τ(p) 期望)
    """
    masses = [float(q) for q in masses]
    w = np.asarray(weights, dtype=float)
    if len(masses) != w.size or w.size == 0 or np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
        raise DomainError("混合权重必须非负、与分量一一对应且和为 1")
    if any(q < p or q > 1.0 for q in masses):
        raise DomainError(f"混合分量质量必须在 [p,1] 内: {masses}")
    mixture = float(sum(weight * expected_overlap(q, N) for weight, q in zip(w, masses)))
    return mixture, expected_overlap(p, N)


# ==================== 下界扫描 ====================

@dataclass
class SweepCell:
    """一个 (n, m, trial) 单元在各预算下的结果"""

    n: int
    m: int
    trial: int
    outcomes: Dict[int, Tuple[bool, float, float, bool, float]] = field(default_factory=dict)
    # budget -> (成功, 平均 delta, 最大违背, 偏差-距离关系成立, 精确接受概率)


def default_budgets(n: int, m: int, dense: bool = False) -> List[int]:
    """1, 2, 4, … 直到满预算 query_budget+1；dense 时取其间全部整数"""
    full = query_budget(n, max(m, n + 2)) + 1
    if dense:
        return list(range(1, full + 1))
    budgets = []
    value = 1
    while value < full:
        budgets.append(value)
        value *= 2
    budgets.append(full)
    return budgets


def _run_cell(n: int, m: int, trial: int, budgets: Sequence[int], seed: RngSeed,
              with_hybrid: bool) -> SweepCell:
    cell_seed = seed.spawn(n, m, trial)
    psi = haar_sample(n, cell_seed.spawn(0))
    m_eff = max(m, n + 2)
    witness = encode_witness(psi, m_eff)
    bits = serialize(witness)
    phi = decode_witness(witness)

    cell = SweepCell(n=n, m=m, trial=trial)
    for budget in budgets:
        oracle = MarkedStateOracle(psi)
        verdict, report = qcma_verify(oracle, bits, n, m_eff, cell_seed.spawn(1, budget),
                                      max_iters=max(0, budget - 1))
        mean_delta, violation, bias_ok = 0.0, 0.0, True
        if with_hybrid:
            transcript = run_hybrid(amplification_algorithm(phi, report.iterations), psi)
            mean_delta = transcript.mean_delta
            violation = transcript.max_violation
            bias = transcript.bias or 0.0
            bias_ok = bias <= transcript.total_delta + 1e-9
        cell.outcomes[budget] = (verdict is Verdict.ACCEPT, mean_delta, violation, bias_ok,
                                 report.success_probability)
    return cell


def lower_bound_sweep(n_range: Iterable[int], m_range: Iterable[int], trials: int,
                      seed: Union[RngSeed, int], budgets: Optional[Sequence[int]] = None,
                      threads: int = 1, with_hybrid: bool = True,
                      dense: bool = False) -> List[Dict[str, float]]:
    """
    成功率-查询预算扫描

    每个 (n, m) 抽 Haar 态 ψ，用构造性编码器给出见证，在若干受限查询预算 T
    下运行 QCMA 验证器（T 计入最后的 Hadamard 测试），并记录混合论证统计。
    m < n+2 时按 n+2 比特（单项见证）编码。

    Returns:
        按 (n, m, T) 排序的行：n, m, T, trials, successes, success, probability, mean_delta,
        max_delta_violation, bias_violations
    """
    seed = seed if isinstance(seed, RngSeed) else RngSeed(int(seed))
    grid = [(n, m) for n in sorted(set(n_range)) for m in sorted(set(m_range))]
    plan = {(n, m): sorted(set(budgets)) if budgets else default_budgets(n, m, dense) for n, m in grid}
    jobs = [(n, m, trial) for n, m in grid for trial in range(trials)]

    def work(job: Tuple[int, int, int]) -> SweepCell:
        n, m, trial = job
        return _run_cell(n, m, trial, plan[(n, m)], seed, with_hybrid)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            cells = list(pool.map(work, jobs))
    else:
        cells = [work(job) for job in jobs]

    rows: List[Dict[str, float]] = []
    for n, m in grid:
        group = sorted((c for c in cells if c.n == n and c.m == m), key=lambda c: c.trial)
        for budget in plan[(n, m)]:
            outcomes = [c.outcomes[budget] for c in group]
            successes = sum(1 for o in outcomes if o[0])
            rows.append({
                "n": n,
                "m": m,
                "T": budget,
                "trials": len(outcomes),
                "successes": successes,
                "success": successes / len(outcomes) if outcomes else 0.0,
                "probability": float(np.mean([o[4] for o in outcomes])) if outcomes else 0.0,
                "mean_delta": float(np.mean([o[1] for o in outcomes])) if outcomes else 0.0,
                "max_delta_violation": max((o[2] for o in outcomes), default=0.0),
                "bias_violations": sum(1 for o in outcomes if not o[3])
            })
    logger.info(f"下界扫描完成: {len(grid)} 个网格点, {len(jobs)} 个试验单元")
    return rows
