"""
伪随机酉系综模块

ς_k 对角-Hadamard 系综、经典黑盒提供的随机相位、高斯随机态制备、
碰撞概率统计、ε-平滑代理统计以及仿射酉族检查。
"""

import itertools
import math
import threading
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import stats

from src.core.oracles import QueryCounter
from src.core.statevec import apply_diagonal, apply_hadamard_layer, haar_samples, measure_register
from src.models.reports import (AffineCheckReport, MomentEstimate, PreparationResult,
                                SmoothingReport, StatisticCheck)
from src.models.state import MAX_QUBITS, PureState
from src.utils.errors import DimensionError, DomainError, RetryExhaustedError, ValidationError
from src.utils.logger import Logger
from src.utils.rng import RngSeed, SeedLike, as_generator

logger = Logger.get_logger(__name__)

MIN_COLLISION_SAMPLES = 1000


# ==================== 经典黑盒 ====================

class ClassicalOracle:
    """
    经典随机源 A(i, x)：每层 i 对每个基态 x 给出一个 n 比特无符号整数

    由种子惰性、确定性地生成，按层缓存；每填充一层计 N 次求值。
    """

    def __init__(self, n: int, seed: Union[RngSeed, int] = 0, fixed: Optional[int] = None):
        if not 1 <= n <= MAX_QUBITS:
            raise DimensionError(f"比特数越界: {n}")
        self.n = n
        self.seed = seed if isinstance(seed, RngSeed) else RngSeed(int(seed))
        self.fixed = fixed
        self.counter = QueryCounter()
        self._layers: Dict[int, np.ndarray] = {}
        self._lock = threading.Lock()

    @property
    def dimension(self) -> int:
        return 1 << self.n

    def layer(self, i: int) -> np.ndarray:
        """第 i 层的全部取值 A(i, ·)，只读 uint64 数组"""
        cached = self._layers.get(i)
        if cached is not None:
            return cached
        with self._lock:
            cached = self._layers.get(i)
            if cached is None:
                if self.fixed is not None:
                    values = np.full(self.dimension, self.fixed % self.dimension, dtype=np.uint64)
                else:
                    rng = self.seed.spawn(1, i).generator()
                    values = rng.integers(0, self.dimension, size=self.dimension, dtype=np.uint64)
                values.setflags(write=False)
                self._layers[i] = values
                self.counter.increment(self.dimension)
                cached = values
        return cached

    def value(self, i: int, x: int) -> int:
        """A(i, x)"""
        if not 0 <= x < self.dimension:
            raise DimensionError(f"基态下标越界: {x}")
        return int(self.layer(i)[x])

    def gaussian(self, i: int, variance: float) -> np.ndarray:
        """第 i 组复高斯数（均值 0，方差 variance），长度 N，不缓存"""
        rng = self.seed.spawn(2, i).generator()
        scale = math.sqrt(variance / 2.0)
        self.counter.increment(self.dimension)
        return scale * (rng.standard_normal(self.dimension) + 1j * rng.standard_normal(self.dimension))

    def to_dict(self) -> Dict[str, int]:
        return {"seed": self.seed.seed, "n": self.n}


# ==================== ς_k 系综 ====================

@dataclass(frozen=True)
class SigmaKSpec:
    """U = D_k H^⊗n ··· D_1 H^⊗n，D_i 的相位为 ω^A(i,x)，ω = e^(2πi/2^n)"""

    n: int
    k: int
    oracle: ClassicalOracle

    def __post_init__(self):
        if self.k < 0:
            raise DomainError(f"层数必须非负: {self.k}")
        if self.oracle.n != self.n:
            raise DimensionError(f"经典黑盒比特数 {self.oracle.n} 与 n={self.n} 不符")

    def phases(self, i: int) -> np.ndarray:
        """第 i 层对角相位；指数先按 2^n 取模再转为复数"""
        exponents = self.oracle.layer(i) % np.uint64(1 << self.n)
        return np.exp(2j * np.pi * exponents.astype(np.float64) / (1 << self.n))

    def to_dict(self) -> Dict[str, int]:
        return {"seed": self.oracle.seed.seed, "n": self.n, "k": self.k}


def apply_sigma_k(state: PureState, spec: SigmaKSpec) -> PureState:
    """依次作用 H 层与 D_1 … D_k；k=0 时原样返回"""
    if state.n != spec.n:
        raise DimensionError(f"态比特数 {state.n} 与 ς_k 的 n={spec.n} 不符")
    for i in range(1, spec.k + 1):
        state = apply_diagonal(apply_hadamard_layer(state), spec.phases(i))
    return state


class StateEnsemble(ABC):
    """态系综：sample(rng) 返回一个输出态的振幅数组"""

    def __init__(self, n: int):
        if not 1 <= n <= MAX_QUBITS:
            raise DimensionError(f"比特数越界: {n}")
        self.n = n

    @property
    def dimension(self) -> int:
        return 1 << self.n

    @abstractmethod
    def sample(self, rng: np.random.Generator) -> np.ndarray:
        pass

    def sample_many(self, count: int, seed: SeedLike = None) -> np.ndarray:
        rng = as_generator(seed)
        return np.stack([self.sample(rng) for _ in range(count)])


class HaarEnsemble(StateEnsemble):
    """Haar 随机态"""

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        return haar_samples(self.n, 1, rng)[0]

    def sample_many(self, count: int, seed: SeedLike = None) -> np.ndarray:
        return haar_samples(self.n, count, seed)


class SigmaKEnsemble(StateEnsemble):
    """U|0^n⟩，U 取自 ς_k；每个样本使用一个新种子的经典黑盒"""

    def __init__(self, n: int, k: int):
        super().__init__(n)
        if k < 0:
            raise DomainError(f"层数必须非负: {k}")
        self.k = k

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        oracle = ClassicalOracle(self.n, RngSeed(int(rng.integers(0, 1 << 63))))
        return apply_sigma_k(PureState.basis(self.n, 0), SigmaKSpec(self.n, self.k, oracle)).amplitudes


class PreparedStateEnsemble(StateEnsemble):
    """高斯随机态制备在标志比特为 1 时的输出"""

    def __init__(self, n: int, precision: int, max_attempts: Optional[int] = None):
        super().__init__(n)
        self.precision = precision
        self.max_attempts = max_attempts

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        result = prepare_random_state(self.n, self.precision, seed=rng, max_attempts=self.max_attempts)
        return result.state.amplitudes


# ==================== 碰撞概率 ====================

def collision_estimate(ensemble: StateEnsemble, samples: int, seed: SeedLike = None) -> MomentEstimate:
    """
    估计 E[Σ_x |⟨x|U|0^n⟩|⁴]，每个样本精确计算输出分布

    Returns:
        MomentEstimate（均值与标准误）
    """
    if samples < 2:
        raise ValidationError(f"样本数至少为 2: {samples}")
    amplitudes = ensemble.sample_many(samples, seed)
    values = np.sum(np.abs(amplitudes) ** 4, axis=1)
    estimate = MomentEstimate(
        mean=float(np.mean(values)),
        std_error=float(np.std(values, ddof=1) / math.sqrt(samples)),
        samples=samples
    )
    logger.debug(f"碰撞概率估计: {type(ensemble).__name__} n={ensemble.n}, "
                 f"{estimate.mean:.6f} ± {estimate.std_error:.2e}")
    return estimate


def collision_probability(ensemble: StateEnsemble, samples: int, seed: SeedLike = None) -> float:
    """
    碰撞概率统计量

    Raises:
        ValidationError: 样本数少于 1000
    """
    if samples < MIN_COLLISION_SAMPLES:
        raise ValidationError(f"样本数至少为 {MIN_COLLISION_SAMPLES}: {samples}")
    return collision_estimate(ensemble, samples, seed).mean


def haar_collision(N: int) -> float:
    """Haar 态输出分布碰撞概率的期望 2/(N+1)"""
    return 2.0 / (N + 1)


# ==================== 高斯随机态制备 ====================

def precision_bits(n: int, precision: int) -> int:
    """q(n) = (n + p(n))²"""
    return (n + precision) ** 2


def _round_to_bits(values: np.ndarray, q: int) -> np.ndarray:
    """实部虚部分别舍入到 2^(−q) 的整数倍"""
    def rnd(x: np.ndarray) -> np.ndarray:
        return np.ldexp(np.round(np.ldexp(x, q)), -q)
    return rnd(values.real) + 1j * rnd(values.imag)


def prepare_random_state(n: int, precision: int, oracle: Optional[ClassicalOracle] = None,
                         seed: SeedLike = None, max_attempts: Optional[int] = None) -> PreparationResult:
    """
    高斯随机态制备

    每次尝试构造 2^(−n/2) Σ_x |x⟩(sqrt(1−|α_x|²)|0⟩ + α_x|1⟩)，α_x 为方差 1/q 的复高斯数，
    舍入到 q 比特精度后截断到 |α_x| ≤ 1；测量标志比特（最后一个比特），得 1 则返回第一寄存器。

    Args:
        n: 比特数
        precision: 多项式 p(n) 的取值
        oracle: 提供 α 的经典黑盒；为 None 时直接由 seed 采样
        seed: 测量（及无黑盒时 α）的随机种子
        max_attempts: 尝试次数上限，默认 20·q

    Raises:
        RetryExhaustedError: 尝试次数用尽
    """
    if not 1 <= n < MAX_QUBITS or precision < 0:
        raise DomainError(f"参数非法: n={n}, p={precision}")
    q = precision_bits(n, precision)
    limit = max_attempts if max_attempts is not None else 20 * q
    if limit < 1:
        raise DomainError(f"max_attempts 必须至少为 1: {limit}")
    rng = as_generator(seed)
    N = 1 << n
    scale = math.sqrt(1.0 / (2.0 * q))

    flags: List[float] = []
    for attempt in range(limit):
        if oracle is not None:
            alpha = oracle.gaussian(attempt, 1.0 / q)
        else:
            alpha = scale * (rng.standard_normal(N) + 1j * rng.standard_normal(N))
        alpha = _round_to_bits(alpha, q)
        magnitude = np.abs(alpha)
        over = magnitude > 1.0
        alpha[over] = alpha[over] / magnitude[over]

        joint = np.empty(2 * N, dtype=np.complex128)
        joint[0::2] = np.sqrt(np.clip(1.0 - np.abs(alpha) ** 2, 0.0, None))
        joint[1::2] = alpha
        joint /= math.sqrt(N)
        bits, collapsed, probability = measure_register(PureState(joint), [n], rng)
        flags.append(probability if bits[0] == 1 else 1.0 - probability)
        if bits[0] == 1:
            state = PureState.from_amplitudes(collapsed.amplitudes[1::2], normalize=True)
            logger.debug(f"随机态制备成功: n={n}, q={q}, 尝试 {attempt + 1} 次")
            return PreparationResult(state=state, attempts=attempt + 1, flag_probabilities=flags)

    logger.warning(f"随机态制备失败: n={n}, q={q}, 尝试 {limit} 次")
    raise RetryExhaustedError(f"{limit} 次尝试均未观测到标志比特 1", attempts=limit)


# ==================== 仿射酉族 ====================

@dataclass
class AffineUnitaryFamily:
    """E_i = U(X_i) − I 的矩阵族"""

    N: int
    E: Tuple[np.ndarray, ...]

    def __post_init__(self):
        self.E = tuple(np.asarray(e, dtype=np.complex128) for e in self.E)
        for i, e in enumerate(self.E):
            if e.shape != (self.N, self.N):
                raise DimensionError(f"第 {i} 个矩阵形状 {e.shape} 不是 {self.N}×{self.N}")

    def __len__(self) -> int:
        return len(self.E)

    def unitary(self, bits: Sequence[int]) -> np.ndarray:
        """U(X) = I + Σ X_i E_i"""
        if len(bits) != len(self.E):
            raise DimensionError(f"赋值长度 {len(bits)} 与族大小 {len(self.E)} 不符")
        total = np.eye(self.N, dtype=np.complex128)
        for bit, e in zip(bits, self.E):
            if bit:
                total = total + e
        return total


def check_affine_family(fam: AffineUnitaryFamily, tolerance: float = 1e-9,
                        require_self_relation: bool = True) -> AffineCheckReport:
    """
    检查 E_i E_i† = −E_i − E_i†（U(X_i) 酉）与 E_i E_j† + E_j E_i† = 0（i ≠ j）

    require_self_relation=False 时只检查两两关系，适用于一般的非零矩阵族。
    """
    report = AffineCheckReport(N=fam.N, size=len(fam), nonzero_count=0)
    report.nonzero_count = sum(1 for e in fam.E if np.linalg.norm(e) > tolerance)
    if require_self_relation:
        for i, e in enumerate(fam.E):
            residual = float(np.linalg.norm(e @ e.conj().T + e + e.conj().T))
            if residual > tolerance:
                report.self_violations.append((i, residual))
    for i, j in itertools.combinations(range(len(fam)), 2):
        a, b = fam.E[i], fam.E[j]
        residual = float(np.linalg.norm(a @ b.conj().T + b @ a.conj().T))
        if residual > tolerance:
            report.pair_violations.append((i, j, residual))

    if report.relations_hold and not report.nonzero_bound_holds:
        logger.error(f"关系全部成立但非零成员 {report.nonzero_count} 超过 2N={2 * fam.N}")
    logger.debug(f"仿射族检查: N={fam.N}, 大小 {len(fam)}, 非零 {report.nonzero_count}, "
                 f"违背 {len(report.self_violations)}+{len(report.pair_violations)}")
    return report


def affine_family_from_unitaries(unitaries: Sequence[np.ndarray], tolerance: float = 1e-9) -> AffineUnitaryFamily:
    """
    由显式酉矩阵 U(X_i) 构造 E_i = U(X_i) − I

    Raises:
        ValidationError: 某个矩阵不是酉矩阵
    """
    if not unitaries:
        raise ValidationError("酉矩阵列表为空")
    mats = [np.asarray(u, dtype=np.complex128) for u in unitaries]
    N = mats[0].shape[0]
    identity = np.eye(N, dtype=np.complex128)
    for i, u in enumerate(mats):
        if u.shape != (N, N):
            raise DimensionError(f"第 {i} 个矩阵形状 {u.shape} 不是 {N}×{N}")
        if np.linalg.norm(u @ u.conj().T - identity) > tolerance:
            raise ValidationError(f"第 {i} 个矩阵不是酉矩阵")
    return AffineUnitaryFamily(N=N, E=tuple(u - identity for u in mats))


def diagonal_sign_family(N: int) -> AffineUnitaryFamily:
    """E_i = −2|i⟩⟨i|，即 U(X_i) 翻转第 i 个基态的符号"""
    family = []
    for i in range(N):
        e = np.zeros((N, N), dtype=np.complex128)
        e[i, i] = -2.0
        family.append(e)
    return AffineUnitaryFamily(N=N, E=tuple(family))


def pauli_family() -> AffineUnitaryFamily:
    """{X, Y, Z, iI}：两两反对易，达到 M = 2N"""
    x = np.array([[0, 1], [1, 0]], dtype=np.complex128)
    y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
    z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
    return AffineUnitaryFamily(N=2, E=(x, y, z, 1j * np.eye(2, dtype=np.complex128)))


# ==================== ε-平滑代理统计 ====================

def _as_amplitudes(sample: Union[np.ndarray, Sequence[PureState]]) -> np.ndarray:
    if isinstance(sample, np.ndarray):
        return sample.reshape(sample.shape[0], -1)
    return np.stack([state.amplitudes for state in sample])


def _variance_error(values: np.ndarray) -> np.ndarray:
    """样本方差的标准误，按四阶中心矩估计"""
    centered = values - values.mean(axis=0)
    m2 = np.mean(centered ** 2, axis=0)
    m4 = np.mean(centered ** 4, axis=0)
    return np.sqrt(np.clip(m4 - m2 ** 2, 0.0, None) / values.shape[0])


def smoothing_distance_proxy(sample_a, sample_b, epsilon: float,
                             alpha: float = 0.0027) -> SmoothingReport:
    """
    用矩统计量比较两个态系综，代替不可直接计算的变差距离

    统计量：每个基态 x 上 |⟨x|ψ⟩|² 的均值与方差、碰撞概率。阈值为 Bonferroni 校正后的
    z·标准误，再加上 ε-球容差（均值加 ε，方差与碰撞概率加 2ε）。

    Args:
        sample_a: 形状 (count, N) 的振幅数组或 PureState 列表
        sample_b: 同上
        epsilon: 平滑半径
        alpha: 整体显著性水平（默认对应双侧 3σ）

    Raises:
        DimensionError: 两组样本维度不同
    """
    a = _as_amplitudes(sample_a)
    b = _as_amplitudes(sample_b)
    if a.shape[1] != b.shape[1]:
        raise DimensionError(f"系综维度不同: {a.shape[1]} 与 {b.shape[1]}")
    if a.shape[0] < 2 or b.shape[0] < 2:
        raise ValidationError("每组至少需要 2 个样本")
    if epsilon < 0:
        raise DomainError(f"epsilon 必须非负: {epsilon}")

    N = a.shape[1]
    z = float(stats.norm.ppf(1.0 - alpha / (2.0 * (2 * N + 1))))
    pa, pb = np.abs(a) ** 2, np.abs(b) ** 2
    na, nb = pa.shape[0], pb.shape[0]
    report = SmoothingReport(epsilon=epsilon)

    mean_diff = np.abs(pa.mean(axis=0) - pb.mean(axis=0))
    mean_err = np.sqrt(pa.var(axis=0, ddof=1) / na + pb.var(axis=0, ddof=1) / nb)
    worst = int(np.argmax(mean_diff - z * mean_err))
    report.checks["mean"] = StatisticCheck("mean", float(mean_diff[worst]),
                                           float(z * mean_err[worst] + epsilon))

    var_diff = np.abs(pa.var(axis=0, ddof=1) - pb.var(axis=0, ddof=1))
    var_err = np.sqrt(_variance_error(pa) ** 2 + _variance_error(pb) ** 2)
    worst = int(np.argmax(var_diff - z * var_err))
    report.checks["variance"] = StatisticCheck("variance", float(var_diff[worst]),
                                               float(z * var_err[worst] + 2.0 * epsilon))

    ca, cb = np.sum(pa ** 2, axis=1), np.sum(pb ** 2, axis=1)
    coll_err = math.sqrt(ca.var(ddof=1) / na + cb.var(ddof=1) / nb)
    report.checks["collision"] = StatisticCheck("collision", abs(float(ca.mean() - cb.mean())),
                                                z * coll_err + 2.0 * epsilon)

    logger.debug(f"平滑代理统计: N={N}, ε={epsilon}, 未通过 {report.failed()}")
    return report
