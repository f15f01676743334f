"""
实验报告数据模型

搜索报告、混合论证记录与群核检测报告。
"""

from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np


@dataclass(frozen=True)
class SearchReport:
    """一次振幅放大与验证的查询记录"""

    found: bool
    queries_used: int
    iterations: int
    final_overlap: float
    success_probability: float = 0.0   # 最终 Hadamard 测试的精确接受概率

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class HybridTranscript:
    """
    混合论证记录

    deltas[t-1] = ||Φ_t − Φ_(t−1)||，bounds[t-1] = 2·sqrt(⟨ψ|ρ_t|ψ⟩)。
    """

    deltas: List[float] = field(default_factory=list)
    bounds: List[float] = field(default_factory=list)
    total_delta: float = 0.0
    accept_with_oracle: Optional[float] = None     # Φ_0 的接受概率（全部查询为 U_ψ）
    accept_with_identity: Optional[float] = None   # Φ_T 的接受概率（全部查询为 I）

    @property
    def T(self) -> int:
        return len(self.deltas)

    @property
    def max_violation(self) -> float:
        """max_t (delta_t − bound_t)，不超过 1e-9 即满足逐步不等式"""
        if not self.deltas:
            return 0.0
        return float(np.max(np.asarray(self.deltas) - np.asarray(self.bounds)))

    @property
    def mean_delta(self) -> float:
        return float(np.mean(self.deltas)) if self.deltas else 0.0

    @property
    def bias(self) -> Optional[float]:
        """两种黑盒下接受概率之差的绝对值"""
        if self.accept_with_oracle is None or self.accept_with_identity is None:
            return None
        return abs(self.accept_with_oracle - self.accept_with_identity)

    def satisfies_triangle(self, tolerance: float = 1e-9) -> bool:
        return self.total_delta <= sum(self.deltas) + tolerance

    def to_dict(self) -> Dict[str, Any]:
        return {
            "T": self.T,
            "deltas": list(self.deltas),
            "bounds": list(self.bounds),
            "total_delta": self.total_delta,
            "accept_with_oracle": self.accept_with_oracle,
            "accept_with_identity": self.accept_with_identity
        }


@dataclass
class KernelReport:
    """核平凡性检测结果"""

    trivial: bool
    kernel: Tuple[int, ...]            # 识别出的核（Γ 中的元素 id，升序）
    mode: str                          # "ehk" 或 "exhaustive"
    samples: int = 0                   # 陪集态样本数
    function_queries: int = 0          # 对 f̃ 的（叠加）查询次数
    query_bound: int = 0               # 50·ceil(log2|Γ|)² 标定上界
    log_likelihood_gap: float = 0.0

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["kernel"] = list(self.kernel)
        return data


@dataclass
class GnmReport:
    """GNM 验证结果"""

    accepted: bool
    failed_step: Optional[str]         # 未通过的步骤: "structure", "1", "2", "3a", "3b", "3c"
    queries: int
    query_bound: float
    details: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class MomentEstimate:
    """蒙特卡洛矩估计：均值与标准误"""

    mean: float
    std_error: float
    samples: int

    def within(self, expected: float, sigmas: float = 3.0) -> bool:
        """expected 是否落在 mean ± sigmas·std_error 内（标准误为 0 时要求 1e-12 以内）"""
        return abs(self.mean - expected) <= max(sigmas * self.std_error, 1e-12)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class PreparationResult:
    """高斯随机态制备结果"""

    state: Any                              # PureState，第一寄存器（已重新归一化）
    attempts: int
    flag_probabilities: List[float] = field(default_factory=list)   # 每次尝试中标志比特为 1 的概率

    @property
    def mean_flag_probability(self) -> float:
        return float(np.mean(self.flag_probabilities)) if self.flag_probabilities else 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n": self.state.n,
            "attempts": self.attempts,
            "mean_flag_probability": self.mean_flag_probability
        }


@dataclass
class AffineCheckReport:
    """仿射酉族检查结果"""

    N: int
    size: int
    nonzero_count: int
    self_violations: List[Tuple[int, float]] = field(default_factory=list)
    pair_violations: List[Tuple[int, int, float]] = field(default_factory=list)

    @property
    def relations_hold(self) -> bool:
        return not self.self_violations and not self.pair_violations

    @property
    def nonzero_bound_holds(self) -> bool:
        """非零成员数 M ≤ 2N"""
        return self.nonzero_count <= 2 * self.N

    @property
    def distinct_log2(self) -> int:
        """不同取值个数的以 2 为底对数上界（每个非零方向贡献 1 比特）"""
        return self.nonzero_count

    @property
    def distinct_bound_holds(self) -> bool:
        """2^M ≤ 4^N"""
        return self.distinct_log2 <= 2 * self.N

    def to_dict(self) -> Dict[str, Any]:
        return {
            "N": self.N,
            "size": self.size,
            "nonzero_count": self.nonzero_count,
            "relations_hold": self.relations_hold,
            "nonzero_bound_holds": self.nonzero_bound_holds,
            "distinct_log2": self.distinct_log2,
            "self_violations": [list(v) for v in self.self_violations],
            "pair_violations": [list(v) for v in self.pair_violations]
        }


@dataclass(frozen=True)
class StatisticCheck:
    """单个比较统计量"""

    name: str
    difference: float
    threshold: float

    @property
    def passed(self) -> bool:
        return self.difference <= self.threshold


@dataclass
class SmoothingReport:
    """两个态系综的矩统计比较"""

    epsilon: float
    checks: Dict[str, StatisticCheck] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks.values())

    def failed(self) -> List[str]:
        return sorted(name for name, check in self.checks.items() if not check.passed)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "epsilon": self.epsilon,
            "passed": self.passed,
            "checks": {name: {"difference": c.difference, "threshold": c.threshold, "passed": c.passed}
                       for name, c in sorted(self.checks.items())}
        }
