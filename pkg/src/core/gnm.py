"""
群非成员（GNM）验证模块

高效生成集与规范分解、由见证诱导的原始映射 f、同态测试与自纠正 f̃、
模型侧成员判定、核平凡性检测（陪集态采样或穷举）以及完整的 QCMA 验证器。

验证器只通过 GroupOracle 的黑盒调用接触标签。
"""

import math
from collections import Counter
from dataclasses import dataclass
from typing import Callable, Dict, FrozenSet, List, Optional, Sequence, Tuple

import numpy as np

from src.core.group_oracle import GroupOracle, oracle_identity, oracle_multiply
from src.core.groups import ExplicitGroup, make_group_from_spec
from src.models.reports import GnmReport, KernelReport
from src.models.witness import GnmWitness
from src.utils.errors import GroupError, RetryExhaustedError
from src.utils.logger import Logger
from src.utils.rng import SeedLike, as_generator

logger = Logger.get_logger(__name__)

GENERATOR_FACTOR = 4
GENERATOR_ROUNDS = 100
HOMOMORPHISM_TRIALS = 24
DEFAULT_REPETITION = 6
KERNEL_SAMPLE_CAP = 50
SAMPLES_PER_CANDIDATE = 12
POSTERIOR_THRESHOLD = 0.99
QUERY_CONSTANT = 400


def log_order(order: int) -> int:
    """ceil(log2 order)，至少为 1"""
    return max(1, math.ceil(math.log2(order))) if order > 1 else 1


def generator_limit(order: int) -> int:
    """k ≤ 4·ceil(log2 order)"""
    return GENERATOR_FACTOR * math.ceil(math.log2(order)) if order > 1 else 0


def query_bound(order: int) -> int:
    """验证总查询数的上界 C·L³，L = ceil(log2(order+1))"""
    return QUERY_CONSTANT * max(1, math.ceil(math.log2(order + 1))) ** 3


# ==================== 高效生成集 ====================

def _cube_mask(group: ExplicitGroup, gens: Sequence[int]) -> np.ndarray:
    """{γ_1^e_1 ··· γ_k^e_k} 的指示向量"""
    mask = np.zeros(group.order, dtype=bool)
    mask[group.identity] = True
    for g in gens:
        members = np.flatnonzero(mask)
        mask[group.table[members, int(g)]] = True
    return mask


def efficient_generating_set(group: ExplicitGroup, seed: SeedLike = None) -> List[int]:
    """
    随机立方倍增：不断从当前立方的补集中均匀选取新元素追加到末尾，直到覆盖全群

    超过 4·ceil(log2 order) 个元素则整轮重来，最多 100 轮。

    Raises:
        RetryExhaustedError: 轮数用尽
    """
    rng = as_generator(seed)
    limit = generator_limit(group.order)
    for attempt in range(1, GENERATOR_ROUNDS + 1):
        gens: List[int] = []
        mask = np.zeros(group.order, dtype=bool)
        mask[group.identity] = True
        while not mask.all() and len(gens) < limit:
            outside = np.flatnonzero(~mask)
            g = int(outside[rng.integers(0, outside.size)])
            gens.append(g)
            members = np.flatnonzero(mask)
            mask[group.table[members, g]] = True
        if mask.all():
            logger.debug(f"{group.name}: 生成集大小 {len(gens)}（第 {attempt} 轮）")
            return gens
    raise RetryExhaustedError(f"{group.name}: {GENERATOR_ROUNDS} 轮内未找到高效生成集", GENERATOR_ROUNDS)


def verify_generating_set(group: ExplicitGroup, gens: Sequence[int]) -> bool:
    """穷举立方展开检查覆盖全群，且 k ≤ 4·ceil(log2 order)"""
    if len(gens) > generator_limit(group.order):
        return False
    if any(not 0 <= int(g) < group.order for g in gens):
        return False
    return bool(_cube_mask(group, gens).all())


class CubeDecomposer:
    """
    规范分解表

    后缀集合 S_i = {γ_i^e_i ··· γ_k^e_k}；从左到右贪心取 e_i = 0（若剩余部分仍可达），
    得到乘积等于 γ 的字典序最小比特串。
    """

    def __init__(self, group: ExplicitGroup, gens: Sequence[int]):
        self.group = group
        self.gens = [int(g) for g in gens]
        k = len(self.gens)
        suffix = [np.zeros(group.order, dtype=bool) for _ in range(k + 1)]
        suffix[k][group.identity] = True
        for i in range(k - 1, -1, -1):
            later = np.flatnonzero(suffix[i + 1])
            suffix[i] = suffix[i + 1].copy()
            suffix[i][group.table[self.gens[i], later]] = True
        self._suffix = suffix
        self._cache: Dict[int, Tuple[int, ...]] = {}

    def decompose(self, gamma: int) -> Tuple[int, ...]:
        """
        Raises:
            GroupError: gamma 不在立方内
        """
        gamma = int(gamma)
        if gamma in self._cache:
            return self._cache[gamma]
        g = self.group
        if not self._suffix[0][gamma]:
            raise GroupError(f"{g.name}: 元素 {gamma} 不能由生成集表示")
        bits = []
        prefix = g.identity
        for i, gen in enumerate(self.gens):
            rest = g.multiply(g.inverse(prefix), gamma)
            if self._suffix[i + 1][rest]:
                bits.append(0)
            else:
                bits.append(1)
                prefix = g.multiply(prefix, gen)
        result = tuple(bits)
        self._cache[gamma] = result
        return result


def canonical_decomposition(group: ExplicitGroup, gens: Sequence[int], gamma: int) -> Tuple[int, ...]:
    """gamma 的字典序最小比特串 e_1..e_k"""
    return CubeDecomposer(group, gens).decompose(gamma)


# ==================== 原始映射与同态测试 ====================

def invalid_labels(oracle: GroupOracle, labels: Sequence[int]) -> List[int]:
    """
    找出不是任何群元素标签的输入

    越界标签直接判定；其余每个标签用 1 次查询 (ℓ, ℓ) ↦ ℓ(e)，得到哨兵即为非法。
    """
    bad = []
    for label in dict.fromkeys(int(v) for v in labels):
        if not 0 <= label < oracle.sentinel or oracle_identity(oracle, label) == oracle.sentinel:
            bad.append(label)
    return bad


class RawHom:
    """
    f(γ) = g_1^e_1 ··· g_k^e_k，e 为 γ 的规范分解

    按 γ 缓存结果；一次求值至多 2(k−1) 次黑盒调用。
    checked=False 时，每个标签第一次被用到时先花 1 次查询确认合法。
    """

    def __init__(self, group: ExplicitGroup, gens: Sequence[int], g_labels: Sequence[int],
                 oracle: GroupOracle, checked: bool = False):
        if len(gens) != len(g_labels):
            raise GroupError(f"生成元 {len(gens)} 个而标签 {len(g_labels)} 个")
        self.group = group
        self.oracle = oracle
        self.g_labels = [int(label) for label in g_labels]
        self.decomposer = CubeDecomposer(group, gens)
        self._values: Dict[int, int] = {}
        self._checked = set(self.g_labels) if checked else set()

    def _check(self, labels: Sequence[int]) -> None:
        pending = [label for label in labels if label not in self._checked]
        bad = invalid_labels(self.oracle, pending)
        if bad:
            raise GroupError(f"见证含非法标签: {', '.join(format(v, 'x') for v in bad)}")
        self._checked.update(pending)

    def __call__(self, gamma: int) -> int:
        """
        Raises:
            GroupError: 用到的生成元标签非法
        """
        gamma = int(gamma)
        value = self._values.get(gamma)
        if value is None:
            selected = [label for bit, label in zip(self.decomposer.decompose(gamma), self.g_labels) if bit]
            self._check(selected)
            if not selected:
                value = self.oracle.identity_label
            else:
                value = selected[0]
                for label in selected[1:]:
                    value = oracle_multiply(self.oracle, value, label)
            self._values[gamma] = value
        return value


def raw_hom_eval(witness: GnmWitness, oracle: GroupOracle, gamma: int) -> int:
    """
    按见证计算 f(γ)

    Raises:
        GroupError: 分解中用到的标签非法
    """
    group = make_group_from_spec(witness.model)
    return RawHom(group, witness.gammas, witness.g_labels, oracle)(gamma)


LabelMap = Callable[[int], int]


def homomorphism_test(f: LabelMap, group: ExplicitGroup, oracle: GroupOracle,
                      trials: int = HOMOMORPHISM_TRIALS, seed: SeedLike = None) -> bool:
    """
    随机抽 (x, y) 检查 f(xy) = f(x)·f(y)，全部通过才接受

    trials=24 时，若 f 与任何同态的距离都大于 1/5，拒绝概率 > 0.995。
    """
    if trials < 1:
        raise GroupError(f"测试次数至少为 1: {trials}")
    rng = as_generator(seed)
    for _ in range(trials):
        x, y = (int(v) for v in rng.integers(0, group.order, size=2))
        if f(group.multiply(x, y)) != oracle_multiply(oracle, f(x), f(y)):
            logger.debug(f"同态测试失败: x={x}, y={y}")
            return False
    return True


class CorrectedHom:
    """
    自纠正映射 f̃(γ)：8r 个随机 z 上 f(z)·f(z⁻¹γ) 的多数值

    __call__ 的结果按 γ 缓存，使 f̃ 在一次验证中是确定的函数。
    """

    def __init__(self, base: LabelMap, group: ExplicitGroup, oracle: GroupOracle,
                 r: int = DEFAULT_REPETITION, seed: SeedLike = None):
        if r < 1:
            raise GroupError(f"重复参数 r 至少为 1: {r}")
        self.base = base
        self.group = group
        self.oracle = oracle
        self.r = r
        self.evaluations = 0
        self._rng = as_generator(seed)
        self._values: Dict[int, int] = {}

    def _plurality(self, gamma: int, rng: np.random.Generator) -> Optional[int]:
        g = self.group
        votes: Counter = Counter()
        for z in rng.integers(0, g.order, size=8 * self.r):
            z = int(z)
            shifted = g.multiply(g.inverse(z), gamma)
            votes[oracle_multiply(self.oracle, self.base(z), self.base(shifted))] += 1
        ranked = votes.most_common(2)
        if len(ranked) > 1 and ranked[0][1] == ranked[1][1]:
            return None
        return ranked[0][0]

    def evaluate(self, gamma: int, seed: SeedLike = None) -> int:
        """
        一次新的自纠正求值（不读写缓存）

        Raises:
            GroupError: 两轮都没有严格多数
        """
        rng = self._rng if seed is None else as_generator(seed)
        self.evaluations += 1
        for _ in range(2):
            value = self._plurality(int(gamma), rng)
            if value is not None:
                return value
        raise GroupError(f"自纠正在元素 {gamma} 上两次都没有严格多数")

    def __call__(self, gamma: int) -> int:
        gamma = int(gamma)
        if gamma not in self._values:
            self._values[gamma] = self.evaluate(gamma)
        return self._values[gamma]

    def table(self) -> List[int]:
        """在全部 Γ 上求值"""
        return [self(gamma) for gamma in range(self.group.order)]


def self_correct(ch: CorrectedHom, gamma: int, seed: SeedLike = None) -> int:
    """f̃(γ)，使用给定种子重新采样"""
    return ch.evaluate(gamma, seed)


def model_membership(group: ExplicitGroup, lambda_ids: Sequence[int], z: int) -> bool:
    """z ∈ ⟨λ_1..λ_m⟩，模型侧闭包，零查询"""
    return group.is_member(lambda_ids, z)


# ==================== 核平凡性 ====================

def default_kernel_samples(order: int, candidates: int) -> int:
    """max(L², 12·候选数)，不超过 50·L²"""
    L2 = log_order(order) ** 2
    return min(max(L2, SAMPLES_PER_CANDIDATE * candidates), KERNEL_SAMPLE_CAP * L2)


def _coset_log_likelihoods(candidates: List[FrozenSet[int]], tests: List[Tuple[int, bool]]) -> np.ndarray:
    """每个假设核 K 下测试结果的对数似然；通过概率为 |K∩K′|/|K′|"""
    scores = np.zeros(len(candidates))
    for h, hypothesis in enumerate(candidates):
        total = 0.0
        for c, passed in tests:
            tested = candidates[c]
            p = len(hypothesis & tested) / len(tested)
            q = p if passed else 1.0 - p
            if q <= 0.0:
                total = -math.inf
                break
            total += math.log(q)
        scores[h] = total
    return scores


def _ehk_kernel(ch: CorrectedHom, group: ExplicitGroup, samples: int,
                rng: np.random.Generator) -> Tuple[FrozenSet[int], float, int]:
    """
    陪集态采样 + 暴力后处理

    模拟制备 Σ_γ|γ⟩|f̃(γ)⟩ 并测量第二寄存器，得到原像集合上的均匀叠加；
    每个样本轮流对一个候选正规子群 K′ 做二值测试（投影到 K′ 陪集均匀态张成的子空间），
    最后在全部正规子群上取最大似然。

    叠加查询在模型侧展开：f̃ 的整张表在 suspend_accounting 下算出，只按样本数各记 1 次查询。
    因此报告的查询数低于模拟实际做的工作，而且与穷举模式用的是同一张 f̃ 表，
    两种模式的一致性检验的是似然后处理，不是 f̃ 的求值。

    Returns:
        (核, 最优与次优对数似然之差, 实际样本数)
    """
    oracle = ch.oracle
    with oracle.suspend_accounting():
        values = ch.table()
    fibers: Dict[int, List[int]] = {}
    for gamma, value in enumerate(values):
        fibers.setdefault(value, []).append(gamma)
    keys = sorted(fibers)
    weights = np.array([len(fibers[v]) for v in keys], dtype=float) / group.order

    candidates = group.normal_subgroups()
    coset_index: List[np.ndarray] = []
    for K in candidates:
        labels = np.full(group.order, -1, dtype=np.int64)
        members = np.array(sorted(K))
        for a in range(group.order):
            if labels[a] < 0:
                labels[group.table[a, members]] = a
        coset_index.append(labels)

    tests: List[Tuple[int, bool]] = []
    total = samples
    for round_index in range(2):
        while len(tests) < total:
            fiber = fibers[keys[int(rng.choice(len(keys), p=weights))]]
            vector = np.zeros(group.order)
            vector[fiber] = 1.0 / math.sqrt(len(fiber))
            c = len(tests) % len(candidates)
            size = len(candidates[c])
            sums = np.bincount(coset_index[c], weights=vector, minlength=group.order)
            pass_probability = float(np.sum(sums ** 2) / size)
            tests.append((c, bool(rng.random() < pass_probability)))
        oracle.charge(total - (0 if round_index == 0 else samples))

        scores = _coset_log_likelihoods(candidates, tests)
        finite = scores[np.isfinite(scores)]
        if finite.size == 0:
            raise GroupError("陪集态样本与任何正规子群都不相容")
        best = int(np.argmax(scores))
        posterior = np.exp(finite - finite.max())
        posterior /= posterior.sum()
        ordered = np.sort(finite)
        gap = float(ordered[-1] - ordered[-2]) if ordered.size > 1 else math.inf
        if posterior.max() >= POSTERIOR_THRESHOLD:
            return candidates[best], gap, len(tests)
        if round_index == 0:
            logger.info(f"后验不确定（最大后验 {posterior.max():.3f}），样本数加倍到 {2 * samples}")
            total = 2 * samples
    raise GroupError(f"样本数加倍后后验仍不确定: {len(tests)} 个样本")


def kernel_triviality(ch: CorrectedHom, group: ExplicitGroup, samples: Optional[int] = None,
                      seed: SeedLike = None, mode: str = "ehk") -> KernelReport:
    """
    判断 f̃ 的核是否平凡

    Args:
        ch: 自纠正映射
        group: 模型群 Γ
        samples: 陪集态样本数，默认 default_kernel_samples
        seed: 随机种子
        mode: "ehk"（陪集态采样）或 "exhaustive"（在全部 Γ 上求值后检查单射）

    Raises:
        GroupError: 未知模式，或 ehk 模式下后验不确定
    """
    L2 = log_order(group.order) ** 2
    start = ch.oracle.counter.snapshot()
    if mode == "exhaustive":
        values = ch.table()
        identity_value = values[group.identity]
        kernel = frozenset(g for g, v in enumerate(values) if v == identity_value)
        report = KernelReport(
            trivial=len(set(values)) == group.order,
            kernel=tuple(sorted(kernel)),
            mode=mode,
            function_queries=group.order,
            query_bound=KERNEL_SAMPLE_CAP * L2
        )
    elif mode == "ehk":
        rng = as_generator(seed)
        count = samples or default_kernel_samples(group.order, len(group.normal_subgroups()))
        kernel, gap, used = _ehk_kernel(ch, group, count, rng)
        report = KernelReport(
            trivial=len(kernel) == 1,
            kernel=tuple(sorted(kernel)),
            mode=mode,
            samples=used,
            function_queries=used,
            query_bound=KERNEL_SAMPLE_CAP * L2,
            log_likelihood_gap=gap
        )
    else:
        raise GroupError(f"未知的核检测模式: {mode}")
    logger.debug(f"核检测({mode}): |K|={len(report.kernel)}, 查询 {ch.oracle.counter.since(start)}")
    return report


# ==================== 完整验证器 ====================

@dataclass
class GnmVerifierOptions:
    """验证器参数"""

    trials: int = HOMOMORPHISM_TRIALS
    r: int = DEFAULT_REPETITION
    kernel_mode: str = "ehk"
    kernel_samples: Optional[int] = None
    cross_check: bool = False          # 到达 (3c) 时另用一种模式重算核，记入 details


def _structure_problem(witness: GnmWitness, h_labels: Sequence[int]) -> Tuple[Optional[str], Optional[ExplicitGroup]]:
    try:
        group = make_group_from_spec(witness.model)
    except GroupError as e:
        return f"模型群非法: {e}", None
    ids = list(witness.gammas) + [witness.z] + list(witness.lambdas)
    if any(not 0 <= int(a) < group.order for a in ids):
        return "见证中的元素 id 越界", group
    if len(witness.gammas) != len(witness.g_labels):
        return "生成元与标签个数不符", group
    if len(witness.gammas) > generator_limit(group.order):
        return f"生成元个数 {witness.k} 超过 {generator_limit(group.order)}", group
    if len(witness.lambdas) != len(h_labels):
        return f"λ 个数 {len(witness.lambdas)} 与 H 的生成元个数 {len(h_labels)} 不符", group
    return None, group


def gnm_verify(oracle: GroupOracle, h_labels: Sequence[int], x_label: int, witness: GnmWitness,
               seed: SeedLike = None, options: Optional[GnmVerifierOptions] = None) -> GnmReport:
    """
    群非成员的 QCMA 验证

    依次检查：(1) 生成集；(2) z ∉ ⟨λ⟩；(3a) 同态测试并确认 f̃(γ_i) = g_i；
    (3b) f̃(z) = x 且 f̃(λ_j) = h_j；(3c) f̃ 的核平凡。全部通过才接受。
    格式错误的见证在步骤 "structure" 被确定性拒绝；g_i 中有非法标签时同样在
    "structure" 拒绝，reason 为 "invalid-label"（每个标签花 1 次查询确认）。
    """
    options = options or GnmVerifierOptions()
    rng = as_generator(seed)
    start = oracle.counter.snapshot()

    def finish(accepted: bool, step: Optional[str], order: int, **details) -> GnmReport:
        report = GnmReport(accepted=accepted, failed_step=step,
                           queries=oracle.counter.since(start),
                           query_bound=query_bound(order), details=details)
        logger.debug(f"GNM 验证: {'接受' if accepted else '拒绝于 ' + str(step)}, 查询 {report.queries}")
        return report

    problem, group = _structure_problem(witness, h_labels)
    if problem is not None:
        logger.warning(f"见证结构错误: {problem}")
        return finish(False, "structure", group.order if group else 1, reason=problem)
    bad = invalid_labels(oracle, witness.g_labels)
    if bad:
        logger.warning(f"见证含 {len(bad)} 个非法标签")
        return finish(False, "structure", group.order, reason="invalid-label",
                      labels=[format(v, "x") for v in bad])

    if not verify_generating_set(group, witness.gammas):
        return finish(False, "1", group.order)
    if model_membership(group, witness.lambdas, witness.z):
        return finish(False, "2", group.order)

    f = RawHom(group, witness.gammas, witness.g_labels, oracle, checked=True)
    if not homomorphism_test(f, group, oracle, options.trials, rng):
        return finish(False, "3a", group.order, reason="homomorphism")
    ch = CorrectedHom(f, group, oracle, options.r, rng)
    try:
        if any(ch(gamma) != label for gamma, label in zip(witness.gammas, witness.g_labels)):
            return finish(False, "3a", group.order, reason="generators")
        if ch(witness.z) != int(x_label):
            return finish(False, "3b", group.order, reason="z")
        if any(ch(lam) != int(h) for lam, h in zip(witness.lambdas, h_labels)):
            return finish(False, "3b", group.order, reason="lambdas")
        kernel = kernel_triviality(ch, group, options.kernel_samples, rng, options.kernel_mode)
    except GroupError as e:
        logger.warning(f"自纠正或核检测失败: {e}")
        return finish(False, "3c", group.order, reason=str(e))
    extra: Dict[str, object] = {}
    if options.cross_check:
        extra = _cross_check_kernel(ch, group, kernel, options, rng)
    if not kernel.trivial:
        return finish(False, "3c", group.order, kernel=list(kernel.kernel), **extra)
    return finish(True, None, group.order, k=witness.k, kernel_samples=kernel.samples,
                  kernel_mode=kernel.mode, **extra)


def _cross_check_kernel(ch: CorrectedHom, group: ExplicitGroup, kernel: KernelReport,
                        options: GnmVerifierOptions, rng: np.random.Generator) -> Dict[str, object]:
    """在暂停计数下用另一种模式重算核，结果不影响判定"""
    other = "exhaustive" if kernel.mode == "ehk" else "ehk"
    try:
        with ch.oracle.suspend_accounting():
            second = kernel_triviality(ch, group, options.kernel_samples, rng, other)
    except GroupError as e:
        logger.warning(f"核交叉检验({other})失败: {e}")
        return {"kernel_agree": False, "cross_mode": other, "cross_error": str(e)}
    agree = second.kernel == kernel.kernel
    if not agree:
        logger.warning(f"核检测模式不一致: {kernel.mode}={list(kernel.kernel)}, {other}={list(second.kernel)}")
    return {"kernel_agree": agree, "cross_mode": other, "cross_kernel": list(second.kernel)}
