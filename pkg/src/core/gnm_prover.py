"""
GNM 出题方与证明方

构造黑盒群实例（隐藏群 G、子群 H 的生成元标签与待判定元素 x 的标签），
以及诚实见证和各种作弊见证。只有本模块与黑盒本身可以读取标签映射。
"""

from dataclasses import dataclass
from typing import Callable, Hashable, List, Optional, Sequence, Union

from src.core.gnm import efficient_generating_set
from src.core.group_oracle import GroupOracle, label_bits, make_group_oracle
from src.core.groups import ExplicitGroup, cyclic_group, make_group
from src.models.witness import GnmWitness
from src.utils.errors import DomainError
from src.utils.logger import Logger
from src.utils.rng import RngSeed, SeedLike, as_generator

logger = Logger.get_logger(__name__)

CHEATING_STRATEGIES = ("random-labels", "outside-z", "random-lambdas", "wrong-model", "shuffled-labels",
                       "non-injective")
SMALL_PRIMES = (2, 3, 5, 7, 11, 13)


@dataclass
class GnmInstance:
    """一个 GNM 实例：x ∉ H = ⟨h_1..h_m⟩ 是否成立"""

    group: ExplicitGroup
    oracle: GroupOracle
    h_ids: List[int]
    x_id: int
    h_labels: List[int]
    x_label: int

    @property
    def member(self) -> bool:
        """x ∈ H（出题方真值）"""
        return self.group.is_member(self.h_ids, self.x_id)

    @property
    def subgroup(self):
        return self.group.subgroup_closure(self.h_ids)

    def describe(self) -> str:
        return (f"{self.group.name}: H=⟨{', '.join(str(self.group.describe(h)) for h in self.h_ids)}⟩, "
                f"x={self.group.describe(self.x_id)}, x∈H={self.member}")


def _resolve(group: ExplicitGroup, item: Union[int, Hashable]) -> int:
    if isinstance(item, int) and not isinstance(item, bool):
        if not 0 <= item < group.order:
            raise DomainError(f"元素 id 越界: {item}")
        return item
    if isinstance(item, list):
        item = tuple(item)
    return group.element(item)


def make_gnm_instance(catalog_id: str, params: Sequence[int], h_generators: Sequence, x,
                      n: Optional[int] = None, seed: SeedLike = None,
                      record: bool = False) -> GnmInstance:
    """
    创建 GNM 实例

    Args:
        catalog_id: 群目录 id
        params: 目录参数
        h_generators: H 的生成元（元素 id 或目录描述，如置换元组）
        x: 待判定元素
        n: 标签比特数，默认取满足 2^n ≥ 4·|G| 的最小值
        seed: 标签随机种子
        record: 是否记录黑盒审计记录
    """
    group = make_group(catalog_id, params)
    h_ids = [_resolve(group, h) for h in h_generators]
    x_id = _resolve(group, x)
    oracle = make_group_oracle(group, n if n is not None else label_bits(group.order), seed, record)
    instance = GnmInstance(group=group, oracle=oracle, h_ids=h_ids, x_id=x_id,
                           h_labels=oracle.reveal_many(h_ids), x_label=oracle.reveal(x_id))
    logger.debug(f"创建 GNM 实例 {instance.describe()}")
    return instance


# ==================== 见证 ====================

def homomorphic_witness(instance: GnmInstance, model: ExplicitGroup, image_of: Callable[[int], int],
                        z: int, lambdas: Sequence[int], seed: SeedLike = None) -> GnmWitness:
    """以模型群 Γ 与同态 Γ → G（按元素 id 给出）构造见证"""
    gammas = efficient_generating_set(model, seed)
    return GnmWitness(
        model=model.spec,
        gammas=gammas,
        g_labels=instance.oracle.reveal_many([image_of(g) for g in gammas]),
        z=int(z),
        lambdas=[int(v) for v in lambdas]
    )


def honest_gnm_witness(instance: GnmInstance, seed: SeedLike = None) -> GnmWitness:
    """Γ = G，恒等嵌入，z = x，λ = H 的生成元"""
    return homomorphic_witness(instance, instance.group, lambda g: g,
                               instance.x_id, instance.h_ids, seed)


def non_injective_witness(instance: GnmInstance, seed: SeedLike = None) -> GnmWitness:
    """
    非单射的真同态见证：Γ = Z_{p·d} 经 γ ↦ b^γ 映满 ⟨b⟩，核为 {0, d, 2d, …}

    b 取 H 中能生成 x 的生成元（没有则取 x 本身），d = ord(b)，p 为不整除 d 的最小素数。
    λ 都落在 pZ_{pd} 中而 z 不在，所以 x ∈ ⟨b⟩ 时见证通过 (1)、(2)、(3a)、(3b)，只能在 (3c) 被拒绝。
    """
    rng = as_generator(seed)
    group = instance.group
    base = next((h for h in instance.h_ids if instance.x_id in group.subgroup_closure([h])), instance.x_id)
    d = group.element_order(base)
    p = next(q for q in SMALL_PRIMES if d % q)
    powers = [group.identity]
    for _ in range(d - 1):
        powers.append(group.multiply(powers[-1], base))
    exponent = {a: i for i, a in enumerate(powers)}

    model = make_group("cyclic", [p * d])
    t = next(1 + j * d for j in range(p) if (1 + j * d) % p == 0)
    s = exponent.get(instance.x_id, 1 % d)
    z = next(s + j * d for j in range(p) if (s + j * d) % p)
    lambdas = [(t * exponent[h]) % (p * d) if h in exponent else int(rng.integers(0, p * d))
               for h in instance.h_ids]
    return homomorphic_witness(instance, model, lambda g: powers[g % d], z, lambdas, rng)


def cheating_witness(instance: GnmInstance, strategy: str, seed: SeedLike = None) -> GnmWitness:
    """
    按策略构造作弊见证

    random-labels: 随机标签；outside-z: z 取 ⟨H⟩ 之外的元素；random-lambdas: λ 随机；
    wrong-model: 同阶循环群配随机像；shuffled-labels: 诚实标签打乱顺序；
    non-injective: 带非平凡核的真同态（见 non_injective_witness）。
    """
    rng = as_generator(seed)
    group = instance.group
    subgroup = instance.subgroup
    outside = [a for a in range(group.order) if a not in subgroup]

    def random_element(pool: Sequence[int]) -> int:
        return int(pool[int(rng.integers(0, len(pool)))])

    m = len(instance.h_ids)
    if strategy == "random-labels":
        gammas = efficient_generating_set(group, rng)
        labels = [int(v) for v in rng.integers(0, instance.oracle.sentinel, size=len(gammas))]
        z = random_element(outside or list(range(group.order)))
        return GnmWitness(group.spec, gammas, labels, z, list(instance.h_ids))
    if strategy == "outside-z":
        z = random_element(outside or list(range(group.order)))
        return homomorphic_witness(instance, group, lambda g: g, z, instance.h_ids, rng)
    if strategy == "random-lambdas":
        lambdas = [random_element(range(group.order)) for _ in range(m)]
        return homomorphic_witness(instance, group, lambda g: g, instance.x_id, lambdas, rng)
    if strategy == "wrong-model":
        model = cyclic_group(group.order)
        images = [random_element(range(group.order)) for _ in range(group.order)]
        witness = homomorphic_witness(instance, model, lambda g: images[g],
                                      random_element(range(1, group.order) or [0]),
                                      [random_element(range(group.order)) for _ in range(m)], rng)
        return witness
    if strategy == "shuffled-labels":
        witness = honest_gnm_witness(instance, rng)
        order = rng.permutation(len(witness.g_labels))
        witness.g_labels = [witness.g_labels[int(i)] for i in order]
        witness.z = random_element(outside or list(range(group.order)))
        return witness
    if strategy == "non-injective":
        return non_injective_witness(instance, rng)
    raise DomainError(f"未知的作弊策略: {strategy}")


def cheating_witnesses(instance: GnmInstance, count: int, seed: Union[RngSeed, int] = 0) -> List[GnmWitness]:
    """轮流使用各作弊策略构造 count 个见证"""
    seed = seed if isinstance(seed, RngSeed) else RngSeed(int(seed))
    return [cheating_witness(instance, CHEATING_STRATEGIES[i % len(CHEATING_STRATEGIES)], seed.spawn(i))
            for i in range(count)]
