"""
显式模型群模块

基于乘法表的有限群、群目录（循环群、二面体群、对称群、Z_a×Z_b、四元数群）、
子群闭包与正规子群枚举。元素用规范整数 id 0..order−1 表示。
"""

import itertools
import threading
from typing import Any, Dict, FrozenSet, Hashable, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from src.models.witness import ModelSpec
from src.utils.errors import DomainError, GroupError
from src.utils.logger import Logger
from src.utils.rng import SeedLike, as_generator

logger = Logger.get_logger(__name__)

MAX_ORDER = 2000
EXHAUSTIVE_ASSOCIATIVITY = 200
RANDOM_TRIPLES = 100_000


class ExplicitGroup:
    """
    乘法表给出的有限群

    table[a, b] 为 a·b 的 id；构造时确定单位元与逆元表。
    """

    def __init__(self, table: np.ndarray, name: str = "group",
                 spec: Optional[ModelSpec] = None,
                 elements: Optional[Sequence[Hashable]] = None):
        table = np.asarray(table, dtype=np.int64)
        if table.ndim != 2 or table.shape[0] != table.shape[1] or table.shape[0] == 0:
            raise GroupError(f"乘法表必须是非空方阵: {table.shape}")
        if table.shape[0] > MAX_ORDER:
            raise GroupError(f"群阶 {table.shape[0]} 超过上限 {MAX_ORDER}")
        if table.min() < 0 or table.max() >= table.shape[0]:
            raise GroupError("乘法表不封闭")
        table.setflags(write=False)
        self.table = table
        self.name = name
        self.spec = spec or ModelSpec(name)
        self.elements = list(elements) if elements is not None else list(range(self.order))
        self._index = {e: i for i, e in enumerate(self.elements)}

        arange = np.arange(self.order)
        identity = [a for a in range(self.order)
                    if np.array_equal(table[a], arange) and np.array_equal(table[:, a], arange)]
        if not identity:
            raise GroupError(f"{name}: 没有单位元")
        self.identity = identity[0]
        hits = table == self.identity
        if not np.all(hits.sum(axis=1) == 1):
            raise GroupError(f"{name}: 存在没有逆元的元素")
        self.inverses = np.argmax(hits, axis=1)
        self._normal_subgroups: Optional[List[FrozenSet[int]]] = None

    # ==================== 基本运算 ====================

    @property
    def order(self) -> int:
        return self.table.shape[0]

    def multiply(self, a: int, b: int) -> int:
        return int(self.table[a, b])

    def inverse(self, a: int) -> int:
        return int(self.inverses[a])

    def product(self, ids: Iterable[int]) -> int:
        """有序乘积；空乘积为单位元"""
        result = self.identity
        for a in ids:
            result = int(self.table[result, a])
        return result

    def element(self, description: Hashable) -> int:
        """按目录描述（整数、元组或名字）查找元素 id"""
        try:
            return self._index[description]
        except KeyError as e:
            raise DomainError(f"{self.name} 中没有元素 {description!r}") from e

    def describe(self, a: int) -> Any:
        return self.elements[a]

    def element_order(self, a: int) -> int:
        power, k = a, 1
        while power != self.identity:
            power = int(self.table[power, a])
            k += 1
        return k

    def is_abelian(self) -> bool:
        return bool(np.array_equal(self.table, self.table.T))

    def check_axioms(self, seed: SeedLike = None) -> None:
        """
        检查结合律：阶 ≤ 200 时穷举，否则抽查 10^5 个随机三元组

        Raises:
            GroupError: 结合律不成立
        """
        t = self.table
        if self.order <= EXHAUSTIVE_ASSOCIATIVITY:
            left = t[t, :]                       # (a·b)·c 以 [a, b, c] 索引
            right = t[:, t]                      # a·(b·c)
            ok = np.array_equal(left, right)
        else:
            rng = as_generator(seed)
            a, b, c = rng.integers(0, self.order, size=(3, RANDOM_TRIPLES))
            ok = np.array_equal(t[t[a, b], c], t[a, t[b, c]])
        if not ok:
            raise GroupError(f"{self.name}: 结合律不成立")

    # ==================== 子群 ====================

    def subgroup_closure(self, generators: Iterable[int]) -> FrozenSet[int]:
        """广度优先求 ⟨generators⟩，直到不动点"""
        gens = sorted({int(g) for g in generators})
        members = np.zeros(self.order, dtype=bool)
        members[self.identity] = True
        frontier = np.array([self.identity])
        if not gens:
            return frozenset([self.identity])
        while frontier.size:
            products = np.unique(self.table[np.ix_(frontier, gens)].ravel())
            new = products[~members[products]]
            members[new] = True
            frontier = new
        return frozenset(int(a) for a in np.flatnonzero(members))

    def is_member(self, generators: Iterable[int], z: int) -> bool:
        return int(z) in self.subgroup_closure(generators)

    def conjugates(self, a: int) -> np.ndarray:
        """{g a g⁻¹ : g ∈ Γ}"""
        g = np.arange(self.order)
        return np.unique(self.table[self.table[g, a], self.inverses[g]])

    def normal_closure(self, elements: Iterable[int]) -> FrozenSet[int]:
        gens: set = set()
        for a in elements:
            gens.update(int(c) for c in self.conjugates(int(a)))
        return self.subgroup_closure(gens)

    def is_normal(self, subgroup: Iterable[int]) -> bool:
        members = np.zeros(self.order, dtype=bool)
        members[list(subgroup)] = True
        ids = np.flatnonzero(members)
        g = np.arange(self.order)
        conj = self.table[self.table[np.ix_(g, ids)], self.inverses[g][:, None]]
        return bool(np.all(members[conj]))

    def normal_subgroups(self) -> List[FrozenSet[int]]:
        """
        全部正规子群（按阶、再按元素排序）

        每个正规子群都是若干元素正规闭包的乘积，从各元素的正规闭包出发两两求并直到不动点。
        """
        if self._normal_subgroups is not None:
            return list(self._normal_subgroups)
        found = {frozenset([self.identity])}
        seen_classes = set()
        for a in range(self.order):
            cls = tuple(self.conjugates(a))
            if cls in seen_classes:
                continue
            seen_classes.add(cls)
            found.add(self.normal_closure([a]))
        frontier = set(found)
        while frontier:
            joins = set()
            for left in frontier:
                for right in found:
                    if left <= right or right <= left:
                        continue
                    joined = self.subgroup_closure(left | right)
                    if joined not in found:
                        joins.add(joined)
            found |= joins
            frontier = joins
        self._normal_subgroups = sorted(found, key=lambda s: (len(s), sorted(s)))
        logger.debug(f"{self.name}: 共 {len(self._normal_subgroups)} 个正规子群")
        return list(self._normal_subgroups)

    def __repr__(self) -> str:
        return f"ExplicitGroup({self.name}, order={self.order})"


# ==================== 群目录 ====================

def _from_rule(elements: Sequence[Hashable], rule, name: str, spec: ModelSpec) -> ExplicitGroup:
    index = {e: i for i, e in enumerate(elements)}
    size = len(elements)
    table = np.empty((size, size), dtype=np.int64)
    for i, a in enumerate(elements):
        for j, b in enumerate(elements):
            table[i, j] = index[rule(a, b)]
    return ExplicitGroup(table, name=name, spec=spec, elements=elements)


def cyclic_group(n: int) -> ExplicitGroup:
    """Z_n，加法记号"""
    if n < 1:
        raise DomainError(f"循环群阶必须为正: {n}")
    a = np.arange(n)
    return ExplicitGroup((a[:, None] + a[None, :]) % n, name=f"Z_{n}",
                         spec=ModelSpec("cyclic", (n,)))


def dihedral_group(n: int) -> ExplicitGroup:
    """D_n，阶 2n；元素 (a, b) 表示 r^a s^b"""
    if n < 1:
        raise DomainError(f"二面体群参数必须为正: {n}")
    elements = [(a, b) for b in range(2) for a in range(n)]

    def rule(x, y):
        (a, b), (c, d) = x, y
        return ((a + (c if b == 0 else -c)) % n, (b + d) % 2)
    return _from_rule(elements, rule, f"D_{n}", ModelSpec("dihedral", (n,)))


def symmetric_group(n: int) -> ExplicitGroup:
    """S_n，元素为置换元组（字典序），乘积 (p·q)(i) = p[q[i]]"""
    if not 1 <= n <= 6:
        raise DomainError(f"对称群参数必须在 1..6 内: {n}")
    elements = list(itertools.permutations(range(n)))
    return _from_rule(elements, lambda p, q: tuple(p[q[i]] for i in range(n)),
                      f"S_{n}", ModelSpec("symmetric", (n,)))


def abelian2_group(a: int, b: int) -> ExplicitGroup:
    """Z_a × Z_b，元素 (i, j)"""
    if a < 1 or b < 1:
        raise DomainError(f"参数必须为正: ({a}, {b})")
    elements = [(i, j) for i in range(a) for j in range(b)]
    return _from_rule(elements, lambda x, y: ((x[0] + y[0]) % a, (x[1] + y[1]) % b),
                      f"Z_{a}xZ_{b}", ModelSpec("abelian2", (a, b)))


_QUATERNION_UNITS = {
    ("1", "1"): "1", ("1", "i"): "i", ("1", "j"): "j", ("1", "k"): "k",
    ("i", "1"): "i", ("i", "i"): "-1", ("i", "j"): "k", ("i", "k"): "-j",
    ("j", "1"): "j", ("j", "i"): "-k", ("j", "j"): "-1", ("j", "k"): "i",
    ("k", "1"): "k", ("k", "i"): "j", ("k", "j"): "-i", ("k", "k"): "-1",
}


def quaternion_group() -> ExplicitGroup:
    """Q_8 = {±1, ±i, ±j, ±k}"""
    elements = ["1", "-1", "i", "-i", "j", "-j", "k", "-k"]

    def split(x: str) -> Tuple[int, str]:
        return (-1, x[1:]) if x.startswith("-") else (1, x)

    def rule(x: str, y: str) -> str:
        sx, ux = split(x)
        sy, uy = split(y)
        sz, uz = split(_QUATERNION_UNITS[(ux, uy)])
        return uz if sx * sy * sz == 1 else "-" + uz
    return _from_rule(elements, rule, "Q_8", ModelSpec("quaternion", ()))


CATALOG = {
    "cyclic": (cyclic_group, 1),
    "dihedral": (dihedral_group, 1),
    "symmetric": (symmetric_group, 1),
    "abelian2": (abelian2_group, 2),
    "quaternion": (quaternion_group, 0),
}

_cache: Dict[ModelSpec, ExplicitGroup] = {}
_cache_lock = threading.Lock()


def make_group(catalog_id: str, params: Sequence[int] = ()) -> ExplicitGroup:
    """
    按目录 id 与参数构造模型群（结果缓存）

    Raises:
        GroupError: 未知目录 id 或参数个数不符
    """
    if catalog_id not in CATALOG:
        raise GroupError(f"未知的群目录 id: {catalog_id}")
    builder, arity = CATALOG[catalog_id]
    params = tuple(int(p) for p in params)
    if len(params) != arity:
        raise GroupError(f"{catalog_id} 需要 {arity} 个参数，实际 {len(params)}")
    spec = ModelSpec(catalog_id, params)
    group = _cache.get(spec)
    if group is not None:
        return group
    with _cache_lock:
        group = _cache.get(spec)
        if group is None:
            try:
                group = builder(*params)
            except DomainError as e:
                raise GroupError(str(e)) from e
            _cache[spec] = group
    return group


def make_group_from_spec(spec: ModelSpec) -> ExplicitGroup:
    return make_group(spec.catalog_id, spec.params)
