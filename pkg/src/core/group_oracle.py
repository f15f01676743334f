"""
黑盒群模块

群元素以随机 n 比特标签给出，唯一的运算是黑盒 (ℓ(x), ℓ(y)) ↦ (ℓ(x), ℓ(x·y⁻¹))。
标签到元素的反查只在本模块内部进行。
"""

import csv
import threading
from contextlib import contextmanager
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Dict, Iterator, List, Sequence, Tuple, Union

import numpy as np

from src.core.groups import ExplicitGroup
from src.core.oracles import QueryCounter
from src.utils.errors import DomainError
from src.utils.logger import Logger
from src.utils.rng import SeedLike, as_generator

logger = Logger.get_logger(__name__)

TRANSCRIPT_FIELDS = ["step", "op", "x_label", "y_label", "result", "counter"]


@dataclass(frozen=True)
class TranscriptRow:
    """一次黑盒调用的审计记录（标签为十六进制）"""

    step: int
    op: str
    x_label: str
    y_label: str
    result: str
    counter: int


class GroupOracle:
    """
    随机标签黑盒群

    标签从 [0, 2^n − 1) 中无放回均匀抽取；全 1 标签保留为错误哨兵。
    对非法标签的调用返回哨兵并置 tainted 标志。
    """

    def __init__(self, group: ExplicitGroup, n: int, seed: SeedLike = None, record: bool = False):
        if n < 1 or (1 << n) < 4 * group.order:
            raise DomainError(f"标签比特数 n={n} 不足: 需要 2^n ≥ 4·{group.order}")
        self._group = group
        self.n = n
        self.counter = QueryCounter()
        self.tainted = False
        self.record = record
        self._transcript: List[TranscriptRow] = []
        self._local = threading.local()
        self._lock = threading.Lock()

        rng = as_generator(seed)
        chosen: Dict[int, None] = {}
        while len(chosen) < group.order:
            for label in rng.integers(0, self.sentinel, size=group.order - len(chosen), dtype=np.uint64):
                chosen.setdefault(int(label))
                if len(chosen) == group.order:
                    break
        self._labels = list(chosen)
        self._reverse = {label: a for a, label in enumerate(self._labels)}
        logger.debug(f"创建黑盒群: {group.name}, n={n}")

    # ==================== 公开属性 ====================

    @property
    def sentinel(self) -> int:
        return (1 << self.n) - 1

    @property
    def identity_label(self) -> int:
        """单位元标签（求逆时放入 x 寄存器）"""
        return self._labels[self._group.identity]

    @property
    def queries(self) -> int:
        return self.counter.count

    # ==================== 黑盒调用 ====================

    def _accounting(self) -> bool:
        return getattr(self._local, "suspended", 0) == 0

    def query(self, x_label: int, y_label: int) -> Tuple[int, int]:
        """(ℓ(x), ℓ(y)) ↦ (ℓ(x), ℓ(x·y⁻¹))；任一标签非法时第二个输出为哨兵"""
        x = self._reverse.get(int(x_label))
        y = self._reverse.get(int(y_label))
        if x is None or y is None:
            self.tainted = True
            result = self.sentinel
        else:
            result = self._labels[self._group.multiply(x, self._group.inverse(y))]
        if self._accounting():
            count = self.counter.increment()
            if self.record:
                self._append("query", x_label, y_label, result, count)
        return int(x_label), result

    def charge(self, amount: int, op: str = "superposition") -> None:
        """对模拟的叠加查询记账；暂停计数期间不记"""
        if amount <= 0 or not self._accounting():
            return
        count = self.counter.increment(amount)
        if self.record:
            self._append(op, 0, 0, amount, count)

    @contextmanager
    def suspend_accounting(self) -> Iterator[None]:
        """暂停当前线程的计数（用于模拟叠加查询的内部展开）"""
        self._local.suspended = getattr(self._local, "suspended", 0) + 1
        try:
            yield
        finally:
            self._local.suspended -= 1

    # ==================== 仅供出题方/证明方使用 ====================

    def reveal(self, element_id: int) -> int:
        """元素 id 的标签；验证器不得调用"""
        return self._labels[int(element_id)]

    def reveal_many(self, element_ids: Sequence[int]) -> List[int]:
        return [self._labels[int(a)] for a in element_ids]

    # ==================== 审计记录 ====================

    def _append(self, op: str, x: int, y: int, result: int, count: int) -> None:
        with self._lock:
            self._transcript.append(TranscriptRow(
                step=len(self._transcript),
                op=op,
                x_label=format(int(x), "x"),
                y_label=format(int(y), "x"),
                result=format(int(result), "x"),
                counter=count
            ))

    @property
    def transcript(self) -> List[TranscriptRow]:
        return list(self._transcript)

    def write_transcript(self, path: Union[str, Path]) -> int:
        """写出 CSV 审计记录，返回行数"""
        rows = self.transcript
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.DictWriter(f, fieldnames=TRANSCRIPT_FIELDS)
            writer.writeheader()
            for row in rows:
                writer.writerow(asdict(row))
        logger.info(f"写出黑盒审计记录 {path}: {len(rows)} 行")
        return len(rows)


def make_group_oracle(group: ExplicitGroup, n: int, seed: SeedLike = None,
                      record: bool = False) -> GroupOracle:
    """
    创建随机标签黑盒群

    Raises:
        DomainError: 2^n < 4·order
    """
    return GroupOracle(group, n, seed, record)


def label_bits(order: int) -> int:
    """满足 2^n ≥ 4·order 的最小 n"""
    return max(1, (4 * order - 1).bit_length())


def oracle_identity(oracle: GroupOracle, a_label: int) -> int:
    """ℓ(e) = ℓ(a·a⁻¹)，由任一合法标签经 1 次查询得到"""
    return oracle.query(a_label, a_label)[1]


def oracle_inverse(oracle: GroupOracle, a_label: int) -> int:
    """ℓ(a⁻¹)：x 寄存器放单位元，1 次查询"""
    # ℓ(e) 对所有合法标签都由 oracle_identity 给出同一个值，视作一次性预计算，不重复计数
    return oracle.query(oracle.identity_label, a_label)[1]


def oracle_multiply(oracle: GroupOracle, a_label: int, b_label: int) -> int:
    """ℓ(a·b)：先求 b⁻¹，再计算 a·(b⁻¹)⁻¹，2 次查询"""
    inverse_b = oracle_inverse(oracle, b_label)
    return oracle.query(a_label, inverse_b)[1]
