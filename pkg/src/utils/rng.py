"""
随机数种子模块

全项目统一使用基于计数器的 Philox 生成器，保证相同种子、相同调用序列得到相同结果。
"""

from dataclasses import dataclass
from typing import Union

import numpy as np

from src.utils.errors import DomainError

_SEED_LIMIT = 1 << 64


@dataclass(frozen=True)
class RngSeed:
    """64 位无符号随机种子"""

    seed: int

    def __post_init__(self):
        if not 0 <= int(self.seed) < _SEED_LIMIT:
            raise DomainError(f"种子必须是 64 位无符号整数: {self.seed}")

    def generator(self) -> np.random.Generator:
        """创建以本种子为密钥的 Philox 生成器"""
        return np.random.Generator(np.random.Philox(np.random.SeedSequence(self.seed)))

    def spawn(self, *keys: int) -> "RngSeed":
        """
        按整数键派生子种子

        同一 (seed, keys) 总是得到同一个子种子，与调用顺序和线程数无关。

        Args:
            keys: 非负整数键，例如单元格坐标或试验编号

        Returns:
            派生出的子种子
        """
        sequence = np.random.SeedSequence(self.seed, spawn_key=tuple(int(k) for k in keys))
        return RngSeed(int(sequence.generate_state(1, np.uint64)[0]))


SeedLike = Union[RngSeed, int, np.random.Generator, None]


def as_generator(seed: SeedLike) -> np.random.Generator:
    """
    把各种种子形式统一为 numpy 生成器

    已经是生成器的直接返回（调用方共享同一随机流）；None 表示种子 0。
    """
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is None:
        return RngSeed(0).generator()
    if isinstance(seed, RngSeed):
        return seed.generator()
    return RngSeed(int(seed)).generator()
