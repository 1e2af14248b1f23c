from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class RngStream:
    """
    可复现的随机数流

    相同的 (seed, stream_id) 在任何进程、任何线程数下产生完全相同的序列。
    每个模拟重复使用 stream_id = 重复序号, 互不重叠。
    """

    seed: int
    stream_id: int = 0

    def __post_init__(self):
        if self.seed < 0 or self.stream_id < 0:
            raise ValueError("seed and stream_id must be non-negative 64-bit integers")

    def generator(self) -> np.random.Generator:
        """返回一个新的、位于流起点的 Generator"""
        seq = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream_id,))
        return np.random.Generator(np.random.PCG64(seq))

    def substream(self, offset: int) -> "RngStream":
        """同一种子下的另一条流, 用于单个重复内部的多个独立样本"""
        return RngStream(self.seed, self.stream_id * 1_000_003 + offset + 1)
