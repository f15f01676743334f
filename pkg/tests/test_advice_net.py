"""
显式 h-网模块测试

测试前缀和界、见证编码/解码、序列化与 QNET 见证文件。
"""

import math
import os
import tempfile
import unittest

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from src.core.advice_net import (decode_witness, deserialize, encode_witness, nearest_quarter_phase,
                                 net_size_bound, overlap_guarantee, prefix_bound, prefix_lower_bound,
                                 read_witness_file, serialize, witness_capacity, write_witness_file)
from src.core.statevec import haar_sample, haar_samples
from src.models.state import PureState
from src.models.witness import AdviceWitness
from src.utils.errors import DomainError, ValidationError, WitnessFormatError


class TestPrefixBound(unittest.TestCase):
    """前缀和界测试类"""

    def test_flat_profile(self):
        """测试平坦幅度在 t=k 处取最大"""
        x = np.full(16, 0.25)
        t, value = prefix_bound(x, 16)
        self.assertEqual(t, 16)
        self.assertAlmostEqual(value, 1.0)

    def test_spike_profile(self):
        """测试单峰幅度在 t=1 处取最大"""
        x = np.zeros(8)
        x[0] = 1.0
        self.assertEqual(prefix_bound(x, 8), (1, 1.0))

    def test_rejects_unsorted(self):
        """测试未排序输入"""
        with self.assertRaises(ValidationError):
            prefix_bound([0.6, 0.8], 2)

    def test_rejects_bad_k(self):
        """测试 k 越界"""
        with self.assertRaises(ValidationError):
            prefix_bound([1.0], 2)

    def test_random_profiles_meet_bound(self):
        """测试随机非增单位幅度满足 sqrt(k/(N·ceil(log2 N))) 下界"""
        rng = np.random.default_rng(0)
        for N, k in ((8, 2), (64, 5), (256, 16)):
            bound = prefix_lower_bound(N, k)
            for _ in range(2000):
                x = np.sort(np.abs(rng.standard_normal(N)) ** rng.uniform(0.5, 4.0))[::-1]
                x = x / np.linalg.norm(x)
                self.assertGreaterEqual(prefix_bound(x, k)[1], bound - 1e-12)

    def test_harmonic_profile_near_tight(self):
        """测试调和幅度在下界的 3 倍以内"""
        for N in (64, 256, 1024):
            x = 1.0 / np.sqrt(np.arange(1, N + 1))
            x = x / np.linalg.norm(x)
            value = prefix_bound(x, N)[1]
            bound = prefix_lower_bound(N, N)
            self.assertGreaterEqual(value, bound)
            self.assertLessEqual(value, 3.0 * bound)
            if N == 256:
                self.assertGreaterEqual(value, 1.5 / math.sqrt(math.log(N)))
                self.assertLessEqual(value, 3.0 / math.sqrt(math.log(N)))

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(min_value=0.01, max_value=10.0), min_size=2, max_size=64))
    def test_bound_property(self, values):
        """性质测试：任意非增单位幅度满足下界"""
        x = np.sort(np.asarray(values))[::-1]
        x = x / np.linalg.norm(x)
        k = max(1, x.size // 2)
        self.assertGreaterEqual(prefix_bound(x, k)[1], prefix_lower_bound(x.size, k) - 1e-12)


class TestWitnessEncoding(unittest.TestCase):
    """见证编码测试类"""

    def test_capacity(self):
        """测试 k = floor(m/(n+2))"""
        self.assertEqual(witness_capacity(8, 40), 4)
        self.assertEqual(witness_capacity(8, 9), 0)

    def test_budget_too_small(self):
        """测试 m < n+2"""
        with self.assertRaises(DomainError):
            encode_witness(haar_sample(4, 0), 5)

    def test_basis_state(self):
        """测试基态编码为单项见证且解码精确"""
        psi = PureState.basis(4, 9)
        w = encode_witness(psi, 60)
        self.assertEqual(w.entries, ((9, 0),))
        self.assertAlmostEqual(abs(np.vdot(psi.amplitudes, decode_witness(w).amplitudes)), 1.0)

    def test_overlap_guarantee_on_haar(self):
        """测试解码态与 Haar 态的重叠不低于 sqrt(k/(2Nn))"""
        n = 8
        for m in (20, 40, 80):
            guarantee = overlap_guarantee(n, m)
            for row in haar_samples(n, 300, seed=m):
                psi = PureState(row)
                w = encode_witness(psi, m)
                self.assertLessEqual(w.bit_length, m)
                value = abs(np.vdot(psi.amplitudes, decode_witness(w).amplitudes))
                self.assertGreaterEqual(value, guarantee - 1e-12)

    def test_quarter_phase_tie(self):
        """测试相位并列时取靠前的编码"""
        self.assertEqual(nearest_quarter_phase(1 + 1j), 0)
        self.assertEqual(nearest_quarter_phase(-1j), 3)

    def test_duplicate_index(self):
        """测试重复下标的见证非法"""
        with self.assertRaises(WitnessFormatError):
            AdviceWitness(n=2, entries=((1, 0), (1, 2)))


class TestSerialization(unittest.TestCase):
    """序列化与见证文件测试类"""

    def test_bit_layout(self):
        """测试逐项写出 n 个下标比特与 2 个相位比特"""
        w = AdviceWitness(n=3, entries=((5, 2), (0, 1)))
        self.assertEqual(serialize(w), "10110" + "00001")
        self.assertEqual(deserialize("1011000001", 3), w)

    def test_zero_padding_allowed(self):
        """测试末尾零填充被忽略"""
        self.assertEqual(deserialize("1011000", 3).entries, ((5, 2),))

    def test_nonzero_padding(self):
        """测试非零填充被拒绝"""
        with self.assertRaises(WitnessFormatError):
            deserialize("1011001", 3)

    def test_bad_characters(self):
        """测试非法字符"""
        with self.assertRaises(WitnessFormatError):
            deserialize("10x10", 3)

    def test_too_short(self):
        """测试不足一项"""
        with self.assertRaises(WitnessFormatError):
            deserialize("0000", 3)

    def test_file_round_trip(self):
        """测试 QNET 见证文件写出与读回"""
        w = encode_witness(haar_sample(5, 3), 70)
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "w.qnet")
            size = write_witness_file(w, path)
            self.assertEqual(size, 8 + math.ceil(w.bit_length / 8))
            self.assertEqual(read_witness_file(path), w)

    def test_file_bad_magic(self):
        """测试文件头非法"""
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "bad.qnet")
            with open(path, "wb") as f:
                f.write(b"XNET\x01\x03\x00\x01\xa0")
            with self.assertRaises(WitnessFormatError):
                read_witness_file(path)


class TestNetSize(unittest.TestCase):
    """网大小公式测试类"""

    def test_monotone_in_h(self):
        """测试 h 越大网越大"""
        self.assertLess(net_size_bound(64, 0.1), net_size_bound(64, 0.5))

    def test_domain(self):
        """测试 h 越界"""
        with self.assertRaises(DomainError):
            net_size_bound(64, 1.0)


if __name__ == "__main__":
    unittest.main()
