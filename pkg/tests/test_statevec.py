"""
态矢量核心测试

测试 PureState 数据模型、门、测量与 Haar/球冠采样。
"""

import math
import unittest

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from src.core.statevec import (HADAMARD, apply_diagonal, apply_hadamard_layer, apply_single_qubit_gate,
                               cap_ks_test, cap_sample, cap_samples, cap_threshold, haar_sample,
                               haar_samples, haar_two_sample_test, hadamard_transform,
                               householder_preparation, marginal_probability, measure_register, overlap)
from src.models.state import CapSpec, PureState
from src.utils.errors import DimensionError, DomainError, ValidationError


class TestPureState(unittest.TestCase):
    """纯态数据模型测试类"""

    def test_rejects_unnormalized(self):
        """测试未归一化的振幅被拒绝"""
        with self.assertRaises(ValidationError):
            PureState(np.array([1.0, 1.0]))

    def test_rejects_non_power_of_two(self):
        """测试维度不是 2 的幂时报错"""
        with self.assertRaises(DimensionError):
            PureState.from_amplitudes([1.0, 0.0, 0.0], normalize=True)

    def test_from_amplitudes_normalize(self):
        """测试归一化构造"""
        state = PureState.from_amplitudes([3.0, 4.0], normalize=True)
        self.assertAlmostEqual(abs(state.amplitudes[0]), 0.6)
        self.assertEqual(state.n, 1)

    def test_zero_vector(self):
        """测试零向量无法归一化"""
        with self.assertRaises(ValidationError):
            PureState.from_amplitudes([0.0, 0.0], normalize=True)

    def test_amplitudes_read_only(self):
        """测试振幅数组只读"""
        state = PureState.uniform(2)
        with self.assertRaises(ValueError):
            state.amplitudes[0] = 1.0

    def test_tensor_high_bits(self):
        """测试张量积中第一个因子占高位"""
        joint = PureState.basis(1, 1).tensor(PureState.basis(2, 0))
        self.assertEqual(int(np.argmax(joint.probabilities)), 4)

    def test_dict_round_trip(self):
        """测试字典转换"""
        state = haar_sample(3, 7)
        self.assertTrue(PureState.from_dict(state.to_dict()).allclose(state))

    def test_cap_spec_domain(self):
        """测试球冠质量越界"""
        with self.assertRaises(DomainError):
            CapSpec(0.0, PureState.basis(2, 0))


class TestGates(unittest.TestCase):
    """门与测量测试类"""

    # ==================== 门 ====================

    def test_hadamard_on_zero(self):
        """测试 H^⊗n|0⟩ 为均匀叠加"""
        out = apply_hadamard_layer(PureState.basis(4, 0))
        self.assertTrue(out.allclose(PureState.uniform(4)))

    def test_single_qubit_msb(self):
        """测试比特 0 为最高位"""
        x = np.array([[0, 1], [1, 0]], dtype=np.complex128)
        out = apply_single_qubit_gate(PureState.basis(3, 0), x, 0)
        self.assertAlmostEqual(out.probabilities[4], 1.0)

    def test_single_qubit_out_of_range(self):
        """测试比特下标越界"""
        with self.assertRaises(DimensionError):
            apply_single_qubit_gate(PureState.basis(2, 0), HADAMARD, 2)

    def test_diagonal_rejects_non_unit(self):
        """测试非单位模相位被拒绝"""
        with self.assertRaises(ValidationError):
            apply_diagonal(PureState.uniform(1), [1.0, 0.5])

    def test_diagonal_phase(self):
        """测试相位乘法"""
        out = apply_diagonal(PureState.uniform(1), [1.0, -1.0])
        self.assertAlmostEqual(out.amplitudes[1].real, -1.0 / math.sqrt(2.0))

    def test_householder_prepares_target(self):
        """测试 Householder 矩阵把 |0⟩ 映到目标态"""
        psi = haar_sample(4, 11)
        matrix = householder_preparation(psi)
        self.assertAlmostEqual(abs(np.vdot(psi.amplitudes, matrix[:, 0])), 1.0, places=10)
        self.assertTrue(np.allclose(matrix @ matrix.conj().T, np.eye(16), atol=1e-10))

    @settings(max_examples=25, deadline=None)
    @given(st.integers(min_value=1, max_value=8), st.integers(min_value=0, max_value=2 ** 32))
    def test_hadamard_self_inverse(self, n, seed):
        """测试 H^⊗n 自逆且保范"""
        psi = haar_sample(n, seed)
        twice = hadamard_transform(hadamard_transform(psi.amplitudes))
        self.assertTrue(np.allclose(twice, psi.amplitudes, atol=1e-10))
        self.assertAlmostEqual(float(np.linalg.norm(hadamard_transform(psi.amplitudes))), 1.0, places=10)

    # ==================== 测量 ====================

    def test_measure_basis_state(self):
        """测试测量计算基态是确定性的"""
        bits, post, probability = measure_register(PureState.basis(3, 5), [0, 2], seed=1)
        self.assertEqual(bits, (1, 1))
        self.assertAlmostEqual(probability, 1.0)
        self.assertTrue(post.allclose(PureState.basis(3, 5)))

    def test_measure_rejects_duplicates(self):
        """测试重复的测量比特"""
        with self.assertRaises(DimensionError):
            measure_register(PureState.uniform(2), [0, 0])

    def test_measure_collapses(self):
        """测试测量后态坍缩并归一化"""
        bits, post, probability = measure_register(PureState.uniform(2), [1], seed=3)
        self.assertAlmostEqual(probability, 0.5)
        self.assertAlmostEqual(marginal_probability(post, 1, bits[0]), 1.0)

    def test_marginal(self):
        """测试边缘概率"""
        self.assertAlmostEqual(marginal_probability(PureState.uniform(3), 2, 1), 0.5)


class TestSampling(unittest.TestCase):
    """Haar 与球冠采样测试类"""

    def test_haar_deterministic(self):
        """测试相同种子得到相同态"""
        self.assertTrue(haar_sample(5, 42).allclose(haar_sample(5, 42)))
        self.assertFalse(haar_sample(5, 42).allclose(haar_sample(5, 43)))

    def test_haar_rows_normalized(self):
        """测试批量样本逐行单位范数"""
        samples = haar_samples(4, 50, seed=2)
        self.assertTrue(np.allclose(np.linalg.norm(samples, axis=1), 1.0))

    def test_haar_dimension_limit(self):
        """测试比特数上限"""
        with self.assertRaises(DimensionError):
            haar_sample(15, 0)

    def test_cap_threshold_values(self):
        """测试 h(1)=0 且 (1−h²)^(N−1)=p"""
        self.assertEqual(cap_threshold(1.0, 16), 0.0)
        h = cap_threshold(0.1, 64)
        self.assertAlmostEqual((1.0 - h * h) ** 63, 0.1, places=12)

    def test_cap_threshold_domain(self):
        """测试 p 越界"""
        with self.assertRaises(DomainError):
            cap_threshold(1.5, 8)

    def test_haar_cap_mass(self):
        """测试 Haar 态落入质量 p 的球冠的频率（3 个标准误内）"""
        for N, n in ((8, 3), (64, 6)):
            samples = haar_samples(n, 20000, seed=N)
            mags = np.abs(samples[:, 0])
            for p in (1.0, 0.1, 0.01):
                freq = float(np.mean(mags >= cap_threshold(p, N)))
                se = math.sqrt(p * (1.0 - p) / samples.shape[0])
                self.assertLessEqual(abs(freq - p), 3.0 * se + 1e-12, f"N={N}, p={p}")

    def test_cap_samples_inside_cap(self):
        """测试球冠样本都在球冠内"""
        axis = haar_sample(3, 5)
        spec = CapSpec(0.05, axis)
        samples = cap_samples(spec, 500, seed=9)
        mags = np.abs(samples @ axis.amplitudes.conj())
        self.assertTrue(np.all(mags >= spec.h - 1e-12))

    def test_cap_mean_overlap(self):
        """测试球冠样本的平均重叠 1/N + h²(1−1/N)"""
        spec = CapSpec(0.1, PureState.basis(3, 0))
        values = np.abs(cap_samples(spec, 20000, seed=4)[:, 0]) ** 2
        expected = 1.0 / 8 + spec.h ** 2 * (1.0 - 1.0 / 8)
        se = float(np.std(values)) / math.sqrt(values.size)
        self.assertLessEqual(abs(float(np.mean(values)) - expected), 3.0 * se)

    def test_cap_ks(self):
        """测试球冠样本与理论条件分布一致"""
        spec = CapSpec(0.2, PureState.basis(4, 0))
        self.assertGreater(cap_ks_test(cap_samples(spec, 3000, seed=6), spec), 0.001)

    def test_cap_p1_is_haar(self):
        """测试 p=1 的球冠分布与 Haar 分布一致"""
        spec = CapSpec(1.0, PureState.basis(3, 0))
        p_value = haar_two_sample_test(cap_samples(spec, 3000, seed=1), haar_samples(3, 3000, seed=2))
        self.assertGreater(p_value, 0.001)

    def test_cap_sample_single(self):
        """测试单个球冠样本"""
        spec = CapSpec(0.5, PureState.basis(2, 1))
        state = cap_sample(spec, 3)
        self.assertGreaterEqual(abs(overlap(spec.axis, state)), spec.h - 1e-12)


if __name__ == "__main__":
    unittest.main()
