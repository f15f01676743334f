"""
搜索与验证模块测试

测试 Hadamard 测试、振幅放大调度、QCMA 验证器与 BQP/qpoly 判定。
"""

import math
import unittest
from unittest.mock import patch

import numpy as np

from src.core import search
from src.core.advice_net import encode_witness, serialize
from src.core.oracles import IdentityOracle, MarkedStateOracle, QpolyOracle
from src.core.search import (Verdict, amplitude_amplify, grover_schedule, hadamard_test, qcma_verify,
                             qpoly_decide, query_budget, reflect_about)
from src.core.statevec import haar_sample
from src.models.state import PureState
from src.utils.errors import DimensionError
from src.utils.rng import RngSeed


class TestHadamardTest(unittest.TestCase):
    """Hadamard 测试测试类"""

    def test_acceptance_equals_overlap(self):
        """测试接受概率等于 |⟨ψ|φ⟩|²"""
        seed = RngSeed(100)
        for i in range(100):
            psi = haar_sample(8, seed.spawn(i, 0))
            phi = haar_sample(8, seed.spawn(i, 1))
            oracle = MarkedStateOracle(psi)
            _, probability = hadamard_test(oracle, phi, seed.spawn(i, 2))
            expected = abs(np.vdot(psi.amplitudes, phi.amplitudes)) ** 2
            self.assertAlmostEqual(probability, expected, delta=1e-10)
            self.assertEqual(oracle.queries, 1)

    def test_identity_never_accepts(self):
        """测试恒等黑盒下接受概率恰为 0"""
        oracle = IdentityOracle(4)
        for i in range(20):
            accepted, probability = hadamard_test(oracle, haar_sample(4, i), i)
            self.assertFalse(accepted)
            self.assertEqual(probability, 0.0)

    def test_marked_state_always_accepts(self):
        """测试 φ = ψ 时必然接受"""
        psi = haar_sample(5, 8)
        accepted, probability = hadamard_test(MarkedStateOracle(psi), psi, 1)
        self.assertTrue(accepted)
        self.assertAlmostEqual(probability, 1.0, places=10)

    def test_dimension_mismatch(self):
        """测试维度不符"""
        with self.assertRaises(DimensionError):
            hadamard_test(IdentityOracle(3), PureState.uniform(2))


class TestSchedule(unittest.TestCase):
    """迭代调度测试类"""

    def test_small_angle(self):
        """测试 T = floor(π/(4θ))"""
        theta = math.asin(0.1)
        T = grover_schedule(theta, 100)
        self.assertEqual(T, int(math.floor(math.pi / (4 * theta))))
        self.assertGreaterEqual(math.sin((2 * T + 1) * theta) ** 2, 0.5)

    def test_capped(self):
        """测试迭代数受上限约束"""
        self.assertEqual(grover_schedule(math.asin(0.01), 3), 3)
        self.assertEqual(grover_schedule(0.3, 0), 0)

    def test_zero_angle(self):
        """测试零重叠不迭代"""
        self.assertEqual(grover_schedule(0.0, 10), 0)

    def test_large_overlap(self):
        """测试 h = 0.3 时精确模拟的成功概率不低于 1/2"""
        psi = haar_sample(6, 4)
        amps = psi.amplitudes
        other = haar_sample(6, 5).amplitudes
        other = other - np.vdot(amps, other) * amps
        other = other / np.linalg.norm(other)
        phi = PureState.from_amplitudes(0.3 * amps + math.sqrt(1 - 0.09) * other, normalize=True)
        report = amplitude_amplify(MarkedStateOracle(psi), phi, 50, seed=1)
        T = report.iterations
        self.assertAlmostEqual(report.success_probability, math.sin((2 * T + 1) * math.asin(0.3)) ** 2,
                               places=9)
        self.assertGreaterEqual(report.success_probability, 0.5)
        self.assertEqual(report.queries_used, T + 1)

    def test_reflect_fixes_axis(self):
        """测试 R_φ|φ⟩ = |φ⟩"""
        phi = haar_sample(3, 2)
        self.assertTrue(reflect_about(phi, phi).allclose(phi))


class TestQcmaVerify(unittest.TestCase):
    """QCMA 验证器测试类"""

    def test_honest_acceptance(self):
        """测试诚实见证的接受频率不低于 2/3 且查询数不超过预算"""
        n = 8
        seed = RngSeed(7)
        for m in (20, 40, 80):
            accepted = 0
            trials = 60
            for i in range(trials):
                psi = haar_sample(n, seed.spawn(m, i))
                oracle = MarkedStateOracle(psi)
                bits = serialize(encode_witness(psi, m))
                verdict, report = qcma_verify(oracle, bits, n, m, seed.spawn(m, i, 1))
                accepted += verdict is Verdict.ACCEPT
                self.assertLessEqual(report.queries_used, query_budget(n, m) + 1)
            self.assertGreaterEqual(accepted / trials, 2.0 / 3.0, f"m={m}")

    def test_query_growth_with_n(self):
        """测试 m 固定时 n 每加 2 平均查询数约翻倍"""
        m = 12
        seed = RngSeed(17)
        means = {}
        for n in (8, 10):
            used = []
            for i in range(100):
                psi = haar_sample(n, seed.spawn(n, i))
                bits = serialize(encode_witness(psi, m))
                _, report = qcma_verify(MarkedStateOracle(psi), bits, n, m, seed.spawn(n, i, 1))
                used.append(report.queries_used)
            means[n] = float(np.mean(used))
        ratio = means[10] / means[8]
        self.assertGreaterEqual(ratio, 1.5, means)
        self.assertLessEqual(ratio, 2.5, means)

    def test_identity_rejects(self):
        """测试恒等黑盒下总是拒绝"""
        psi = haar_sample(6, 1)
        bits = serialize(encode_witness(psi, 40))
        for i in range(10):
            verdict, _ = qcma_verify(IdentityOracle(6), bits, 6, 40, i)
            self.assertIs(verdict, Verdict.REJECT)

    def test_malformed_zero_queries(self):
        """测试格式错误的见证被结构性拒绝且不消耗查询"""
        oracle = MarkedStateOracle(haar_sample(4, 0))
        for bits in ("01x", "0000011", "1" * 30):
            verdict, report = qcma_verify(oracle, bits, 4, 24)
            self.assertIs(verdict, Verdict.MALFORMED)
            self.assertEqual(report.queries_used, 0)
        self.assertEqual(oracle.queries, 0)

    def test_max_iters_limits_queries(self):
        """测试受限查询预算"""
        psi = haar_sample(8, 2)
        oracle = MarkedStateOracle(psi)
        bits = serialize(encode_witness(psi, 40))
        _, report = qcma_verify(oracle, bits, 8, 40, 0, max_iters=2)
        self.assertLessEqual(report.queries_used, 3)

    def test_budget_passed_to_amplifier(self):
        """测试验证器把迭代预算传给振幅放大"""
        psi = haar_sample(6, 3)
        bits = serialize(encode_witness(psi, 40))
        with patch.object(search, "amplitude_amplify", wraps=search.amplitude_amplify) as mock_amp:
            qcma_verify(MarkedStateOracle(psi), bits, 6, 40, 0)
            self.assertEqual(mock_amp.call_args[0][2], query_budget(6, 40))


class TestQpolyDecide(unittest.TestCase):
    """BQP/qpoly 判定测试类"""

    def test_decides_language(self):
        """测试以概率 1 输出 L(x)"""
        advice = haar_sample(3, 12)
        table = np.array([0, 1, 1, 0, 1, 0, 0, 1])
        oracle = QpolyOracle(advice, table)
        for x in range(8):
            bit, probability = qpoly_decide(oracle, x, seed=x)
            self.assertEqual(bit, table[x])
            self.assertAlmostEqual(probability, float(table[x]), places=10)

    def test_input_range(self):
        """测试输入越界"""
        with self.assertRaises(DimensionError):
            qpoly_decide(QpolyOracle(PureState.uniform(2), {}), 4)


if __name__ == "__main__":
    unittest.main()
