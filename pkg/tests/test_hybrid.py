"""
混合论证实验模块测试

测试逐步混合不等式、球冠期望闭式与数值积分，以及成功率-查询预算扫描。
"""

import math
import unittest

import numpy as np

from src.core.hybrid import (AlgorithmSpec, GateStage, QueryStage, amplification_algorithm,
                             cap_mixture_overlap, default_budgets, expected_overlap,
                             expected_overlap_quadrature, grover_algorithm, lower_bound_sweep,
                             preparation_algorithm, run_hybrid)
from src.core.oracles import MarkedStateOracle
from src.core.search import amplitude_amplify
from src.core.statevec import cap_samples, haar_sample
from src.models.state import CapSpec, PureState
from src.utils.errors import DimensionError, DomainError, ValidationError
from src.utils.rng import RngSeed


class TestAlgorithmSpec(unittest.TestCase):
    """算法描述测试类"""

    def test_query_count(self):
        """测试 T 为查询阶段数"""
        self.assertEqual(grover_algorithm(3, 5).T, 5)

    def test_gate_shape_checked(self):
        """测试矩阵门形状校验"""
        with self.assertRaises(DimensionError):
            AlgorithmSpec(query_qubits=2, stages=(GateStage(np.eye(2)),))

    def test_control_in_workspace(self):
        """测试受控查询的控制比特必须在工作区"""
        with self.assertRaises(ValidationError):
            AlgorithmSpec(query_qubits=2, stages=(QueryStage(control=0),))

    def test_register_limit(self):
        """测试联合寄存器上限"""
        with self.assertRaises(DimensionError):
            AlgorithmSpec(query_qubits=14, workspace_qubits=3, stages=())


class TestRunHybrid(unittest.TestCase):
    """混合论证测试类"""

    def test_zero_queries(self):
        """测试 T=0 时没有逐步距离且总距离为 0"""
        transcript = run_hybrid(grover_algorithm(4, 0), haar_sample(4, 1))
        self.assertEqual(transcript.deltas, [])
        self.assertEqual(transcript.total_delta, 0.0)

    def test_prepare_then_query(self):
        """测试制备 |ψ⟩ 后查询一次时 delta = bound = 2"""
        psi = haar_sample(5, 3)
        transcript = run_hybrid(preparation_algorithm(psi), psi)
        self.assertAlmostEqual(transcript.deltas[0], 2.0, places=10)
        self.assertAlmostEqual(transcript.bounds[0], 2.0, places=10)

    def test_dimension_mismatch(self):
        """测试 ψ 与查询寄存器维度不符"""
        with self.assertRaises(DimensionError):
            run_hybrid(grover_algorithm(4, 1), haar_sample(3, 0))

    def test_per_step_inequality(self):
        """测试 Grover 型算法逐步满足 delta_t ≤ 2·sqrt(⟨ψ|ρ_t|ψ⟩)"""
        seed = RngSeed(5)
        for n in (6, 8):
            for i in range(25):
                transcript = run_hybrid(grover_algorithm(n, 6), haar_sample(n, seed.spawn(n, i)))
                self.assertLessEqual(transcript.max_violation, 1e-9)
                self.assertTrue(transcript.satisfies_triangle())

    def test_grover_mean_delta(self):
        """测试 n=8 时平均逐步距离不超过 1.2·2/sqrt(N)"""
        seed = RngSeed(6)
        deltas = [run_hybrid(grover_algorithm(8, 3), haar_sample(8, seed.spawn(i))).mean_delta
                  for i in range(100)]
        self.assertLessEqual(float(np.mean(deltas)), 1.2 * 2.0 / math.sqrt(256))

    def test_amplification_bias(self):
        """测试建议放大算法的接受概率偏差不超过总距离"""
        seed = RngSeed(8)
        for i in range(10):
            psi = haar_sample(4, seed.spawn(i, 0))
            phi = haar_sample(4, seed.spawn(i, 1))
            transcript = run_hybrid(amplification_algorithm(phi, 2), psi)
            self.assertEqual(transcript.accept_with_identity, 0.0)
            self.assertLessEqual(transcript.bias, transcript.total_delta + 1e-9)
            self.assertLessEqual(transcript.max_violation, 1e-9)

    def test_amplification_matches_search(self):
        """测试放大算法的接受概率与振幅放大的精确成功概率一致"""
        psi = haar_sample(5, 13)
        phi = haar_sample(5, 14)
        report = amplitude_amplify(MarkedStateOracle(psi), phi, 10, seed=0)
        transcript = run_hybrid(amplification_algorithm(phi, report.iterations), psi)
        self.assertAlmostEqual(transcript.accept_with_oracle, report.success_probability, places=10)


class TestExpectedOverlap(unittest.TestCase):
    """球冠期望测试类"""

    def test_haar_moment(self):
        """测试 p=1 时为 1/N"""
        self.assertAlmostEqual(expected_overlap(1.0, 64), 1.0 / 64)

    def test_quadrature_agrees(self):
        """测试数值积分与闭式一致"""
        for N in (8, 64, 1024):
            for p in (1.0, 0.1, 0.01, 2.0 ** -10):
                self.assertAlmostEqual(expected_overlap_quadrature(p, N), expected_overlap(p, N),
                                       delta=1e-9, msg=f"N={N}, p={p}")

    def test_monte_carlo(self):
        """测试 N=16, p=0.1 时与球冠采样一致（3 个标准误内）"""
        spec = CapSpec(0.1, PureState.basis(4, 0))
        values = np.abs(cap_samples(spec, 50000, seed=16)[:, 0]) ** 2
        se = float(np.std(values)) / math.sqrt(values.size)
        self.assertLessEqual(abs(float(np.mean(values)) - expected_overlap(0.1, 16)), 3.0 * se)

    def test_log_scaling(self):
        """测试期望不超过 2·(1 + ln(1/p))/N"""
        for N in (8, 64, 1024):
            for p in (1.0, 0.1, 1e-3, math.exp(-N / 2)):
                self.assertLessEqual(expected_overlap(p, N), 2.0 * (1.0 + math.log(1.0 / p)) / N)

    def test_domain(self):
        """测试 p 越界"""
        with self.assertRaises(DomainError):
            expected_overlap(0.0, 8)

    def test_mixtures_do_not_beat_cap(self):
        """测试质量不小于 p 的球冠混合不超过 τ(p) 的期望"""
        rng = np.random.default_rng(3)
        for _ in range(50):
            masses = rng.uniform(0.05, 1.0, size=3)
            weights = rng.dirichlet(np.ones(3))
            weights = weights / weights.sum()
            mixture, tau = cap_mixture_overlap(0.05, 32, masses, weights)
            self.assertLessEqual(mixture, tau + 1e-12)

    def test_mixture_rejects_small_mass(self):
        """测试分量质量小于 p 时报错"""
        with self.assertRaises(DomainError):
            cap_mixture_overlap(0.5, 8, [0.1], [1.0])


class TestLowerBoundSweep(unittest.TestCase):
    """下界扫描测试类"""

    def test_default_budgets(self):
        """测试默认预算为 2 的幂加满预算"""
        self.assertEqual(default_budgets(4, 24), [1, 2, 4, 6])
        self.assertEqual(default_budgets(4, 24, dense=True), [1, 2, 3, 4, 5, 6])

    def test_full_budget_success(self):
        """测试满预算下成功率不低于 2/3 且混合不等式成立"""
        rows = lower_bound_sweep([4], [24], trials=30, seed=1)
        full = max(rows, key=lambda row: row["T"])
        self.assertEqual(full["T"], 6)
        self.assertGreaterEqual(full["success"], 2.0 / 3.0)
        for row in rows:
            self.assertLessEqual(row["max_delta_violation"], 1e-9)
            self.assertEqual(row["bias_violations"], 0)

    def test_single_query_fails(self):
        """测试 n=10, m=n 时单次查询的成功率低于 0.1"""
        rows = lower_bound_sweep([10], [10], trials=40, seed=2, budgets=[1], with_hybrid=False)
        self.assertEqual(len(rows), 1)
        self.assertLess(rows[0]["success"], 0.1)

    def test_thread_count_invariance(self):
        """测试结果与线程数无关"""
        one = lower_bound_sweep([3, 4], [12], trials=6, seed=9, threads=1)
        three = lower_bound_sweep([3, 4], [12], trials=6, seed=9, threads=3)
        self.assertEqual(one, three)

    def test_rows_sorted(self):
        """测试行按 (n, m, T) 排序"""
        rows = lower_bound_sweep([4, 3], [20, 12], trials=2, seed=4, with_hybrid=False)
        keys = [(row["n"], row["m"], row["T"]) for row in rows]
        self.assertEqual(keys, sorted(keys))


if __name__ == "__main__":
    unittest.main()
