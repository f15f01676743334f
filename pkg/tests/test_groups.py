"""
显式模型群模块测试

测试群目录、群公理检查、子群闭包与正规子群枚举。
"""

import unittest
from concurrent.futures import ThreadPoolExecutor
from unittest.mock import patch

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from src.core import groups
from src.core.groups import (ExplicitGroup, abelian2_group, cyclic_group, dihedral_group, make_group,
                             make_group_from_spec, quaternion_group, symmetric_group)
from src.models.witness import ModelSpec
from src.utils.errors import DomainError, GroupError

CATALOG_SAMPLES = [
    ("cyclic", (6,)),
    ("dihedral", (4,)),
    ("symmetric", (3,)),
    ("symmetric", (4,)),
    ("abelian2", (2, 2)),
    ("quaternion", ()),
]

# 有单位元与逆元但不满足结合律的 5 阶拉丁方
NON_ASSOCIATIVE = np.array([
    [0, 1, 2, 3, 4],
    [1, 0, 3, 4, 2],
    [2, 4, 0, 1, 3],
    [3, 2, 4, 0, 1],
    [4, 3, 1, 2, 0],
])


class TestCatalog(unittest.TestCase):
    """群目录测试类"""

    def test_orders(self):
        """测试各目录群的阶"""
        self.assertEqual(cyclic_group(5).order, 5)
        self.assertEqual(dihedral_group(4).order, 8)
        self.assertEqual(symmetric_group(4).order, 24)
        self.assertEqual(abelian2_group(2, 3).order, 6)
        self.assertEqual(quaternion_group().order, 8)

    def test_axioms_hold(self):
        """测试目录群满足结合律"""
        for catalog_id, params in CATALOG_SAMPLES:
            make_group(catalog_id, params).check_axioms()

    def test_sampled_associativity(self):
        """测试大群使用随机三元组抽查"""
        symmetric_group(6).check_axioms(seed=0)

    def test_abelian(self):
        """测试交换性判定"""
        self.assertTrue(cyclic_group(7).is_abelian())
        self.assertTrue(abelian2_group(2, 4).is_abelian())
        self.assertFalse(symmetric_group(3).is_abelian())
        self.assertFalse(quaternion_group().is_abelian())

    def test_dihedral_relation(self):
        """测试 s·r = r⁻¹·s"""
        g = dihedral_group(5)
        r, s = g.element((1, 0)), g.element((0, 1))
        self.assertEqual(g.multiply(s, r), g.multiply(g.inverse(r), s))
        self.assertNotEqual(g.multiply(r, s), g.multiply(s, r))

    def test_quaternion_relations(self):
        """测试 i² = j² = k² = ijk = −1"""
        g = quaternion_group()
        i, j, k = g.element("i"), g.element("j"), g.element("k")
        minus_one = g.element("-1")
        for a in (i, j, k):
            self.assertEqual(g.multiply(a, a), minus_one)
        self.assertEqual(g.product([i, j, k]), minus_one)

    def test_element_orders(self):
        """测试元素阶"""
        g = dihedral_group(5)
        self.assertEqual(g.element_order(g.element((1, 0))), 5)
        self.assertEqual(g.element_order(g.element((2, 1))), 2)
        self.assertEqual(g.element_order(g.identity), 1)

    def test_element_lookup(self):
        """测试按描述查找元素"""
        g = symmetric_group(3)
        a = g.element((1, 0, 2))
        self.assertEqual(g.describe(a), (1, 0, 2))
        with self.assertRaises(DomainError):
            g.element((0, 0, 0))

    def test_empty_product(self):
        """测试空乘积为单位元"""
        g = symmetric_group(3)
        self.assertEqual(g.product([]), g.identity)

    @settings(max_examples=30, deadline=None)
    @given(st.sampled_from(CATALOG_SAMPLES), st.integers(min_value=0, max_value=10_000))
    def test_inverse_property(self, sample, raw):
        """性质测试：a·a⁻¹ = a⁻¹·a = e"""
        g = make_group(*sample)
        a = raw % g.order
        self.assertEqual(g.multiply(a, g.inverse(a)), g.identity)
        self.assertEqual(g.multiply(g.inverse(a), a), g.identity)


class TestTableValidation(unittest.TestCase):
    """乘法表校验测试类"""

    def test_non_associative(self):
        """测试结合律不成立时报错"""
        loop = ExplicitGroup(NON_ASSOCIATIVE, name="loop5")
        with self.assertRaises(GroupError):
            loop.check_axioms()

    def test_no_identity(self):
        """测试没有单位元"""
        with self.assertRaises(GroupError):
            ExplicitGroup(np.zeros((2, 2), dtype=int))

    def test_not_closed(self):
        """测试乘法表不封闭"""
        with self.assertRaises(GroupError):
            ExplicitGroup(np.array([[0, 2], [1, 0]]))

    def test_not_square(self):
        """测试乘法表不是方阵"""
        with self.assertRaises(GroupError):
            ExplicitGroup(np.zeros((2, 3), dtype=int))

    def test_table_read_only(self):
        """测试乘法表不可写"""
        g = cyclic_group(3)
        with self.assertRaises(ValueError):
            g.table[0, 0] = 1


class TestSubgroups(unittest.TestCase):
    """子群测试类"""

    def test_closure(self):
        """测试生成子群"""
        g = symmetric_group(3)
        rotation = g.element((1, 2, 0))
        self.assertEqual(len(g.subgroup_closure([rotation])), 3)
        self.assertEqual(g.subgroup_closure([]), frozenset([g.identity]))
        swaps = [g.element((1, 0, 2)), g.element((0, 2, 1))]
        self.assertEqual(len(g.subgroup_closure(swaps)), 6)

    def test_membership(self):
        """测试成员判定"""
        g = symmetric_group(3)
        rotation = g.element((1, 2, 0))
        self.assertTrue(g.is_member([rotation], g.element((2, 0, 1))))
        self.assertFalse(g.is_member([rotation], g.element((1, 0, 2))))

    def test_normal_subgroup_counts(self):
        """测试正规子群个数"""
        expected = {
            ("cyclic", (6,)): 4,
            ("dihedral", (4,)): 6,
            ("symmetric", (3,)): 3,
            ("symmetric", (4,)): 4,
            ("abelian2", (2, 2)): 5,
            ("quaternion", ()): 6,
        }
        for key, count in expected.items():
            g = make_group(*key)
            subgroups = g.normal_subgroups()
            self.assertEqual(len(subgroups), count, g.name)
            for subgroup in subgroups:
                self.assertTrue(g.is_normal(subgroup))
                self.assertEqual(g.order % len(subgroup), 0)

    def test_normal_subgroups_sorted(self):
        """测试正规子群按阶排序，首尾为平凡子群与全群"""
        g = symmetric_group(4)
        subgroups = g.normal_subgroups()
        self.assertEqual(subgroups[0], frozenset([g.identity]))
        self.assertEqual(len(subgroups[-1]), 24)
        self.assertEqual([len(s) for s in subgroups], [1, 4, 12, 24])

    def test_not_normal(self):
        """测试 S_3 中对换生成的子群不正规"""
        g = symmetric_group(3)
        self.assertFalse(g.is_normal(g.subgroup_closure([g.element((1, 0, 2))])))

    def test_normal_closure(self):
        """测试对换的正规闭包为 S_3"""
        g = symmetric_group(3)
        self.assertEqual(len(g.normal_closure([g.element((1, 0, 2))])), 6)


class TestMakeGroup(unittest.TestCase):
    """群构造测试类"""

    def test_unknown_catalog(self):
        """测试未知目录 id"""
        with self.assertRaises(GroupError):
            make_group("free", (2,))

    def test_wrong_arity(self):
        """测试参数个数不符"""
        with self.assertRaises(GroupError):
            make_group("abelian2", (2,))

    def test_parameter_domain(self):
        """测试参数越界包装为 GroupError"""
        with self.assertRaises(GroupError):
            make_group("symmetric", (7,))
        with self.assertRaises(GroupError):
            make_group("cyclic", (0,))

    def test_cached(self):
        """测试相同参数返回同一个群对象"""
        self.assertIs(make_group("dihedral", [3]), make_group("dihedral", (3,)))
        self.assertIs(make_group_from_spec(ModelSpec("dihedral", (3,))), make_group("dihedral", (3,)))

    def test_cached_across_threads(self):
        """测试多线程同时构造同一个群时只建一次并返回同一个对象"""
        calls = []
        builder, arity = groups.CATALOG["dihedral"]

        def counting(n):
            calls.append(n)
            return builder(n)

        with patch.dict(groups._cache, clear=True), \
                patch.dict(groups.CATALOG, {"dihedral": (counting, arity)}):
            with ThreadPoolExecutor(max_workers=8) as pool:
                results = list(pool.map(lambda _: make_group("dihedral", (9,)), range(32)))
        self.assertEqual(len(calls), 1)
        self.assertTrue(all(g is results[0] for g in results))

    def test_spec_recorded(self):
        """测试群记录自己的目录标识"""
        self.assertEqual(make_group("abelian2", (2, 3)).spec, ModelSpec("abelian2", (2, 3)))


if __name__ == "__main__":
    unittest.main()
