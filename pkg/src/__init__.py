"""
QCMA Query Lab - 量子查询复杂度实验室

以精确态矢量模拟复现带建议的标记态搜索、混合论证、伪随机态系综与群非成员协议，
并对每次黑盒调用记账。
"""

__version__ = "0.1.0"
__author__ = "QCMA Query Lab Contributors"
