"""
核心功能模块

包含态矢量模拟、黑盒、建议网、搜索验证、混合论证、伪随机系综与黑盒群协议的实现。
"""

from src.core.oracles import IdentityOracle, MarkedStateOracle, QueryCounter
from src.core.search import Verdict, qcma_verify
from src.core.gnm import gnm_verify
from src.core.experiment_runner import ExperimentRunner

__all__ = ["IdentityOracle", "MarkedStateOracle", "QueryCounter", "Verdict", "qcma_verify",
           "gnm_verify", "ExperimentRunner"]
