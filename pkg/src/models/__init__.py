"""
数据模型模块

定义态、见证、报告与实验配置等数据模型类。
"""

from src.models.state import PureState
from src.models.witness import AdviceWitness, GnmWitness
from src.models.experiment import ExperimentConfig, RunRecord

__all__ = ["PureState", "AdviceWitness", "GnmWitness", "ExperimentConfig", "RunRecord"]
