"""
异常定义模块

实验室内所有可预期错误的异常层次。
"""

from typing import Optional


class LabError(Exception):
    """实验室异常基类"""


class DimensionError(LabError, ValueError):
    """维度或比特数不合法"""


class DomainError(LabError, ValueError):
    """参数超出定义域"""


class ValidationError(LabError, ValueError):
    """输入数据未通过校验（非单位相位、未排序的幅度等）"""


class WitnessFormatError(LabError, ValueError):
    """见证串格式错误"""


class GroupError(LabError):
    """群结构相关错误（生成元证书不成立、元素不可达等）"""


class RetryExhaustedError(LabError):
    """随机化过程在重试上限内未成功"""

    def __init__(self, message: str, attempts: int):
        super().__init__(message)
        self.attempts = attempts


class ConfigError(LabError, ValueError):
    """实验配置校验失败"""


class CriteriaError(LabError):
    """开启 --assert 时验收条件不满足"""

    def __init__(self, message: str, failed: Optional[list] = None):
        super().__init__(message)
        self.failed = failed or []
