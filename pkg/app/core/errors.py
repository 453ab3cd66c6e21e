"""
异常定义
库代码只抛异常，由 app/main.py 统一转换为退出码
"""

from typing import Optional


class KMCError(Exception):
    """所有领域异常的基类"""


class LatticeError(KMCError, ValueError):
    """格点下标越界、邻域形状非法、构型长度不匹配"""


class ParameterError(KMCError, ValueError):
    """未知参数名、差分步长为零、速率常数缺失或为负"""


class ConfigError(KMCError):
    """实验配置错误，命令行退出码 2"""

    def __init__(self, message: str, section: Optional[str] = None,
                 key: Optional[str] = None, line: Optional[int] = None):
        self.message = message
        self.section = section
        self.key = key
        self.line = line
        location = ""
        if section:
            location = f"[{section}]"
            if key:
                location += f" {key}"
            if line is not None:
                location += f" (第 {line} 行)"
            location += ": "
        super().__init__(f"{location}{message}")


class StateSpaceTooLarge(ConfigError):
    """精确解的状态空间超出预算"""


class InvariantViolation(KMCError):
    """运行期不变量被破坏，命令行退出码 3"""


class InfeasibleCoupling(KMCError):
    """耦合速率违反边缘约束"""


class OracleIntegrationError(KMCError):
    """主方程积分失败"""
