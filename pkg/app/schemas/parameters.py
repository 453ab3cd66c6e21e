from typing import Dict, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.core.errors import ParameterError

RuleName = Literal["ising_ad", "ad_diffusion", "zgb", "evans_co"]

# 每种速率规则必需的参数
RULE_PARAMETERS: Dict[str, Tuple[str, ...]] = {
    "ising_ad": ("beta", "J", "h", "c_a", "c_d"),
    "ad_diffusion": ("beta", "J", "h", "c_a", "c_d", "c_diff"),
    "zgb": ("c_a", "c_r"),
    "evans_co": ("c_a", "c_d", "c_r", "c_diff"),
}

PARAMETER_NAMES = ("beta", "J", "h", "c_a", "c_d", "c_diff", "c_r")


class ParameterVector(BaseModel):
    """模型参数 θ；未用到的参数保持为 None"""

    model_config = ConfigDict(frozen=True)

    beta: Optional[float] = Field(None, ge=0, description="逆温度")
    J: Optional[float] = Field(None, description="相互作用能")
    h: Optional[float] = Field(None, description="外场")
    c_a: Optional[float] = Field(None, ge=0, description="吸附速率")
    c_d: Optional[float] = Field(None, ge=0, description="脱附速率")
    c_diff: Optional[float] = Field(None, ge=0, description="扩散速率")
    c_r: Optional[float] = Field(None, ge=0, description="反应速率")

    def value(self, name: str) -> float:
        if name not in PARAMETER_NAMES:
            raise ParameterError(f"未知参数: {name}")
        value = getattr(self, name)
        if value is None:
            raise ParameterError(f"参数 {name} 未设置")
        return value


class PerturbationDirection(BaseModel):
    """有限差分方向 ε = h·e_l"""

    model_config = ConfigDict(frozen=True)

    parameter: str = Field(..., description="被扰动的参数名")
    step: float = Field(..., description="差分步长 h，不能为 0")

    @field_validator("parameter")
    @classmethod
    def check_parameter(cls, v):
        if v not in PARAMETER_NAMES:
            raise ValueError(f"未知参数: {v}")
        return v

    @field_validator("step")
    @classmethod
    def check_step(cls, v):
        if v == 0:
            raise ValueError("差分步长不能为 0")
        return v


class ModelSpec(BaseModel):
    """速率规则 + 参数；物种集合与邻域形状由规则和格点维数决定"""

    model_config = ConfigDict(frozen=True)

    rule: RuleName
    parameters: ParameterVector

    @model_validator(mode="after")
    def check_required(self):
        missing = [p for p in RULE_PARAMETERS[self.rule] if getattr(self.parameters, p) is None]
        if missing:
            raise ValueError(f"规则 {self.rule} 缺少参数: {', '.join(missing)}")
        return self

    def with_parameters(self, parameters: ParameterVector) -> "ModelSpec":
        return ModelSpec(rule=self.rule, parameters=parameters)


def perturb(theta: ParameterVector, direction: PerturbationDirection) -> ParameterVector:
    """θ + h·e_l，其余参数不变"""
    current = theta.value(direction.parameter)
    updated = theta.model_copy(update={direction.parameter: current + direction.step})
    # model_copy 不会重新校验
    return ParameterVector(**updated.model_dump())
