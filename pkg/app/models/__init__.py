"""
速率规则注册表
"""

from typing import Dict, Type

from app.core.errors import ParameterError
from app.core.lattice import Lattice
from app.models.base import RatedEvent, RateModel
from app.models.diffusion import AdsorptionDiffusionModel
from app.models.evans import EvansModel
from app.models.ising import IsingAdsorptionModel
from app.models.zgb import ZGBModel
from app.schemas.parameters import ModelSpec

MODEL_REGISTRY: Dict[str, Type[RateModel]] = {
    IsingAdsorptionModel.rule: IsingAdsorptionModel,
    AdsorptionDiffusionModel.rule: AdsorptionDiffusionModel,
    ZGBModel.rule: ZGBModel,
    EvansModel.rule: EvansModel,
}


def build_model(spec: ModelSpec, lattice: Lattice) -> RateModel:
    """根据模型描述构造速率规则实例"""
    model_cls = MODEL_REGISTRY.get(spec.rule)
    if model_cls is None:
        raise ParameterError(f"不支持的速率规则: {spec.rule}")
    return model_cls(lattice, spec.parameters)


def enumerate_events(spec: ModelSpec, lattice: Lattice, sigma) -> list:
    return build_model(spec, lattice).enumerate_events(sigma)


__all__ = [
    "MODEL_REGISTRY",
    "RatedEvent",
    "RateModel",
    "build_model",
    "enumerate_events",
]
