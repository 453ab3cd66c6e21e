from typing import Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.core.errors import ConfigError
from app.core.lattice import Lattice, SpeciesSet
from app.coupling.schemes import CouplingScheme, JointSelection, SchemeKind
from app.engine.rng import RngStream
from app.models import MODEL_REGISTRY
from app.observables.observable import OBSERVABLE_NAMES, Observable, get_observable
from app.observables.partition import Partition
from app.schemas.parameters import (
    ModelSpec,
    ParameterVector,
    PerturbationDirection,
    RuleName,
)

DEFAULT_PARTITION = "(-inf,0); {0}; (0,inf)"

# 随机初始构型使用的子流键，远大于任何路径下标
INITIAL_STATE_KEY = 2 ** 31 - 1


class ModelSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    rule: RuleName = Field(..., description="速率规则")
    parameters: ParameterVector = Field(..., description="模型参数 θ")

    @property
    def spec(self) -> ModelSpec:
        return ModelSpec(rule=self.rule, parameters=self.parameters)


class LatticeSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    dims: List[int] = Field(..., min_length=1, max_length=2, description="各维边长")
    initial: str = Field("vacant", description="vacant | occupied | fill:<v> | random:<p> | list:<v0,v1,...>")
    initial_b: Optional[str] = Field(None, description="η 的初始构型，缺省与 σ 相同")

    @field_validator("dims")
    @classmethod
    def check_dims(cls, v):
        if any(n < 1 for n in v):
            raise ValueError("边长必须为正整数")
        return v


class ObservableSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: str = Field("coverage", description="观测量")
    species: Optional[int] = Field(None, description="species_coverage 的目标物种")
    r: int = Field(1, ge=1, description="pair_correlation 的距离")
    partition: str = Field(DEFAULT_PARTITION, description="增量划分 J_1..J_m")

    @field_validator("name")
    @classmethod
    def check_name(cls, v):
        if v not in OBSERVABLE_NAMES:
            raise ValueError(f"不支持的观测量: {v}")
        return v

    @field_validator("partition")
    @classmethod
    def check_partition(cls, v):
        Partition.parse(v)
        return v

    def build(self, lattice: Lattice, model_spec: ModelSpec) -> Observable:
        """在给定格点上构造观测量；hamiltonian 取基准参数的 J 与 h"""
        parameters = model_spec.parameters
        species = MODEL_REGISTRY[model_spec.rule].species
        return get_observable(self.name, lattice, species, target=self.species, r=self.r,
                              J=parameters.J, h=parameters.h)


class PerturbationSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    parameter: str = Field(..., description="被扰动的参数名")
    step: float = Field(..., description="差分步长 h")

    @property
    def direction(self) -> PerturbationDirection:
        return PerturbationDirection(parameter=self.parameter, step=self.step)

    @model_validator(mode="after")
    def check_direction(self):
        PerturbationDirection(parameter=self.parameter, step=self.step)
        return self


class CouplingSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    schemes: List[str] = Field(default_factory=lambda: ["uncoupled"], min_length=1)
    q: List[int] = Field(default_factory=list, description="coarse 胞大小列表；sweep-q 中 0 表示非耦合基线")
    selection: JointSelection = JointSelection.COMMON

    @field_validator("schemes")
    @classmethod
    def check_schemes(cls, v):
        for name in v:
            CouplingScheme.parse(name)
        return v

    @field_validator("q")
    @classmethod
    def check_q(cls, v):
        if any(q < 0 for q in v):
            raise ValueError("q 不能为负")
        return v


class RunSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    T: float = Field(..., gt=0, description="时间上限")
    grid: str = Field(..., description="start:stop:count 或逗号分隔的时间列表")
    samples: int = Field(..., ge=2, description="路径数 N_s")
    seed: int = Field(0, ge=0, description="主种子")
    workers: Optional[int] = Field(None, ge=1)
    rebuild_interval: Optional[int] = Field(None, ge=1)
    repeats: Optional[int] = Field(None, ge=1, description="bench 重复次数")
    bench_samples: Optional[int] = Field(None, ge=2, description="bench 每次使用的路径数")
    tv_tolerance: float = Field(0.02, gt=0, description="oracle-check 的全变差容差")
    se_tolerance: float = Field(3.0, gt=0, description="oracle-check 的标准误倍数")

    def grid_times(self) -> np.ndarray:
        return parse_grid(self.grid)


class OutputSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    directory: str = Field("results", description="输出目录")
    snapshot: bool = Field(False, description="是否输出路径 0 的末态构型")


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(protected_namespaces=())

    model: ModelSection
    lattice: LatticeSection
    observable: ObservableSection = Field(default_factory=ObservableSection)
    perturbation: PerturbationSection
    coupling: CouplingSection = Field(default_factory=CouplingSection)
    run: RunSection
    output: OutputSection = Field(default_factory=OutputSection)
    raw: Dict[str, Dict[str, str]] = Field(default_factory=dict, description="配置文件原文（写入清单）")

    @model_validator(mode="after")
    def check_consistency(self):
        # 跨节检查直接抛 ConfigError，由解析器补上行号
        n = self.build_lattice().n_sites
        bad = [q for q in self.coupling.q if q != 0 and n % q != 0]
        if bad:
            raise ConfigError(f"q 值 {bad} 不能整除格点数 N={n}", section="coupling", key="q")
        try:
            times = self.run.grid_times()
        except ValueError as e:
            raise ConfigError(str(e), section="run", key="grid")
        if times[0] < 0 or times[-1] > self.run.T:
            raise ConfigError(f"时间网格必须位于 [0, {self.run.T}] 内", section="run", key="grid")
        species = MODEL_REGISTRY[self.model.rule].species
        try:
            parse_initial(self.lattice.initial, self.build_lattice(), species, self.run.seed)
        except ValueError as e:
            raise ConfigError(str(e), section="lattice", key="initial")
        if self.lattice.initial_b is not None:
            try:
                parse_initial(self.lattice.initial_b, self.build_lattice(), species, self.run.seed + 1)
            except ValueError as e:
                raise ConfigError(str(e), section="lattice", key="initial_b")
        return self

    def build_lattice(self) -> Lattice:
        return Lattice(tuple(self.lattice.dims))

    @property
    def model_spec(self) -> ModelSpec:
        return self.model.spec

    @property
    def partition(self) -> Partition:
        return Partition.parse(self.observable.partition)

    def schemes(self) -> List[CouplingScheme]:
        """配置中的耦合方案；coarse 按 q 列表展开（q=0 与 q=N 跳过）"""
        n = self.build_lattice().n_sites
        result = []
        for name in self.coupling.schemes:
            scheme = CouplingScheme.parse(name, selection=self.coupling.selection)
            if scheme.kind == SchemeKind.COARSE:
                qs = [q for q in self.coupling.q if 0 < q < n]
                if not qs:
                    raise ConfigError("coarse 方案需要 q 列表", section="coupling", key="q")
                result.extend(CouplingScheme.parse(name, q, self.coupling.selection) for q in qs)
            else:
                result.append(scheme)
        return result

    def initial_states(self, species: SpeciesSet) -> Tuple[np.ndarray, np.ndarray]:
        lattice = self.build_lattice()
        sigma0 = parse_initial(self.lattice.initial, lattice, species, self.run.seed)
        if self.lattice.initial_b is None:
            return sigma0, sigma0.copy()
        return sigma0, parse_initial(self.lattice.initial_b, lattice, species, self.run.seed + 1)


def parse_grid(text: str) -> np.ndarray:
    """"start:stop:count" 均匀网格，或逗号分隔的显式列表"""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"网格格式应为 start:stop:count: {text}")
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
        if count < 1:
            raise ValueError("网格点数必须为正")
        times = np.linspace(start, stop, count)
    else:
        times = np.array([float(t) for t in text.split(",") if t.strip()])
    if times.size == 0:
        raise ValueError("时间网格为空")
    if np.any(np.diff(times) < 0):
        raise ValueError("时间网格必须单调不减")
    return times


def parse_initial(text: str, lattice: Lattice, species: SpeciesSet, seed: int) -> np.ndarray:
    """解析初始构型描述"""
    n = lattice.n_sites
    vacant = species.vacant if species.vacant is not None else 0
    kind, _, arg = text.strip().partition(":")
    if kind == "vacant":
        sigma = np.full(n, vacant, dtype=np.int8)
    elif kind == "occupied":
        sigma = np.full(n, 1, dtype=np.int8)
    elif kind == "fill":
        sigma = np.full(n, int(arg), dtype=np.int8)
    elif kind == "random":
        p = float(arg)
        if not 0 <= p <= 1:
            raise ValueError(f"占据概率必须在 [0,1] 内: {p}")
        generator = RngStream(np.random.SeedSequence(seed, spawn_key=(INITIAL_STATE_KEY,))).generator
        occupied_species = [s for s in species.values if s != vacant]
        occupied = generator.random(n) < p
        choice = generator.integers(0, len(occupied_species), size=n)
        sigma = np.where(occupied, np.asarray(occupied_species)[choice], vacant).astype(np.int8)
    elif kind == "list":
        sigma = np.array([int(v) for v in arg.split(",") if v.strip()], dtype=np.int8)
        if sigma.size != n:
            raise ValueError(f"初始构型长度 {sigma.size} 与格点数 {n} 不符")
    else:
        raise ValueError(f"无法解析的初始构型: {text}")
    if not np.isin(sigma, species.values).all():
        raise ValueError(f"初始构型包含物种集合 {species.values} 以外的取值")
    return sigma
