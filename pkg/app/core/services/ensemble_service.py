"""
耦合路径系综的并行执行
路径按下标切成固定大小的分片，分片交给 joblib worker，结果按下标顺序合并，
因此统计量与 worker 数无关
"""

import logging
import time
from collections import Counter
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from joblib import Parallel, delayed
from pydantic import BaseModel, ConfigDict, Field

from app.core.config import settings
from app.core.lattice import Lattice
from app.coupling.paths import simulate_coupled_path
from app.coupling.schemes import CouplingScheme
from app.engine.rng import RngStream
from app.estimators.statistics import RunningStats, merge_all
from app.models import build_model
from app.observables.partition import Partition
from app.schemas.estimator_result import EstimatorResult
from app.schemas.experiment_config import DEFAULT_PARTITION, ObservableSection
from app.schemas.parameters import ModelSpec

logger = logging.getLogger(__name__)

State = Tuple[int, ...]


class PathJob(BaseModel):
    """一组耦合路径的完整描述；只含可序列化的值，供 worker 进程重建对象"""

    model_config = ConfigDict(frozen=True, protected_namespaces=())

    model_a: ModelSpec = Field(..., description="θ")
    model_b: ModelSpec = Field(..., description="θ+ε")
    dims: Tuple[int, ...]
    sigma0: Tuple[int, ...]
    eta0: Tuple[int, ...]
    T: float = Field(..., gt=0)
    grid: Tuple[float, ...]
    observable: ObservableSection = Field(default_factory=ObservableSection)
    partition: str = DEFAULT_PARTITION
    scheme: CouplingScheme
    seed: int = Field(0, ge=0)
    step: float = 1.0
    rebuild_interval: Optional[int] = None
    collect_final: bool = Field(False, description="是否统计最后一个网格时刻的构型分布")


@dataclass
class ChunkResult:
    stats: EstimatorResult
    finals_a: Counter = field(default_factory=Counter)
    finals_b: Counter = field(default_factory=Counter)
    # 下标 0 路径在最后一个网格时刻的 (σ, η)
    first_pair: Optional[Tuple[State, State]] = None


@dataclass
class EnsembleOutcome:
    result: EstimatorResult
    finals_a: Counter
    finals_b: Counter
    first_pair: Optional[Tuple[State, State]]
    elapsed: float


def run_chunk(job: PathJob, start: int, stop: int) -> ChunkResult:
    """在当前进程里模拟路径 start..stop-1"""
    lattice = Lattice(job.dims)
    model_a = build_model(job.model_a, lattice)
    model_b = build_model(job.model_b, lattice)
    observable = job.observable.build(lattice, job.model_a)
    partition = Partition.parse(job.partition)
    sigma0 = np.array(job.sigma0, dtype=np.int8)
    eta0 = np.array(job.eta0, dtype=np.int8)
    grid = np.array(job.grid, dtype=float)

    stats = RunningStats(job.scheme.label, grid, job.step)
    finals_a, finals_b = Counter(), Counter()
    first_pair = None
    for i in range(start, stop):
        path = simulate_coupled_path(job.scheme, model_a, model_b, sigma0, eta0, job.T, grid,
                                     observable, partition, RngStream.for_path(job.seed, i),
                                     job.rebuild_interval)
        stats.add(path.values_a, path.values_b, path.n_events)
        if job.collect_final and path.final_a is not None:
            finals_a[tuple(int(v) for v in path.final_a)] += 1
            finals_b[tuple(int(v) for v in path.final_b)] += 1
        if i == 0 and path.final_a is not None:
            first_pair = (tuple(int(v) for v in path.final_a),
                          tuple(int(v) for v in path.final_b))
    return ChunkResult(stats.result(start, stop), finals_a, finals_b, first_pair)


def chunk_bounds(n_samples: int, chunk_size: int) -> List[Tuple[int, int]]:
    return [(lo, min(lo + chunk_size, n_samples)) for lo in range(0, n_samples, chunk_size)]


class EnsembleService:
    """把路径分片分发给 worker 池，并由单一合并者汇总"""

    def __init__(self, workers: Optional[int] = None, chunk_size: Optional[int] = None):
        self.workers = workers or settings.KMC_WORKERS
        self.chunk_size = chunk_size or settings.PATH_CHUNK_SIZE
        if self.workers < 1 or self.chunk_size < 1:
            raise ValueError("workers 与 chunk_size 必须为正整数")

    def run(self, job: PathJob, n_samples: int) -> EnsembleOutcome:
        bounds = chunk_bounds(n_samples, self.chunk_size)
        logger.info(f"{job.scheme.label}: {n_samples} 条路径, {len(bounds)} 个分片, "
                    f"{self.workers} 个 worker")
        started = time.perf_counter()
        if self.workers == 1:
            chunks = [run_chunk(job, lo, hi) for lo, hi in bounds]
        else:
            chunks = Parallel(n_jobs=self.workers, backend="loky")(
                delayed(run_chunk)(job, lo, hi) for lo, hi in bounds)
        elapsed = time.perf_counter() - started

        # Parallel 按提交顺序返回，合并顺序固定
        result = merge_all([c.stats for c in chunks])
        finals_a, finals_b = Counter(), Counter()
        first_pair = None
        for c in chunks:
            finals_a.update(c.finals_a)
            finals_b.update(c.finals_b)
            if c.first_pair is not None:
                first_pair = c.first_pair
        logger.info(f"{job.scheme.label}: 完成, 用时 {elapsed:.2f}s, 事件数 {result.n_events}")
        return EnsembleOutcome(result, finals_a, finals_b, first_pair, elapsed)
