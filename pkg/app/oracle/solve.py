"""
主方程与后向方程的精确解
状态数不超过 ORACLE_EXPM_MAX_STATES 时用矩阵指数，否则用 BDF 刚性积分
"""

import logging
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm, null_space

from app.core.config import settings
from app.core.errors import OracleIntegrationError
from app.core.lattice import Lattice
from app.models import build_model
from app.observables.observable import Observable
from app.oracle.generator import GeneratorMatrix, build_generator
from app.schemas.parameters import ModelSpec, PerturbationDirection, perturb

logger = logging.getLogger(__name__)

RTOL = 1e-10
ATOL = 1e-12


def _propagate(generator: GeneratorMatrix, v0: np.ndarray, times: Sequence[float],
               transpose: bool) -> np.ndarray:
    """返回 exp(t·A) v0，A = Qᵀ（transpose）或 Q；每行对应一个时刻"""
    times = np.asarray(times, dtype=float)
    if np.any(times < 0):
        raise ValueError("时刻不能为负")
    matrix = generator.matrix.T.tocsc() if transpose else generator.matrix
    result = np.empty((len(times), len(v0)))

    if generator.n_states <= settings.ORACLE_EXPM_MAX_STATES:
        dense = matrix.toarray()
        for j, t in enumerate(times):
            result[j] = v0 if t == 0 else expm(t * dense) @ v0
        return result

    t_max = float(times.max()) if len(times) else 0.0
    if t_max == 0.0:
        result[:] = v0
        return result
    order = np.argsort(times, kind="stable")
    t_eval = np.unique(times[order])
    logger.debug(f"BDF 积分 {generator.n_states} 个状态到 t={t_max}")
    solution = solve_ivp(lambda t, y: matrix @ y, (0.0, t_max), v0, method="BDF",
                         t_eval=t_eval, rtol=RTOL, atol=ATOL, jac=matrix)
    if not solution.success:
        raise OracleIntegrationError(f"主方程积分失败: {solution.message}")
    lookup = {float(t): solution.y[:, k] for k, t in enumerate(solution.t)}
    for j, t in enumerate(times):
        result[j] = v0 if t == 0 else lookup[float(t)]
    return result


def _values(generator: GeneratorMatrix, f) -> np.ndarray:
    if isinstance(f, Observable):
        return generator.space.observable_vector(f)
    values = np.asarray(f, dtype=float)
    if values.shape != (generator.n_states,):
        raise ValueError(f"观测量向量长度必须为 {generator.n_states}")
    return values


def solve_expectation(generator: GeneratorMatrix, f, sigma0, times: Sequence[float]) -> np.ndarray:
    """u(σ₀, t) = (e^{tL} f)(σ₀)，f 为 Observable 或状态上的取值向量"""
    values = _values(generator, f)
    start = generator.space.index(sigma0)
    return _propagate(generator, values, times, transpose=True)[:, start]


def exact_marginal(generator: GeneratorMatrix, sigma0, t: float) -> np.ndarray:
    """时刻 t 的状态分布（e^{tQ} 在 σ₀ 处的列）"""
    p0 = np.zeros(generator.n_states)
    p0[generator.space.index(sigma0)] = 1.0
    p = _propagate(generator, p0, [t], transpose=False)[0]
    # 截掉舍入产生的微小负值
    return np.maximum(p, 0.0)


def exact_fd(model: ModelSpec, lattice: Lattice, direction: PerturbationDirection,
             observable: Observable, sigma0, times: Sequence[float],
             eta0=None, max_states: Optional[int] = None) -> np.ndarray:
    """D_ε(t) = u^θ(t, σ₀) − u^{θ+ε}(t, η₀)"""
    perturbed = model.with_parameters(perturb(model.parameters, direction))
    generator_a = build_generator(build_model(model, lattice), max_states=max_states)
    generator_b = build_generator(build_model(perturbed, lattice), space=generator_a.space)
    u_a = solve_expectation(generator_a, observable, sigma0, times)
    u_b = solve_expectation(generator_b, observable, sigma0 if eta0 is None else eta0, times)
    return u_a - u_b


def stationary_distribution(generator: GeneratorMatrix) -> np.ndarray:
    """Q 的零空间向量，归一化为概率分布；要求零空间一维"""
    basis = null_space(generator.dense())
    if basis.shape[1] != 1:
        raise OracleIntegrationError(f"平稳分布不唯一（零空间维数 {basis.shape[1]}）")
    vector = basis[:, 0]
    vector = vector / vector.sum()
    return np.maximum(vector, 0.0)


def total_variation(p: np.ndarray, q: np.ndarray) -> float:
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())
