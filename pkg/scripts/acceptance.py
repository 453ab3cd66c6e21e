"""
耗时较长的统计验收，手动运行：

    python scripts/acceptance.py            # 全部
    python scripts/acceptance.py 1 6 9      # 只跑指定编号

每项打印 ✅ / ❌，任一项失败时退出码为 1
"""

import os
import sys
import time

import numpy as np

# 将代码路径加入 sys.path
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from app.core.lattice import Lattice
from app.core.services.ensemble_service import EnsembleService
from app.coupling.functional import (
    CoarseCoupling,
    MicroCoupling,
    ZeroCoupling,
    build_state_pair,
    feasibility_check,
    functional_F,
    macro_coupling,
)
from app.coupling.schemes import CouplingScheme, SchemeKind
from app.estimators.fd import estimate_difference
from app.estimators.statistics import summary_variance
from app.main import setup_logging
from app.models import build_model
from app.observables.observable import Coverage
from app.observables.partition import Partition
from app.oracle.generator import build_generator
from app.oracle.solve import exact_marginal, solve_expectation, total_variation
from app.oracle.state_space import StateSpace
from app.schemas.parameters import ModelSpec, ParameterVector, PerturbationDirection, perturb

ISING = ModelSpec(rule="ising_ad", parameters=ParameterVector(beta=1, J=1, h=1, c_a=1, c_d=1))
DIFFUSION = ModelSpec(rule="ad_diffusion",
                      parameters=ParameterVector(beta=0.1, J=1, h=0, c_a=1, c_d=1, c_diff=1))
HIERARCHY_QS = (0, 1, 2, 4, 5, 10, 20, 25, 50, 100)
HIERARCHY_GRID = np.linspace(0, 10, 41)


def perturbed(spec: ModelSpec, parameter: str, step: float) -> ModelSpec:
    return spec.with_parameters(perturb(spec.parameters, PerturbationDirection(parameter=parameter, step=step)))


def vacant(n: int) -> np.ndarray:
    return np.zeros(n, dtype=np.int8)


def scheme(kind: SchemeKind, q=None) -> CouplingScheme:
    return CouplingScheme(kind=kind, q=q)


def hierarchy_run(coupling: CouplingScheme, n_samples=2000, service=None):
    return estimate_difference(DIFFUSION, perturbed(DIFFUSION, "beta", 1e-3), Lattice((100,)), coupling,
                               vacant(100), vacant(100), 10.0, HIERARCHY_GRID, n_samples, 44,
                               step=1e-3, service=service)


def check_oracle_equivalence() -> bool:
    lattice = Lattice((6,))
    times = [1.0, 2.0, 5.0, 10.0]
    model = build_model(ISING, lattice)
    exact = solve_expectation(build_generator(model), Coverage(lattice, model.species), vacant(6), times)
    result = estimate_difference(ISING, ISING, lattice, scheme(SchemeKind.UNCOUPLED), vacant(6), vacant(6),
                                 10.0, times, 20_000, 1).result
    deviation = np.abs(np.asarray(result.mean_a) - exact) / result.standard_error_a
    print(f"   精确值 {np.round(exact, 5).tolist()}，偏差/标准误 {np.round(deviation, 2).tolist()}")
    return bool(np.all(deviation <= 3.0))


def check_marginals() -> bool:
    lattice = Lattice((4,))
    spec_b = perturbed(ISING, "beta", 0.1)
    model_a, model_b = build_model(ISING, lattice), build_model(spec_b, lattice)
    space = StateSpace(lattice, model_a.species)
    exact_a = exact_marginal(build_generator(model_a, space), vacant(4), 1.0)
    exact_b = exact_marginal(build_generator(model_b, space), vacant(4), 1.0)
    ok = True
    for kind in (SchemeKind.MICRO_UNOPT, SchemeKind.MICRO_OPT, SchemeKind.MACRO):
        outcome = estimate_difference(ISING, spec_b, lattice, scheme(kind), vacant(4), vacant(4), 1.0, [1.0],
                                      100_000, 2, collect_final=True)
        tv_a = total_variation(exact_a, space.distribution(outcome.finals_a))
        tv_b = total_variation(exact_b, space.distribution(outcome.finals_b))
        print(f"   {kind.value}: TV(σ)={tv_a:.4f} TV(η)={tv_b:.4f}")
        ok &= tv_a <= 0.02 and tv_b <= 0.02
    return ok


def check_micro_variance_reduction() -> bool:
    lattice = Lattice((100,))
    spec_b = perturbed(ISING, "beta", 0.1)
    grid = np.linspace(0, 40, 41)
    variances = {}
    for kind in (SchemeKind.CRN, SchemeKind.MICRO_UNOPT, SchemeKind.MICRO_OPT):
        result = estimate_difference(ISING, spec_b, lattice, scheme(kind), vacant(100), vacant(100), 40.0,
                                     grid, 5000, 3, step=0.1).result
        variances[kind] = summary_variance(result)
        print(f"   {kind.value}: t∈[20,40] 平均方差 {variances[kind]:.3e}")
    crn = variances[SchemeKind.CRN]
    ratio_c0 = crn / variances[SchemeKind.MICRO_UNOPT]
    ratio_c1 = crn / variances[SchemeKind.MICRO_OPT]
    print(f"   crn/micro_unopt={ratio_c0:.1f}（要求 ≥ 5），crn/micro_opt={ratio_c1:.1f}（要求 ≥ 50）")
    return ratio_c0 >= 5 and ratio_c1 >= 50


def check_hierarchy() -> bool:
    variances = {kind: summary_variance(hierarchy_run(scheme(kind)).result)
                 for kind in (SchemeKind.UNCOUPLED, SchemeKind.MICRO_OPT, SchemeKind.MACRO)}
    uncoupled_ratio = variances[SchemeKind.UNCOUPLED] / variances[SchemeKind.MACRO]
    micro_ratio = variances[SchemeKind.MICRO_OPT] / variances[SchemeKind.MACRO]
    print(f"   uncoupled/macro={uncoupled_ratio:.1f}，micro_opt/macro={micro_ratio:.1f}")
    return uncoupled_ratio >= 80 and micro_ratio >= 8


def check_monotone_in_q() -> bool:
    variances = []
    for q in HIERARCHY_QS:
        variance = summary_variance(hierarchy_run(CouplingScheme.for_q(q, 100)).result)
        variances.append(variance)
        print(f"   q={q}: {variance:.3e}")
    adjacent = all(later <= 1.15 * earlier for earlier, later in zip(variances, variances[1:]))
    return adjacent and variances[0] >= 10 * variances[-1]


def _random_pairs(count: int, n_sites: int, seed: int):
    generator = np.random.default_rng(seed)
    for _ in range(count):
        yield (generator.integers(0, 2, size=n_sites, dtype=np.int8),
               generator.integers(0, 2, size=n_sites, dtype=np.int8))


def _state_pairs(spec: ModelSpec, seed: int):
    lattice = Lattice((100,))
    model_a = build_model(spec, lattice)
    model_b = build_model(perturbed(spec, "beta", 0.1), lattice)
    coverage = Coverage(lattice, model_a.species)
    for sigma, eta in _random_pairs(1000, 100, seed):
        yield build_state_pair(model_a, model_b, coverage, Partition.default(), sigma, eta)


def check_functional_ordering() -> bool:
    ok = True
    for spec in (ISING, DIFFUSION):
        couplings = [MicroCoupling(False), MicroCoupling(True), CoarseCoupling(10), macro_coupling(100)]
        failures = 0
        for pair in _state_pairs(spec, 6):
            zero, c0, c1, cq, cn = (functional_F(c, pair) for c in [ZeroCoupling()] + couplings)
            if not (zero == 0 <= c1 and c0 <= c1 <= cq <= cn):
                failures += 1
        print(f"   {spec.rule}: {failures} / 1000 对违反排序")
        ok &= failures == 0
    return ok


def check_feasibility() -> bool:
    ok = True
    couplings = [ZeroCoupling(), MicroCoupling(False), MicroCoupling(True), CoarseCoupling(10),
                 macro_coupling(100)]
    for spec in (ISING, DIFFUSION):
        violations = [report.violation for pair in _state_pairs(spec, 7)
                      for report in (feasibility_check(c, pair) for c in couplings) if not report.passed]
        print(f"   {spec.rule}: {len(violations)} 处违反约束")
        ok &= not violations
    return ok


def check_overhead() -> bool:
    service = EnsembleService(workers=1)
    timings = {}
    for q in (0, 1, 100):
        started = time.perf_counter()
        hierarchy_run(CouplingScheme.for_q(q, 100), n_samples=200, service=service)
        timings[q] = time.perf_counter() - started
    ratio_1, ratio_n = timings[1] / timings[0], timings[100] / timings[0]
    print(f"   q=1: {ratio_1:.2f}×，q=N: {ratio_n:.2f}×")
    return ratio_1 <= 5.5 and ratio_n <= 3.5


def check_zero_perturbation() -> bool:
    lattice = Lattice((20,))
    grid = np.linspace(0, 5, 11)
    ok = True
    for kind in (SchemeKind.MICRO_OPT, SchemeKind.MACRO):
        result = estimate_difference(ISING, ISING, lattice, scheme(kind), vacant(20), vacant(20), 5.0, grid,
                                     500, 9).result
        exact_zero = not np.any(result.mean_diff) and not np.any(result.variance)
        print(f"   {kind.value}: 均值与方差{'恒为 0' if exact_zero else '不为 0'}")
        ok &= exact_zero
    return ok


CHECKS = {
    1: ("小系统与精确解一致", check_oracle_equivalence),
    2: ("耦合保持边缘分布", check_marginals),
    3: ("微观耦合的方差缩减", check_micro_variance_reduction),
    4: ("耦合层级", check_hierarchy),
    5: ("方差随 q 单调", check_monotone_in_q),
    6: ("F 泛函排序", check_functional_ordering),
    7: ("耦合速率可行", check_feasibility),
    8: ("耦合的时间开销", check_overhead),
    9: ("零扰动退化", check_zero_perturbation),
}


def main(selected) -> int:
    failed = []
    for number in selected:
        title, check = CHECKS[number]
        print(f"\n[{number}] {title}")
        started = time.perf_counter()
        passed = check()
        print(f"{'✅' if passed else '❌'} 用时 {time.perf_counter() - started:.1f}s")
        if not passed:
            failed.append(number)
    if failed:
        print(f"\n❌ 未通过: {failed}")
        return 1
    print("\n✅ 全部通过")
    return 0


if __name__ == "__main__":
    setup_logging("WARNING")
    numbers = [int(a) for a in sys.argv[1:]] or sorted(CHECKS)
    sys.exit(main(numbers))
