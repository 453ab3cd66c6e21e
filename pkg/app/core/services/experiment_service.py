"""
实验编排：run / sweep-q / bench / oracle-check 四个子命令的实现
"""

import logging
import statistics
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from app.core.config import settings
from app.core.errors import ConfigError, InvariantViolation
from app.core.lattice import Lattice
from app.core.services.ensemble_service import EnsembleOutcome, EnsembleService
from app.coupling.schemes import CouplingScheme, SchemeKind
from app.estimators.fd import estimate_difference
from app.estimators.statistics import summary_variance, variance_ratio
from app.models import MODEL_REGISTRY, build_model
from app.oracle.generator import build_generator
from app.oracle.solve import exact_marginal, solve_expectation, total_variation
from app.oracle.state_space import StateSpace
from app.schemas.experiment_config import ExperimentConfig
from app.schemas.parameters import ModelSpec, perturb
from app.utils.io import ensure_dir, write_manifest, write_result_csv, write_snapshot_csv, write_table_csv

logger = logging.getLogger(__name__)

SWEEP_COLUMNS = ["q", "scheme", "n_samples", "summary_variance", "ratio_vs_uncoupled"]
BENCH_COLUMNS = ["scheme", "q", "repeats", "n_samples", "median_seconds", "mean_seconds",
                 "ratio_vs_uncoupled"]
ORACLE_COLUMNS = ["check", "scheme", "time", "exact", "estimate", "tolerance", "passed"]

# ε=0 检查使用的路径数上限
ZERO_CHECK_SAMPLES = 200


@dataclass
class ExperimentInputs:
    lattice: Lattice
    model_a: ModelSpec
    model_b: ModelSpec
    sigma0: np.ndarray
    eta0: np.ndarray
    grid: np.ndarray
    step: float


class ExperimentService:

    def __init__(self, config: ExperimentConfig, workers: Optional[int] = None,
                 output_dir: Optional[str] = None):
        """
        Args:
            workers: 覆盖配置文件与 KMC_WORKERS
            output_dir: 覆盖 [output] directory
        """
        self.config = config
        self.workers = workers or config.run.workers or settings.KMC_WORKERS
        self.output_dir = Path(output_dir or config.output.directory or settings.RESULTS_DIR)
        self.ensemble = EnsembleService(workers=self.workers)
        self.inputs = self._inputs()

    def _inputs(self) -> ExperimentInputs:
        config = self.config
        lattice = config.build_lattice()
        model_a = config.model_spec
        direction = config.perturbation.direction
        model_b = model_a.with_parameters(perturb(model_a.parameters, direction))
        species = MODEL_REGISTRY[model_a.rule].species
        sigma0, eta0 = config.initial_states(species)
        return ExperimentInputs(lattice, model_a, model_b, sigma0, eta0,
                                config.run.grid_times(), direction.step)

    def _simulate(self, scheme: CouplingScheme, n_samples: Optional[int] = None,
                  collect_final: bool = False, model_b: Optional[ModelSpec] = None,
                  eta0: Optional[np.ndarray] = None) -> EnsembleOutcome:
        inputs = self.inputs
        return estimate_difference(
            inputs.model_a,
            model_b or inputs.model_b,
            inputs.lattice,
            scheme,
            inputs.sigma0,
            inputs.eta0 if eta0 is None else eta0,
            self.config.run.T,
            inputs.grid,
            n_samples or self.config.run.samples,
            self.config.run.seed,
            observable=self.config.observable,
            partition=self.config.observable.partition,
            step=inputs.step,
            service=self.ensemble,
            rebuild_interval=self.config.run.rebuild_interval,
            collect_final=collect_final,
        )

    def _manifest(self, command: str, entries: Dict) -> Path:
        return write_manifest(self.output_dir / f"manifest_{command}.json", command,
                              self.config.raw or self.config.model_dump(mode="json", exclude={"raw"}),
                              {"seed": self.config.run.seed, "workers": self.workers, **entries})

    def run(self) -> Dict[str, EnsembleOutcome]:
        """每个耦合方案写一个 CSV，外加运行清单"""
        ensure_dir(self.output_dir)
        outcomes, entries = {}, {}
        for scheme in self.config.schemes():
            outcome = self._simulate(scheme)
            label = scheme.label
            csv_path = write_result_csv(outcome.result, self.output_dir / f"{label}.csv")
            entry = {
                "csv": csv_path.name,
                "n_samples": outcome.result.n_samples,
                "n_events": outcome.result.n_events,
                "wall_clock_seconds": outcome.elapsed,
                "summary_variance": summary_variance(outcome.result),
            }
            if self.config.output.snapshot and outcome.first_pair is not None:
                sigma, eta = outcome.first_pair
                snapshot = write_snapshot_csv(self.inputs.lattice, sigma, eta,
                                              self.output_dir / f"snapshot_{label}.csv")
                entry["snapshot"] = snapshot.name
            entries[label] = entry
            outcomes[label] = outcome
        self._manifest("run", {"schemes": entries})
        return outcomes

    def sweep_q(self) -> List[Dict]:
        """
        q 扫描；q=0 为非耦合基线，q=N 为宏观耦合

        基线不在列表里时也会运行，用于计算比值
        """
        n = self.inputs.lattice.n_sites
        q_values = list(self.config.coupling.q)
        if not q_values:
            raise ConfigError("sweep-q 需要 q 列表", section="coupling", key="q")
        ensure_dir(self.output_dir)
        selection = self.config.coupling.selection

        results, entries = {}, {}
        for q in ([0] if 0 not in q_values else []) + q_values:
            scheme = CouplingScheme.for_q(q, n, selection)
            outcome = self._simulate(scheme)
            write_result_csv(outcome.result, self.output_dir / f"sweep_q{q}.csv")
            results[q] = outcome.result
            entries[str(q)] = {"scheme": scheme.label, "wall_clock_seconds": outcome.elapsed,
                               "n_events": outcome.result.n_events}

        baseline = results[0]
        rows = []
        for q in q_values:
            variance = summary_variance(results[q])
            ratio = variance_ratio(baseline, results[q]).summary
            rows.append({"q": q, "scheme": CouplingScheme.for_q(q, n, selection).label,
                         "n_samples": self.config.run.samples,
                         "summary_variance": variance, "ratio_vs_uncoupled": ratio})
            logger.info(f"q={q}: 方差 {variance:.6g}, 相对非耦合降低 {ratio:.3g} 倍")
        write_table_csv(rows, self.output_dir / "sweep_q.csv", SWEEP_COLUMNS)
        self._manifest("sweep_q", {"q": entries})
        return rows

    def _bench_schemes(self) -> List[CouplingScheme]:
        n = self.inputs.lattice.n_sites
        selection = self.config.coupling.selection
        schemes = [CouplingScheme(kind=SchemeKind.UNCOUPLED)]
        for scheme in self.config.schemes():
            if scheme not in schemes:
                schemes.append(scheme)
        for q in self.config.coupling.q:
            scheme = CouplingScheme.for_q(q, n, selection)
            if scheme not in schemes:
                schemes.append(scheme)
        return schemes

    def bench(self) -> List[Dict]:
        """各方案墙钟时间的中位数，以及相对非耦合基线的比值"""
        repeats = self.config.run.repeats or settings.BENCH_REPEATS
        n_samples = self.config.run.bench_samples or self.config.run.samples
        ensure_dir(self.output_dir)
        timings = {}
        for scheme in self._bench_schemes():
            elapsed = []
            for r in range(repeats):
                started = time.perf_counter()
                self._simulate(scheme, n_samples)
                elapsed.append(time.perf_counter() - started)
            timings[scheme] = elapsed
            logger.info(f"{scheme.label}: 中位数 {statistics.median(elapsed):.3f}s（{repeats} 次）")

        n = self.inputs.lattice.n_sites
        baseline = statistics.median(timings[CouplingScheme(kind=SchemeKind.UNCOUPLED)])
        rows = []
        for scheme, elapsed in timings.items():
            median = statistics.median(elapsed)
            q = scheme.cell_size(n) if scheme.is_class_based else None
            rows.append({"scheme": scheme.label, "q": q, "repeats": repeats, "n_samples": n_samples,
                         "median_seconds": median, "mean_seconds": statistics.fmean(elapsed),
                         "ratio_vs_uncoupled": median / baseline if baseline > 0 else float("nan")})
        write_table_csv(rows, self.output_dir / "bench.csv", BENCH_COLUMNS)
        self._manifest("bench", {"repeats": repeats, "bench_samples": n_samples})
        return rows

    def oracle_check(self) -> List[Dict]:
        """
        精确解与蒙特卡罗的对比：期望、有限差分、末时刻边缘分布的全变差，
        以及 ε=0 时 micro_opt 估计量恒为 0

        Raises:
            StateSpaceTooLarge: 状态空间超出预算（在任何模拟之前检查）
            InvariantViolation: 任一检查未通过（表格仍会写出）
        """
        inputs = self.inputs
        run = self.config.run
        model_a = build_model(inputs.model_a, inputs.lattice)
        model_b = build_model(inputs.model_b, inputs.lattice)
        space = StateSpace(inputs.lattice, model_a.species)
        generator_a = build_generator(model_a, space)
        generator_b = build_generator(model_b, space)
        observable = self.config.observable.build(inputs.lattice, inputs.model_a)
        grid = inputs.grid
        exact_a = solve_expectation(generator_a, observable, inputs.sigma0, grid)
        exact_b = solve_expectation(generator_b, observable, inputs.eta0, grid)
        t_last = float(grid[-1])
        marginal_a = exact_marginal(generator_a, inputs.sigma0, t_last)
        marginal_b = exact_marginal(generator_b, inputs.eta0, t_last)

        rows = []

        def check(name, label, t, exact, estimate, tolerance):
            passed = bool(abs(estimate - exact) <= tolerance)
            rows.append({"check": name, "scheme": label, "time": t, "exact": exact,
                         "estimate": estimate, "tolerance": tolerance, "passed": passed})

        k = run.se_tolerance
        for scheme in self.config.schemes():
            outcome = self._simulate(scheme, collect_final=True)
            result = outcome.result
            label = scheme.label
            se_a, se_b, se = result.standard_error_a, result.standard_error_b, result.standard_error
            for j, t in enumerate(grid):
                check("expectation_a", label, t, exact_a[j], result.mean_a[j], k * se_a[j])
                check("expectation_b", label, t, exact_b[j], result.mean_b[j], k * se_b[j])
                check("finite_difference", label, t, exact_a[j] - exact_b[j], result.mean_diff[j],
                      k * se[j])
            tv_a = total_variation(marginal_a, space.distribution(outcome.finals_a))
            tv_b = total_variation(marginal_b, space.distribution(outcome.finals_b))
            check("marginal_tv_a", label, t_last, 0.0, tv_a, run.tv_tolerance)
            check("marginal_tv_b", label, t_last, 0.0, tv_b, run.tv_tolerance)

        # θ_B = θ_A、η₀ = σ₀ 时 micro_opt 两条路径逐事件一致（每个 (格点, 类) 至多一个事件的模型）
        zero = self._simulate(CouplingScheme(kind=SchemeKind.MICRO_OPT),
                              n_samples=min(run.samples, ZERO_CHECK_SAMPLES),
                              model_b=inputs.model_a, eta0=inputs.sigma0)
        zero_mean = float(np.max(np.abs(zero.result.mean_diff)))
        zero_var = float(np.max(zero.result.variance))
        check("zero_perturbation_mean", "micro_opt", t_last, 0.0, zero_mean, 0.0)
        check("zero_perturbation_variance", "micro_opt", t_last, 0.0, zero_var, 0.0)

        ensure_dir(self.output_dir)
        write_table_csv(rows, self.output_dir / "oracle_check.csv", ORACLE_COLUMNS)
        failed = [r for r in rows if not r["passed"]]
        self._manifest("oracle_check", {"n_states": len(space), "checks": len(rows),
                                        "failed": len(failed)})
        if failed:
            first = failed[0]
            raise InvariantViolation(
                f"oracle-check 有 {len(failed)} 项未通过，例如 {first['check']}"
                f"（{first['scheme']}, t={first['time']}）: 精确值 {first['exact']!r}, "
                f"估计值 {first['estimate']!r}, 容差 {first['tolerance']!r}")
        logger.info(f"oracle-check 全部 {len(rows)} 项通过")
        return rows
