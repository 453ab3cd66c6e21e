import numpy as np
import pytest
from scipy.stats import norm

from app.core.errors import LatticeError, ParameterError
from app.core.lattice import Lattice
from app.core.services.ensemble_service import EnsembleService, chunk_bounds
from app.coupling.schemes import CouplingScheme, SchemeKind
from app.estimators.fd import estimate_difference, estimate_fd
from app.estimators.statistics import RunningStats, merge, merge_all, summary_variance, variance_ratio
from app.schemas.estimator_result import EstimatorResult
from app.schemas.parameters import PerturbationDirection
from conftest import ising_spec

TIMES = [0.0, 0.5, 1.0, 1.5]


def stats_for(samples_a, samples_b, start):
    stats = RunningStats("test", TIMES, step=0.1)
    for a, b in zip(samples_a, samples_b):
        stats.add(a, b, n_events=3)
    return stats.result(start, start + len(samples_a))


@pytest.fixture
def samples():
    generator = np.random.default_rng(21)
    return generator.normal(size=(30, 4)), generator.normal(0.5, 2.0, size=(30, 4))


def test_running_stats_match_numpy(samples):
    a, b = samples
    result = stats_for(a, b, 0)
    assert result.n_samples == 30
    assert result.n_events == 90
    assert np.allclose(result.mean_diff, (a - b).mean(axis=0), atol=1e-12)
    assert np.allclose(result.variance, (a - b).var(axis=0, ddof=1), atol=1e-12)
    assert np.allclose(result.mean_a, a.mean(axis=0), atol=1e-12)
    assert np.allclose(result.standard_error_b, b.std(axis=0, ddof=1) / np.sqrt(30), atol=1e-12)


def test_merge_halves_equals_single_pass(samples):
    a, b = samples
    full = stats_for(a, b, 0)
    merged = merge(stats_for(a[:13], b[:13], 0), stats_for(a[13:], b[13:], 13))
    assert merged.n_samples == full.n_samples
    assert merged.seed_ranges == [(0, 13), (13, 30)]
    for name in ("mean_diff", "m2", "mean_a", "m2_a", "mean_b", "m2_b"):
        assert np.allclose(getattr(merged, name), getattr(full, name), rtol=0, atol=1e-12)


def test_merge_is_associative(samples):
    a, b = samples
    parts = [stats_for(a[lo:hi], b[lo:hi], lo) for lo, hi in ((0, 10), (10, 20), (20, 30))]
    left = merge(merge(parts[0], parts[1]), parts[2])
    right = merge(parts[0], merge(parts[1], parts[2]))
    assert np.allclose(left.mean_diff, right.mean_diff, atol=1e-12)
    assert np.allclose(left.m2, right.m2, atol=1e-12)
    assert left.seed_ranges == right.seed_ranges


def test_merge_with_empty(samples):
    a, b = samples
    part = stats_for(a[:5], b[:5], 0)
    empty = EstimatorResult.empty("test", TIMES, step=0.1)
    assert merge(part, empty).mean_diff == part.mean_diff
    assert merge(empty, part).m2 == part.m2
    assert merge_all([empty, part, empty]).n_samples == 5


def test_merge_rejects_overlap_and_grid_mismatch(samples):
    a, b = samples
    with pytest.raises(ValueError):
        merge(stats_for(a[:10], b[:10], 0), stats_for(a[10:20], b[10:20], 5))
    other = EstimatorResult.empty("test", [0.0, 1.0])
    with pytest.raises(ValueError):
        merge(stats_for(a[:5], b[:5], 0), other)
    with pytest.raises(ValueError):
        merge_all([])


def test_derivative_and_confidence_interval(samples):
    a, b = samples
    result = stats_for(a, b, 0)
    assert np.allclose(result.derivative, np.asarray(result.mean_diff) / 0.1)
    z = norm.ppf(0.5 + result.confidence / 2)
    assert np.allclose(result.ci_halfwidth, z * np.sqrt(result.variance / 30))
    rows = result.to_rows()
    assert list(rows) == ["time", "mean_diff", "derivative", "variance", "ci_halfwidth", "n_samples"]
    assert rows["n_samples"].tolist() == [30] * 4


def test_variance_ratio(samples):
    a, b = samples
    result = stats_for(a, b, 0)
    identity = variance_ratio(result, result)
    assert np.allclose(identity.ratios, 1.0)
    assert identity.summary == pytest.approx(1.0)
    assert summary_variance(result) == pytest.approx(float(np.mean(result.variance[2:])))

    # 第一个网格点两者方差都为 0，不计入汇总
    zero_first = a.copy()
    zero_first[:, 0] = b[:, 0]
    degenerate = stats_for(zero_first, b, 0)
    ratio = variance_ratio(degenerate, degenerate)
    assert np.isnan(ratio.ratios[0])
    assert ratio.summary == pytest.approx(1.0)
    assert variance_ratio(degenerate, result).ratios[0] == 0.0


def test_chunk_bounds():
    assert chunk_bounds(7, 3) == [(0, 3), (3, 6), (6, 7)]
    assert chunk_bounds(3, 50) == [(0, 3)]


def test_result_independent_of_worker_count():
    lattice = Lattice((8,))
    spec_a = ising_spec()
    spec_b = ising_spec(beta=1.1)
    sigma0 = np.zeros(8, dtype=np.int8)
    scheme = CouplingScheme(kind=SchemeKind.MICRO_OPT)

    def run(workers, chunk_size):
        return estimate_difference(spec_a, spec_b, lattice, scheme, sigma0, sigma0, 1.0, [0.5, 1.0],
                                   23, 5, service=EnsembleService(workers, chunk_size)).result

    serial = run(1, 4)
    parallel = run(2, 4)
    assert parallel.mean_diff == serial.mean_diff
    assert parallel.m2 == serial.m2
    assert parallel.seed_ranges == [(0, 4), (4, 8), (8, 12), (12, 16), (16, 20), (20, 23)]
    rechunked = run(1, 10)
    assert np.allclose(rechunked.mean_diff, serial.mean_diff, rtol=0, atol=1e-12)
    assert np.allclose(rechunked.m2, serial.m2, rtol=0, atol=1e-12)


def test_zero_perturbation_estimate_is_exactly_zero():
    lattice = Lattice((10,))
    sigma0 = np.zeros(10, dtype=np.int8)
    for kind in (SchemeKind.MICRO_OPT, SchemeKind.MACRO, SchemeKind.CRN):
        outcome = estimate_difference(ising_spec(), ising_spec(), lattice, CouplingScheme(kind=kind),
                                      sigma0, sigma0, 1.0, [0.5, 1.0], 10, 3)
        assert outcome.result.mean_diff == [0.0, 0.0]
        assert outcome.result.variance.tolist() == [0.0, 0.0]


def test_estimate_fd_sign_and_validation():
    lattice = Lattice((10,))
    sigma0 = np.zeros(10, dtype=np.int8)
    direction = PerturbationDirection(parameter="c_a", step=0.5)
    result = estimate_fd(ising_spec(), lattice, CouplingScheme(kind=SchemeKind.MACRO), direction,
                         sigma0, 1.0, [1.0], 200, 17)
    assert result.step == 0.5
    assert result.derivative[0] == pytest.approx((result.mean_a[0] - result.mean_b[0]) / 0.5)
    # 吸附速率增大，η 的覆盖度更高，D̄ 为负
    assert result.derivative[0] < 0

    with pytest.raises(ParameterError):
        estimate_fd(ising_spec(), lattice, CouplingScheme(kind=SchemeKind.MACRO), direction,
                    sigma0, 1.0, [1.0], 1, 17)
    with pytest.raises(LatticeError):
        estimate_fd(ising_spec(), lattice, CouplingScheme(kind=SchemeKind.MACRO), direction,
                    np.zeros(9, dtype=np.int8), 1.0, [1.0], 10, 17)
