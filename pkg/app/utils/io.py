"""
结果文件输出：估计量 CSV、运行清单 JSON、末态快照 CSV
"""

import json
import logging
import platform
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from app.core.lattice import Lattice
from app.schemas.estimator_result import CSV_COLUMNS, EstimatorResult

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"


def ensure_dir(directory) -> Path:
    path = Path(directory)
    path.mkdir(parents=True, exist_ok=True)
    return path


def result_frame(result: EstimatorResult) -> pd.DataFrame:
    return pd.DataFrame(result.to_rows(), columns=CSV_COLUMNS)


def write_result_csv(result: EstimatorResult, path) -> Path:
    """列顺序固定为 time, mean_diff, derivative, variance, ci_halfwidth, n_samples"""
    path = Path(path)
    result_frame(result).to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    logger.info(f"写入 {path}")
    return path


def write_table_csv(rows: Sequence[Dict[str, Any]], path, columns: Optional[List[str]] = None) -> Path:
    path = Path(path)
    pd.DataFrame(list(rows), columns=columns).to_csv(path, index=False, float_format=FLOAT_FORMAT,
                                                     lineterminator="\n")
    logger.info(f"写入 {path}")
    return path


def write_snapshot_csv(lattice: Lattice, sigma: Sequence[int], eta: Sequence[int], path) -> Path:
    """每个格点一行：site, 各维坐标, sigma, eta"""
    coords = np.array([lattice.coords(x) for x in range(lattice.n_sites)])
    frame = pd.DataFrame({"site": np.arange(lattice.n_sites)})
    for axis in range(lattice.dimension):
        frame[f"coord_{axis}"] = coords[:, axis]
    frame["sigma"] = np.asarray(sigma, dtype=int)
    frame["eta"] = np.asarray(eta, dtype=int)
    path = Path(path)
    frame.to_csv(path, index=False, lineterminator="\n")
    logger.info(f"写入 {path}")
    return path


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, float) and not np.isfinite(value):
        return str(value)
    return value


def write_manifest(path, command: str, config: Dict[str, Any], entries: Dict[str, Any]) -> Path:
    """运行清单：配置原文、种子、耗时、事件数等"""
    manifest = {
        "command": command,
        "created_at": datetime.now().isoformat(timespec="seconds"),
        "python": platform.python_version(),
        "numpy": np.__version__,
        "pandas": pd.__version__,
        "config": config,
        **entries,
    }
    path = Path(path)
    path.write_text(json.dumps(_jsonable(manifest), ensure_ascii=False, indent=2), encoding="utf-8")
    logger.info(f"写入 {path}")
    return path
