"""
命令行入口

    python -m app.main run experiments/ising_1d.ini
    python -m app.main sweep-q experiments/ad_diffusion_1d.ini --workers 4
    python -m app.main bench experiments/ad_diffusion_1d.ini
    python -m app.main oracle-check experiments/oracle_small.ini

退出码：0 成功，2 配置错误，3 运行期不变量被破坏（含 oracle-check 未通过）
"""

import argparse
import logging
import sys
from typing import Optional, Sequence

from app.core.config import settings
from app.core.errors import (
    ConfigError,
    InfeasibleCoupling,
    InvariantViolation,
    LatticeError,
    OracleIntegrationError,
    ParameterError,
)
from app.core.services.experiment_service import ExperimentService
from app.utils.config_parser import load_config

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_INVARIANT = 3

COMMANDS = {
    "run": ("按配置运行各耦合方案，写出估计量 CSV 与运行清单", ExperimentService.run),
    "sweep-q": ("粗粒化胞大小 q 的方差扫描", ExperimentService.sweep_q),
    "bench": ("各方案的墙钟时间对比", ExperimentService.bench),
    "oracle-check": ("小系统上精确解与蒙特卡罗的对比", ExperimentService.oracle_check),
}


def setup_logging(level: Optional[str] = None):
    """配置日志系统"""
    logging.basicConfig(
        level=level or settings.LOG_LEVEL,
        format=settings.LOG_FORMAT,
        datefmt='%Y-%m-%d %H:%M:%S',
    )
    # 设置第三方库的日志级别，减少干扰
    logging.getLogger('joblib').setLevel(logging.WARNING)
    logging.getLogger('loky').setLevel(logging.WARNING)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="app.main", description=settings.APP_NAME)
    parser.add_argument("--log-level", default=None, help="覆盖 LOG_LEVEL")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name, (help_text, _) in COMMANDS.items():
        sub = subparsers.add_parser(name, help=help_text)
        sub.add_argument("config", help="实验配置文件（INI）")
        sub.add_argument("--workers", type=int, default=None,
                         help=f"worker 数，缺省取配置文件或 KMC_WORKERS（当前 {settings.KMC_WORKERS}）")
        sub.add_argument("--output", default=None, help="覆盖 [output] directory")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(args.log_level)
    _, handler = COMMANDS[args.command]
    try:
        if args.workers is not None and args.workers < 1:
            raise ConfigError("--workers 必须为正整数")
        config = load_config(args.config)
        service = ExperimentService(config, workers=args.workers, output_dir=args.output)
        handler(service)
    except (ConfigError, ParameterError, LatticeError) as e:
        logger.error(f"配置错误: {e}")
        return EXIT_CONFIG
    except (InvariantViolation, InfeasibleCoupling, OracleIntegrationError) as e:
        logger.error(f"运行期检查失败: {e}", exc_info=settings.DEBUG)
        return EXIT_INVARIANT
    except Exception as e:
        logger.error(f"{args.command} 失败: {e}", exc_info=True)
        return EXIT_FAILURE
    logger.info(f"{args.command} 完成，结果目录: {service.output_dir}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
