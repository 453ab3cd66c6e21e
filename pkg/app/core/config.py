from pathlib import Path

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    # 应用配置
    APP_NAME: str = "耦合KMC灵敏度分析"
    DEBUG: bool = False

    # 日志配置
    LOG_LEVEL: str = "INFO"
    LOG_FORMAT: str = "%(asctime)s [%(levelname)s] %(name)s: %(message)s"

    # 并行配置
    KMC_WORKERS: int = 1  # 默认 worker 数，命令行 --workers 可覆盖
    PATH_CHUNK_SIZE: int = 50  # 每个合并分片包含的路径数，与 worker 数无关

    # 模拟引擎配置
    CATALOG_REBUILD_INTERVAL: int = 1_000_000  # 每 K 个事件从头重建速率树

    # 精确解配置
    ORACLE_MAX_STATES: int = 4096  # 状态空间上限（N <= 12 的二值格点）
    ORACLE_EXPM_MAX_STATES: int = 4096  # 不超过该规模用矩阵指数，否则用刚性 ODE 积分

    # 统计与基准配置
    BENCH_REPEATS: int = 5
    CONFIDENCE_LEVEL: float = 0.99

    # 输出配置
    RESULTS_DIR: str = "results"

    model_config = SettingsConfigDict(
        env_file=str(Path(__file__).parent.parent.parent / ".env"),
        env_file_encoding="utf-8",
        case_sensitive=True,
        extra="ignore",
    )


settings = Settings()
