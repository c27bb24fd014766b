from .benchmark import BenchmarkReport, CategoryRow, aggregate, report_from_log, run_benchmark, write_report
from .config import ConfigError, RunConfig, load_config
from .episode import EpisodeResult, run_episode
