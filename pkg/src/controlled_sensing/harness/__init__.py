from .config import DpConfig, ScenarioConfig, bundled_scenario_path, load_config, parse_config
from .metrics import MetricsReport, compute_avg_allocation, compute_detection_accuracy, compute_mse
from .runner import ComparisonResult, build_dp, run_comparison
