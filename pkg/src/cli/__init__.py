"""
Scenario configuration, runner, reports and the self-test suite
"""

from .config_schema import ConfigError, ScenarioConfig, config_from_dict, load_config, parse_config
from .report import ReportWriteError, emit_report, report_json
from .runner import ReportDocument, build_model, run_scenario
from .selftest import SelftestCheck, run_selftest

__all__ = [
    "ConfigError",
    "ScenarioConfig",
    "config_from_dict",
    "load_config",
    "parse_config",
    "ReportWriteError",
    "emit_report",
    "report_json",
    "ReportDocument",
    "build_model",
    "run_scenario",
    "SelftestCheck",
    "run_selftest",
]
