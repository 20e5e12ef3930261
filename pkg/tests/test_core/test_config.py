import pytest
from pydantic import ValidationError

from pas_npn_lab.core.config import CprConfig, HarnessConfig, MetricsConfig, RuntimeConfig
from pas_npn_lab.core.errors import KernelAccuracyError, LabError, MetricsError, StageError


def test_defaults_match_documented_values():
    config = MetricsConfig()

    expected_cpr_efficiency = 0.008
    expected_forgetting = 0.985
    assert config.cpr_efficiency == expected_cpr_efficiency
    assert config.eedi_forgetting == expected_forgetting
    assert CprConfig().test_phases == 64


def test_environment_overrides_defaults(monkeypatch):
    monkeypatch.setenv("PAS_NPN_HARNESS_WORKERS", "6")
    monkeypatch.setenv("PAS_NPN_METRICS_CPR_EFFICIENCY", "0.02")

    expected_workers = 6
    expected_efficiency = 0.02
    assert HarnessConfig().workers == expected_workers
    assert MetricsConfig().cpr_efficiency == expected_efficiency


@pytest.mark.parametrize("variable, value, settings", [
    ("PAS_NPN_METRICS_CPR_EFFICIENCY", "0", MetricsConfig),
    ("PAS_NPN_METRICS_EEDI_FORGETTING", "1.5", MetricsConfig),
    ("PAS_NPN_CPR_TEST_PHASES", "1", CprConfig),
    ("PAS_NPN_LOG_LEVEL", "chatty", RuntimeConfig),
])
def test_invalid_environment_values_are_rejected(monkeypatch, variable, value, settings):
    monkeypatch.setenv(variable, value)

    with pytest.raises(ValidationError):
        settings()


def test_log_level_is_normalized(monkeypatch):
    monkeypatch.setenv("PAS_NPN_LOG_LEVEL", "debug")

    expected_level = "DEBUG"
    assert RuntimeConfig().log_level == expected_level


def test_stage_error_carries_tag_and_cause():
    cause = KernelAccuracyError("no convergence", achieved=3e-5)
    error = StageError("metrics", cause)

    expected_stage = "metrics"
    assert error.stage == expected_stage
    assert error.cause is cause
    assert str(error).startswith("[metrics] KernelAccuracyError")
    assert isinstance(cause, MetricsError)
    assert isinstance(error, LabError)
