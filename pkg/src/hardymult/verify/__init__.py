"""Checks of the inequalities and identities, and the shared harness."""

from __future__ import annotations

from .core import (
    DEFAULTS,
    CheckConfig,
    CheckReport,
    ConfigError,
    DegenerateSearch,
    RatioSearchState,
    Timer,
    make_config,
    ratio_search,
    run_instances,
)
from .empirical import (
    check_2d_multiplier,
    check_dyadicrbdd,
    check_oldrev,
    check_stein_probe,
    estimate_c_alpha,
)
from .strict import (
    check_atdec,
    check_discretization,
    check_enl2,
    check_fejer_identity,
    check_khintchine_equivalence,
    check_multiplier,
    check_schodkapr,
    check_stein_exact,
    check_transfer,
)


def check_stein(cfg: CheckConfig) -> CheckReport:
    """Exact Stein-hypothesis bounds for the block symbols plus the norm-ratio probe."""
    exact = check_stein_exact(cfg)
    rep = check_stein_probe(cfg)
    rep.violations += exact.violations
    rep.failures.extend(exact.failures)
    rep.details["exact"] = {"instances": exact.instances, "violations": exact.violations,
                            "worst_ratio": exact.worst_ratio}
    if exact.violations and "first_violation" not in rep.details:
        rep.details["first_violation"] = exact.details.get("first_violation")
    return rep


CHECKS = {
    "multiplier": check_multiplier,
    "enl2": check_enl2,
    "schodkapr": check_schodkapr,
    "fejer-identity": check_fejer_identity,
    "stein": check_stein,
    "khintchine": check_khintchine_equivalence,
    "discretization": check_discretization,
    "dyadicrbdd": check_dyadicrbdd,
    "oldrev": check_oldrev,
    "2d": check_2d_multiplier,
    "atdec": check_atdec,
    "transfer": check_transfer,
}

ESTIMATES = {
    "c-alpha": estimate_c_alpha,
    "stein": check_stein_probe,
    "oldrev": check_oldrev,
    "2d": check_2d_multiplier,
}


def run_check(cfg: CheckConfig, estimate: bool = False) -> CheckReport:
    """Run the check (or estimate) named by ``cfg.lemma`` and time it."""
    table = ESTIMATES if estimate else CHECKS
    if cfg.lemma not in table:
        raise ConfigError(f"unknown target {cfg.lemma!r}; choose from {sorted(table)}")
    with Timer() as t:
        rep = table[cfg.lemma](cfg)
    rep.runtime_ms = t.ms
    return rep


__all__ = [
    "CHECKS", "ESTIMATES", "DEFAULTS", "CheckConfig", "CheckReport", "ConfigError",
    "DegenerateSearch", "RatioSearchState", "make_config", "ratio_search", "run_check",
    "run_instances",
]
