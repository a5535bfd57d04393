import pytest
from hypothesis import HealthCheck, settings

from scenec.catalog import load_catalog
from scenec.plan import apply_defaults, load_plan, validate_schema
from scenec.resolver import resolve_scene

from support import CATALOG, GOLDEN, PLANS

settings.register_profile("default", max_examples=100, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def catalog():
    return load_catalog(CATALOG)


@pytest.fixture(scope="session")
def golden(catalog):
    """name -> (plan with defaults applied, resolved scene)"""
    out = {}
    for name in GOLDEN:
        raw = load_plan(PLANS / f"{name}.plan")
        plan = apply_defaults(raw, validate_schema(raw, catalog))
        out[name] = (plan, resolve_scene(plan, catalog))
    return out


def pytest_terminal_summary(terminalreporter):
    from support import ACCEPTANCE
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
