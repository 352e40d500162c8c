import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def circle(*degrees):
    """Points on S^1 at the given angles (degrees)."""
    a = np.deg2rad(np.asarray(degrees, dtype=float))
    return np.column_stack([np.cos(a), np.sin(a)])


def random_sample(rng, n, q):
    X = rng.standard_normal((n, q))
    return X / np.linalg.norm(X, axis=1, keepdims=True)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# -- acceptance summary: one line per criterion ------------------------------------

_CRITERIA = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    cid = marker.args[0]
    detail = "; ".join(str(v) for k, v in item.user_properties if k == "detail")
    if rep.skipped and rep.when in ("setup", "call"):
        reason = rep.longrepr[2] if isinstance(rep.longrepr, tuple) else str(rep.longrepr)
        _CRITERIA[cid] = ("SKIP", reason.replace("Skipped: ", ""))
    elif rep.when == "call":
        if rep.failed:
            msg = str(rep.longrepr.reprcrash.message) if hasattr(rep.longrepr, "reprcrash") else ""
            first = msg.splitlines()[0] if msg else ""
            _CRITERIA[cid] = ("FAIL", " | ".join(t for t in (detail, first) if t))
        else:
            _CRITERIA[cid] = ("PASS", detail)
    elif rep.failed and cid not in _CRITERIA:
        _CRITERIA[cid] = ("FAIL", f"error during {rep.when}")


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(_CRITERIA, key=lambda c: int(c[1:])):
        status, detail = _CRITERIA[cid]
        terminalreporter.write_line(f"{cid:<4} {status:<4}  {detail}")
