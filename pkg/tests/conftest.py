import pytest

from cellchain import load_fixture

FIXTURES = ["two_quads.cx", "triangle.cx", "pentagon_fan.cx", "two_tets.cx", "cube_surface.cx"]

_acceptance: dict[str, list] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(id, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        ok = rep.passed and not hasattr(rep, "wasxfail")
        entry = _acceptance.setdefault(mark.args[0], [mark.args[1], True])
        entry[1] = entry[1] and ok


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for cid, (title, ok) in sorted(_acceptance.items()):
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  [{cid}] {title}")


@pytest.fixture(params=FIXTURES)
def any_fixture(request):
    return load_fixture(request.param)


@pytest.fixture
def two_quads():
    return load_fixture("two_quads.cx")


@pytest.fixture
def triangle():
    return load_fixture("triangle.cx")


@pytest.fixture
def two_tets():
    return load_fixture("two_tets.cx")
