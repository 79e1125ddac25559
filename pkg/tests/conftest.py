"""Acceptance summary: one PASS/FAIL line per criterion after the run."""
import pytest

_RESULTS = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title, limit): acceptance criterion with runtime limit in s")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    props = dict(report.user_properties)
    if "criterion" not in props:
        return
    _RESULTS[props["criterion"]] = (props["title"], report.passed, report.duration, props.get("limit"), props.get("detail", ""))


@pytest.fixture(autouse=True)
def _acceptance_props(request):
    mark = request.node.get_closest_marker("acceptance")
    if mark is not None:
        number, title, limit = mark.args
        request.node.user_properties += [("criterion", number), ("title", title), ("limit", limit)]


@pytest.fixture
def detail(request):
    """Attach a one-line measurement summary to the acceptance line."""

    def add(text):
        request.node.user_properties.append(("detail", text))

    return add


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(_RESULTS):
        title, passed, duration, limit, text = _RESULTS[number]
        status = "PASS" if passed else "FAIL"
        tr.write_line(f"[{status}] {number:2d}. {title} ({duration:.2f} s, limit {limit} s) {text}".rstrip())
