import pytest

from pbopool import parse_opb

EXAMPLE1_OPB = """\
* #variable= 3 #constraint= 1
min: +10 x1 +20 x2 +30 x3 ;
+2 x1 +3 x2 +4 x3 >= 5 ;
"""


@pytest.fixture
def ex1():
    return parse_opb(EXAMPLE1_OPB)


@pytest.fixture
def ex1_file(tmp_path):
    path = tmp_path / "ex1.opb"
    path.write_text(EXAMPLE1_OPB)
    return path


ACCEPTANCE_KEY = pytest.StashKey[list]()


@pytest.fixture
def acceptance(request):
    """Record one pass/fail line per acceptance criterion."""
    lines = request.config.stash.setdefault(ACCEPTANCE_KEY, [])

    def record(number: int, ok: bool, detail: str):
        lines.append((number, ok, detail))
        return ok

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE_KEY, None)
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for number, ok, detail in sorted(lines):
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'} {detail}")
