import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

# criterion id -> list of (label, ok, detail), filled by test_acceptance.py
ACCEPTANCE = {}


class Recorder:
    def __init__(self, criterion):
        self.criterion = criterion
        self.checks = ACCEPTANCE.setdefault(criterion, [])

    def check(self, label, ok, detail=""):
        ok = bool(ok)
        self.checks.append((label, ok, detail))
        print(f"{self.criterion} {'PASS' if ok else 'FAIL'} {label}: {detail}")
        return ok

    def finish(self):
        failed = [f"{label} ({detail})" for label, ok, detail in self.checks if not ok]
        assert not failed, "; ".join(failed)


@pytest.fixture
def recorder(request):
    name = request.node.name.split("_")[1]  # test_c01_... -> c01
    return Recorder("C" + str(int(name[1:])))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for crit in sorted(ACCEPTANCE, key=lambda c: int(c[1:])):
        checks = ACCEPTANCE[crit]
        verdict = "PASS" if checks and all(ok for _, ok, _ in checks) else "FAIL"
        tr.write_line(f"{crit}: {verdict}")
        for label, ok, detail in checks:
            tr.write_line(f"    {'PASS' if ok else 'FAIL'} {label}: {detail}")
