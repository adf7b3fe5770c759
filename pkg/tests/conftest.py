import pytest

ACCEPTANCE = []


class _Recorder:
    def record(self, number, name, passed, **info):
        detail = ", ".join(f"{k}={v:.3e}" if isinstance(v, float) else f"{k}={v}" for k, v in info.items())
        line = f"ACCEPTANCE {number:>2} {'PASS' if passed else 'FAIL'} {name}: {detail}"
        ACCEPTANCE.append((number, line))
        print(line)
        return passed


@pytest.fixture
def acceptance():
    return _Recorder()


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE):
            terminalreporter.write_line(line)
