from hypothesis import settings

# numba compiles on first use, which would trip per-example deadlines
settings.register_profile("default", deadline=None, max_examples=100)
settings.load_profile("default")


def pytest_configure(config):
    config.acceptance_lines = []
    config.addinivalue_line("markers", "acceptance: full-size acceptance criteria (slow)")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = sorted(config.acceptance_lines)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
