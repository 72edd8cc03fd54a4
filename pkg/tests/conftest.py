"""Collects one pass/fail line per acceptance criterion for the terminal summary."""

_CRITERIA = {}


def pytest_collection_modifyitems(items):
    for item in items:
        m = item.get_closest_marker("criterion")
        if m is not None:
            item.user_properties.append(("criterion", m.args[0]))


def pytest_runtest_logreport(report):
    cid = dict(report.user_properties).get("criterion")
    if cid is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _CRITERIA.setdefault(cid, []).append(report.outcome)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(_CRITERIA):
        outcomes = _CRITERIA[cid]
        if all(o == "passed" for o in outcomes):
            status = "PASS"
        elif all(o == "skipped" for o in outcomes):
            status = "SKIP"
        else:
            status = "FAIL"
        terminalreporter.write_line(f"criterion {cid:>2}: {status} ({outcomes.count('passed')}/{len(outcomes)} checks passed)")
