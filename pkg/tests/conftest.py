def pytest_terminal_summary(terminalreporter):
    """One PASS/FAIL line per acceptance criterion, after the normal summary."""
    rows = []
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            if "test_acceptance.py::test_criterion_" not in getattr(rep, "nodeid", ""):
                continue
            if rep.when != "call" and outcome == "passed":
                continue
            props = dict(getattr(rep, "user_properties", []))
            name = rep.nodeid.split("::")[-1]
            number = int(name.split("_")[2])
            rows.append((number, "PASS" if outcome == "passed" else "FAIL", props.get("detail", name)))
    if not rows:
        return
    terminalreporter.section("acceptance criteria")
    for number, verdict, detail in sorted(set(rows)):
        terminalreporter.write_line(f"criterion {number:2d}: {verdict}  {detail}")
