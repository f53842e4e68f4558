import pytest

# criterion number -> (title, passed, note); filled in by test_acceptance.py
ACCEPTANCE: dict[int, tuple[str, bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        title, passed, note = ACCEPTANCE[num]
        line = f"criterion {num:>2} {'PASS' if passed else 'FAIL'}  {title}"
        terminalreporter.write_line(line + (f"  ({note})" if note else ""))


@pytest.fixture
def criterion(request):
    """Record the outcome of one acceptance criterion and print its line."""

    def record(num, title):
        state = {"note": ""}
        ACCEPTANCE[num] = (title, False, "")

        def note(text):
            state["note"] = text

        def finish():
            failed = request.node.rep_call.failed if hasattr(request.node, "rep_call") else True
            ACCEPTANCE[num] = (title, not failed, state["note"])
            print(f"criterion {num}: {'PASS' if not failed else 'FAIL'} {title}")

        request.addfinalizer(finish)
        return note

    return record


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep
