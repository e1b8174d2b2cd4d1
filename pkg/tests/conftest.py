"""Prints one pass/fail line per acceptance criterion at the end of the run."""

ACCEPTANCE: dict[int, dict] = {}


def record(criterion: int, title: str, ok: bool, detail: str = "") -> None:
    entry = ACCEPTANCE.setdefault(criterion, {"title": title, "ok": True, "details": []})
    entry["ok"] &= bool(ok)
    if detail:
        entry["details"].append(detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        e = ACCEPTANCE[num]
        tr.write_line(f"criterion {num:2d} {'PASS' if e['ok'] else 'FAIL'}  {e['title']}")
        for d in e["details"]:
            tr.write_line(f"      {d}")
