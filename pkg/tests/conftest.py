import pytest

# criterion id -> list of (clause, passed, detail)
ACCEPTANCE: dict[str, list[tuple[str, bool, str]]] = {}


@pytest.fixture
def criterion():
    def record(cid: str, clause: str, passed: bool, detail: str = ""):
        ACCEPTANCE.setdefault(cid, []).append((clause, bool(passed), detail))
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for cid in sorted(ACCEPTANCE, key=lambda c: int(c[1:])):
        clauses = ACCEPTANCE[cid]
        ok = all(p for _, p, _ in clauses)
        failed = [f"{c} ({d})" if d else c for c, p, d in clauses if not p]
        tail = f"{len(clauses)} clause(s)" if ok else "failed: " + "; ".join(failed)
        tr.write_line(f"{cid}: {'PASS' if ok else 'FAIL'}  {tail}")
