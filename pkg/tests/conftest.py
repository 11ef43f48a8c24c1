import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from apxgrp import GroupCtx

settings.register_profile(
    "repo",
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile("repo")


BACKENDS = {
    "Z2": GroupCtx.lattice(2),
    "Z35": GroupCtx.modular(35),
    "Z3^4": GroupCtx.modular(3, 4),
    "S5": GroupCtx.symmetric(5),
    "SL2(7)": GroupCtx.sl2(7),
    "GL2(5)": GroupCtx.gl2(5),
    "H3": GroupCtx.heisenberg(),
    "F2": GroupCtx.cayley(("a", "b"), max_len=24),
    "Dinf": GroupCtx.cayley(("a", "b"), rules=(("a^2", ""), ("a^-1", "a"), ("b^2", ""), ("b^-1", "b")), max_len=24),
}


def random_rows(ctx: GroupCtx, rng: np.random.Generator, k: int) -> np.ndarray:
    """k random elements of ctx as rows, drawn without the code under test where possible."""
    be = ctx.backend
    if ctx.kind == "lattice":
        return rng.integers(-1000, 1001, size=(k, ctx.d))
    if ctx.kind == "heisenberg":
        return rng.integers(-1000, 1001, size=(k, 3))
    if ctx.kind == "modular":
        return rng.integers(0, ctx.n, size=(k, ctx.d))
    if ctx.kind == "symmetric":
        return np.array([rng.permutation(ctx.n) for _ in range(k)], dtype=np.int64)
    if ctx.kind in ("sl2", "gl2"):
        allg = be.all_elements()
        return allg[rng.integers(0, len(allg), size=k)]
    if ctx.kind == "cayley":
        letters = [g for g in ctx.generators] + [g + "^-1" for g in ctx.generators]
        words = []
        for _ in range(k):
            n = int(rng.integers(0, 7))
            words.append("*".join(letters[int(i)] for i in rng.integers(0, len(letters), size=n)) or "e")
        return np.stack([be.parse(w) for w in words])
    raise AssertionError(ctx.kind)


@pytest.fixture(params=sorted(BACKENDS))
def any_ctx(request):
    return BACKENDS[request.param]


# ---------------------------------------------------------------------------
# acceptance summary: one line per criterion, aggregated over its test items

_ACCEPT: dict[int, list] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py::test_criterion_" not in report.nodeid:
        return
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    num = int(report.nodeid.split("test_criterion_")[1][:2])
    details = [v for k, v in report.user_properties if k == "detail"]
    if report.skipped:
        details = ["skipped " + report.nodeid.split("::")[-1]]
    _ACCEPT.setdefault(num, []).append((not report.failed, report.nodeid.split("::")[-1], details))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPT:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for num in sorted(_ACCEPT):
        items = _ACCEPT[num]
        ok = all(p for p, _, _ in items)
        bad = [name for p, name, _ in items if not p]
        skipped = sum(1 for _, _, ds in items if ds and ds[0].startswith("skipped "))
        notes = "; ".join(d for _, _, ds in items for d in ds if not d.startswith("skipped "))
        if skipped:
            notes = f"{skipped} not applicable (skipped)" + ("; " + notes if notes else "")
        applicable = len(items) - skipped
        passed = sum(p for p, _, _ in items) - skipped
        line = f"criterion {num:2d}: {'PASS' if ok else 'FAIL'} ({passed}/{applicable} items)"
        if bad:
            line += " failing: " + ", ".join(bad)
        if notes:
            line += " | " + notes
        tr.write_line(line)
