"""Collects one verdict line per acceptance criterion."""

LINES: list[str] = []


def record(number: int, title: str, passed: bool, detail: str, seconds: float, budget: float | None = None) -> None:
    timing = f"{seconds:.1f}s" + (f" (budget {budget:.0f}s)" if budget else "")
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {number:2d}: {title} | {detail} | {timing}"
    LINES.append(line)
    print(line)
