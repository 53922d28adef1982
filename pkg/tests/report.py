"""Collects one pass/fail line per acceptance criterion."""

LINES: list[str] = []


def record(number: int, ok: bool, detail: str) -> str:
    line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    LINES.append(line)
    print(line)
    return line
