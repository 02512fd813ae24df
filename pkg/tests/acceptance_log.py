# criterion number -> "PASS/FAIL line", filled by test_acceptance and printed at session end
LINES = {}


def record(num: int, title: str, passed: bool, detail: str) -> bool:
    LINES[num] = f"criterion {num:2d} {'PASS' if passed else 'FAIL'}  {title}: {detail}"
    print(LINES[num])
    return passed
