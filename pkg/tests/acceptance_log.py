"""Collects one verdict per acceptance criterion for the end-of-run summary."""

RESULTS = {}


def record(number, ok, detail):
    verdict = "SKIP" if ok is None else ("PASS" if ok else "FAIL")
    RESULTS[number] = (verdict, detail)
    print(f"criterion {number}: {verdict}  {detail}")
    return ok
