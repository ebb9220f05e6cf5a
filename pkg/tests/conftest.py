"""Shared fixtures: the published item-total table and the acceptance recorder."""

import numpy as np
import pytest

from splitrel import ItemScores, ScoreMatrix

# 50 published item totals from a 912-examinee administration; both
# balanced halves of this table sum to 5011 (grand total 10022).
TABLE2_TOTALS = {
    1: 75, 2: 284, 3: 135, 4: 144, 5: 112, 6: 230, 7: 172, 8: 128,
    9: 96, 10: 294, 11: 256, 12: 263, 13: 393, 14: 196, 15: 337,
    16: 405, 17: 285, 18: 134, 19: 193, 20: 100, 21: 190, 22: 292,
    23: 309, 24: 90, 25: 75, 26: 129, 27: 239, 28: 205, 29: 151,
    30: 221, 31: 106, 32: 124, 33: 131, 34: 103, 35: 483, 36: 127,
    37: 195, 38: 453, 39: 84, 40: 488, 41: 113, 42: 376, 43: 85,
    44: 102, 45: 115, 46: 80, 47: 199, 48: 178, 49: 236, 50: 111,
}
TABLE2_N = 912


def table2_tau() -> ItemScores:
    return ItemScores([TABLE2_TOTALS[j] for j in sorted(TABLE2_TOTALS)])


def column_fill(totals, n_examinees: int) -> ScoreMatrix:
    """A binary matrix whose column j holds totals[j] ones at the top.

    Any binary matrix with these column sums splits identically, since
    the splitter sees only the item totals.
    """
    totals = list(totals)
    if max(totals) > n_examinees:
        raise ValueError("column total exceeds the examinee count")
    m = np.zeros((n_examinees, len(totals)), dtype=np.int8)
    for j, t in enumerate(totals):
        m[:t, j] = 1
    return ScoreMatrix(m)


@pytest.fixture
def table2_matrix() -> ScoreMatrix:
    return column_fill([TABLE2_TOTALS[j] for j in sorted(TABLE2_TOTALS)], TABLE2_N)


# ---------------------------------------------------------------------------
# acceptance criterion recorder: tests register (criterion, clause) outcomes
# before asserting, and the terminal summary prints one line per criterion.

_ACCEPTANCE: dict[int, list[tuple[str, bool]]] = {}


def record_criterion(number: int, clause: str, passed: bool) -> None:
    _ACCEPTANCE.setdefault(number, []).append((clause, bool(passed)))


@pytest.fixture
def criterion():
    return record_criterion


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        clauses = _ACCEPTANCE[number]
        verdict = "PASS" if all(ok for _, ok in clauses) else "FAIL"
        detail = "; ".join(
            f"{text} [{'ok' if ok else 'FAILED'}]" for text, ok in clauses
        )
        terminalreporter.write_line(f"criterion {number}: {verdict} -- {detail}")
