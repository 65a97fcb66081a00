import contextlib
import io
from pathlib import Path

import numpy as np
import pytest

from ulc.cli import run_cli
from ulc.seqcore import Seq


def random_log_concave(rng: np.random.Generator, length: int = 13, n_slopes: int | None = None):
    """Positive log-concave sequence on ``[0, length-1]`` with a known number of distinct slopes.

    Base slope ~ U(-1, 1), jumps ~ U(0.2, 0.8) at distinct positions.  When
    ``n_slopes`` is not given it is drawn from 1..4, capped by what fits.
    """
    m = length
    if n_slopes is None:
        n_slopes = int(rng.integers(1, min(4, m - 2) + 1))
    pos = np.sort(rng.choice(np.arange(1, m - 1), size=n_slopes - 1, replace=False))
    inc = np.zeros(m - 1)
    inc[pos] = rng.uniform(0.2, 0.8, size=n_slopes - 1)
    slopes = rng.uniform(-1.0, 1.0) + np.cumsum(inc)
    V = np.concatenate([[0.0], np.cumsum(slopes)])
    return Seq(0, np.exp(-V)), n_slopes


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


FIXTURES = Path(__file__).parent / "fixtures"

#: name -> argv for the golden CLI runs; "{fixtures}" is replaced at run time
GOLDEN_CASES = {
    "extremal_1_10": ["extremal", "--mean", "1", "--support", "10", "--emit", "csv"],
    "validate_112": ["validate", "--input", "{fixtures}/seq_112.json"],
    "verify_2_15": ["verify", "--mean", "2", "--support", "15", "--trials", "1000", "--seed", "7"],
}


def run_captured(argv):
    """Run the CLI in-process; returns (exit code, stdout, stderr)."""
    argv = [a.replace("{fixtures}", str(FIXTURES)) for a in argv]
    out, err = io.StringIO(), io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        code = run_cli(argv)
    return code, out.getvalue(), err.getvalue()


def golden(name):
    base = FIXTURES / "golden" / name
    code = int((base.with_suffix(".exit")).read_text())
    return code, base.with_suffix(".stdout").read_text(encoding="utf-8")
