"""
Tests for the self-checking demos.

Covers:
1. Diffuse families (pi26, rr)
2. Undefined regulated dimension
3. Free group factors (ff, finf)
4. run_demo dispatch
"""

from fractions import Fraction

import pytest

from vna_calculus.const import STATUS_EXACT
from vna_calculus.demos import demo_finf, demo_pi26, demo_rr, demo_undef_rdim, run_demo
from vna_calculus.exactnum import INF, DimValue, ExtScalar
from vna_calculus.exceptions import ValidationError

# =============================================================================
# 1. Diffuse families
# =============================================================================


class TestDiffuseDemos:
    """Tests for pi26 and rr."""

    def test_pi26_expected_values(self):
        """Four terms: s = 205/144, t = 25/12."""
        outcome = demo_pi26(truncate=4, depth=6)
        expected = outcome.expected[0]
        assert expected.s == ExtScalar.of(Fraction(205, 144))
        assert expected.trace == ExtScalar.of(Fraction(25, 12))
        assert outcome.result.rdim_structural == DimValue.of(Fraction(205, 144))
        assert outcome.result.algebra.total_trace == ExtScalar.of(Fraction(25, 12))

    def test_pi26_two_terms(self):
        """H(3/2) * (H(1) (+) H(1/2)) over C(1) (+) C(1/2)."""
        outcome = demo_pi26(truncate=2, depth=6)
        assert outcome.passed
        assert outcome.notes[0].startswith("s = 5/4")

    def test_pi26_declared_family(self):
        """The family is flagged as truncated."""
        assert demo_pi26(truncate=2, depth=6).result.convergence.truncated

    def test_rr(self):
        """Chain engine and closed form agree; semifinite partial sum for three terms."""
        outcome = demo_rr(truncate=3, depth=4)
        assert outcome.passed
        semifinite = outcome.extra["semifinite"]["algebra"][0]
        assert semifinite["s"] == str(Fraction(21, 64))
        assert semifinite["t"] == str(INF)


# =============================================================================
# 2. Undefined rdim
# =============================================================================


class TestUndefRdim:
    """Tests for undef-rdim."""

    def test_default_truncation(self):
        """Three copies of H(1), rdim 0, undefined in the limit."""
        outcome = demo_undef_rdim()
        assert outcome.passed
        assert str(outcome.result.algebra) == "H(1) (+) H(1) (+) H(1)"
        assert outcome.notes[1] == "declared family: undef in limit"

    def test_exact_without_diffuse(self):
        """Multimatrix inputs need no chain."""
        assert demo_undef_rdim(truncate=2).result.convergence.status == STATUS_EXACT


# =============================================================================
# 3. Free group factors
# =============================================================================


class TestFreeDemos:
    """Tests for ff and finf."""

    def test_ff(self):
        """F(1; 1) * F(2; 1) = F(4; 1)."""
        outcome = run_demo("ff")
        assert outcome.passed
        assert str(outcome.result.algebra) == "FG(4; 1)"

    def test_finf(self):
        """Five terms give F(8; 1)."""
        outcome = demo_finf(truncate=5)
        assert outcome.passed
        assert str(outcome.result.algebra) == "FG(8; 1)"

    def test_finf_needs_two_terms(self):
        """One term is rejected."""
        with pytest.raises(ValidationError, match="at least 2"):
            demo_finf(truncate=1)


# =============================================================================
# 4. Dispatch
# =============================================================================


class TestRunDemo:
    """Tests for run_demo."""

    def test_unknown(self):
        """Unknown names are listed."""
        with pytest.raises(ValidationError, match="unknown demo"):
            run_demo("nope")

    def test_own_default_truncation(self):
        """None keeps the demo's default."""
        assert len(run_demo("undef-rdim", None, 2).result.algebra) == 3

    def test_payload(self):
        """to_dict merges demo and product records."""
        payload = run_demo("ff").to_dict()
        assert list(payload)[:4] == ["demo", "passed", "expected", "notes"]
        assert payload["shape"] == "free-free"
