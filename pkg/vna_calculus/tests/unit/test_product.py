"""
Tests for vna_calculus amalgamated free products.

Covers:
1. rdim formula and additivity check
2. Closed form shapes and results
3. General engine on free factor and diffuse inputs
4. Convergence reports and provenance
5. Compression consistency
"""

from fractions import Fraction

import pytest

from vna_calculus.algebra import AlgebraDesc, ProjectionSpec, Summand
from vna_calculus.const import (
    CHECK_MATCH,
    CHECK_NOT_APPLICABLE,
    RULE_CLOSED_FORM,
    RULE_PEEL,
    SHAPE_DIFFUSE_DIFFUSE,
    SHAPE_FREE_FREE,
    SHAPE_FREE_GENERAL,
    SHAPE_FREE_HYPERFINITE,
    STATUS_BOUNDS_ONLY,
    STATUS_EXACT,
    STATUS_STABLE,
)
from vna_calculus.exactnum import INF, UNDEFINED, DimValue, ExtScalar
from vna_calculus.exceptions import EngineError, ShapeMismatch, ValidationError
from vna_calculus.product import (
    ConvergenceReport,
    DepthBound,
    additivity_check,
    check_compression_consistency,
    closed_form_product,
    closed_form_shape,
    compute_product,
    product_general,
    rdim_formula,
    run_product,
)

from ..test_constants import HALF, QUARTER


@pytest.fixture
def ff_problem(factory):
    """F(1; 1) and F(2; 1) over C(1)."""
    d = factory.abelian_base(1)
    a = factory.algebra(Summand.free_factor(1, 1), prefix="A")
    b = factory.algebra(Summand.free_factor(2, 1), prefix="B")
    e = factory.embedding([1])
    return a, b, d, e, e


@pytest.fixture
def finf_problem(factory):
    """F(1; 1/2) (+) F(1; 1/4) (+) F(1; 1/4) and F(2; 1) over C(1)."""
    d = factory.abelian_base(1)
    a = factory.algebra(
        Summand.free_factor(1, HALF), Summand.free_factor(1, QUARTER), Summand.free_factor(1, QUARTER), prefix="A"
    )
    b = factory.algebra(Summand.free_factor(2, 1), prefix="B")
    return a, b, d, factory.embedding([HALF, QUARTER, QUARTER]), factory.embedding([1])


def _signature(s, t):
    return AlgebraDesc((Summand.free_factor(s, t, "P"),)).signature()


# =============================================================================
# 1. Dimension bookkeeping
# =============================================================================


class TestAdditivity:
    """Tests for rdim_formula and additivity_check."""

    def test_formula(self, halves_problem):
        """0 + 0 - (-1/4 - 1/4) = 1/2."""
        a, b, d, _, _ = halves_problem
        assert rdim_formula(a, b, d) == DimValue.of(HALF)

    def test_match(self):
        """Equal values match."""
        assert additivity_check(DimValue.of(1), DimValue.of(1)) == CHECK_MATCH

    def test_undefined_formula_not_applicable(self):
        """An undefined formula cannot be checked."""
        assert additivity_check(DimValue.of(0), UNDEFINED) == CHECK_NOT_APPLICABLE

    def test_mismatch_is_engine_failure(self):
        """A mismatch raises instead of being reported."""
        with pytest.raises(EngineError, match="additivity"):
            additivity_check(DimValue.of(1), DimValue.of(2))


# =============================================================================
# 2. Closed forms
# =============================================================================


class TestClosedFormShape:
    """Tests for closed_form_shape."""

    def test_diffuse_diffuse(self, halves_problem):
        """Two single diffuse summands."""
        a, b, _, _, _ = halves_problem
        assert closed_form_shape(a, b)[0] == SHAPE_DIFFUSE_DIFFUSE

    def test_free_free(self, ff_problem):
        """Two single free factors."""
        a, b, _, _, _ = ff_problem
        assert closed_form_shape(a, b)[0] == SHAPE_FREE_FREE

    def test_free_hyperfinite(self, factory):
        """A free factor against a hyperfinite side, either order."""
        free = factory.algebra(Summand.free_factor(1, 1))
        other = factory.algebra(Summand.diffuse(HALF), Summand.matrix(1, HALF))
        shape, found, rest = closed_form_shape(other, free)
        assert shape == SHAPE_FREE_HYPERFINITE
        assert (found, rest) == (free, other)

    def test_free_general(self, mixed_problem):
        """A free factor against a side that has free factors too."""
        a, b, _, _, _ = mixed_problem
        assert closed_form_shape(a, b)[0] == SHAPE_FREE_GENERAL

    def test_no_shape(self, factory):
        """Two summands against one diffuse summand has no closed form."""
        a = factory.algebra(Summand.diffuse(HALF), Summand.diffuse(HALF))
        b = factory.algebra(Summand.diffuse(1))
        with pytest.raises(ShapeMismatch):
            closed_form_shape(a, b)


class TestClosedFormProduct:
    """Tests for closed_form_product."""

    def test_halves(self, halves_problem):
        """H(1) * H(1) over halves is F(1/2; 1)."""
        result = closed_form_product(*halves_problem)
        assert result.algebra.signature() == _signature(HALF, 1)
        assert result.shape == SHAPE_DIFFUSE_DIFFUSE
        assert result.additivity_check == CHECK_MATCH
        assert result.lineage.counts == {RULE_CLOSED_FORM: 1}

    def test_free_free(self, ff_problem):
        """L(F_2) * L(F_3) over C is L(F_5)."""
        assert closed_form_product(*ff_problem).algebra.signature() == _signature(4, 1)

    def test_free_against_base(self, factory):
        """F_s *_D D is F_s."""
        d = factory.abelian_base(HALF, HALF)
        a = factory.algebra(Summand.free_factor(1, 1), prefix="A")
        b = factory.algebra(Summand.matrix(1, HALF), Summand.matrix(1, HALF), prefix="B")
        result = closed_form_product(a, b, d, factory.embedding([HALF], [HALF]), factory.embedding([HALF, 0], [0, HALF]))
        assert result.algebra.signature() == _signature(1, 1)
        assert result.shape == SHAPE_FREE_HYPERFINITE

    def test_mixed(self, mixed_problem):
        """1 + (1/4 + 0) - (-1/2) = 7/4."""
        assert closed_form_product(*mixed_problem).algebra.signature() == _signature(Fraction(7, 4), 1)

    def test_semifinite(self, factory):
        """H(inf) * H(inf) over M(inf; 1/2) (+) M(inf; 1/4) is F(5/16; inf)."""
        d = factory.base((INF, HALF), (INF, QUARTER))
        a = factory.algebra(Summand.diffuse(INF), prefix="A")
        b = factory.algebra(Summand.diffuse(INF), prefix="B")
        e = factory.embedding([HALF], [QUARTER])
        result = closed_form_product(a, b, d, e, e)
        assert result.algebra.signature() == _signature(Fraction(5, 16), INF)

    def test_provenance(self, halves_problem):
        """Every input summand's support is the whole output."""
        result = closed_form_product(*halves_problem)
        assert result.location_of("A", "A1") == ProjectionSpec.of([1])
        assert result.location_of("B", "B1") == ProjectionSpec.of([1])
        with pytest.raises(KeyError):
            result.location_of("A", "missing")

    def test_shape_mismatch_propagates(self, factory):
        """No closed form raises ShapeMismatch."""
        d = factory.abelian_base(HALF, HALF)
        a = factory.algebra(Summand.diffuse(HALF), Summand.diffuse(HALF))
        b = factory.algebra(Summand.diffuse(1))
        with pytest.raises(ShapeMismatch):
            closed_form_product(a, b, d, factory.embedding([HALF, 0], [0, HALF]), factory.embedding([HALF], [HALF]))

    def test_invalid_inputs(self, halves_problem, factory):
        """Invalid embeddings are reported per side."""
        a, b, d, e_a, _ = halves_problem
        with pytest.raises(ValidationError) as err:
            closed_form_product(a, b, d, e_a, factory.embedding([1], [0]))
        assert all(problem.startswith("B: ") for problem in err.value.problems)


# =============================================================================
# 3. General engine
# =============================================================================


class TestProductGeneral:
    """Tests for product_general."""

    def test_free_factors_peeled(self, ff_problem):
        """Peeling both free factors over C gives F(4; 1) exactly."""
        result = product_general(*ff_problem)
        assert result.algebra.signature() == _signature(4, 1)
        assert result.convergence.status == STATUS_EXACT
        assert result.convergence.depth is None
        assert result.lineage.counts == {RULE_PEEL: 2}

    def test_side_order_does_not_matter(self, ff_problem):
        """B first gives the same product."""
        assert product_general(*ff_problem, side_order=("B", "A")).algebra.signature() == _signature(4, 1)

    def test_finf(self, finf_problem):
        """rdim(A) = 3 gives F(6; 1)."""
        result = product_general(*finf_problem)
        assert result.algebra.signature() == _signature(6, 1)
        assert result.additivity_check == CHECK_MATCH

    def test_halves_stabilize(self, halves_problem):
        """The diffuse core agrees with the closed form and stabilizes."""
        result = product_general(*halves_problem, depth=4)
        assert result.algebra.signature() == _signature(HALF, 1)
        assert result.convergence.status == STATUS_STABLE
        assert result.convergence.depth == 2

    def test_halves_bounds(self, halves_problem):
        """Uncompleted approximants give the M_4 * M_4 bound first, non-decreasing after."""
        bounds = product_general(*halves_problem, depth=4).convergence.bounds
        assert bounds[0] == DepthBound(1, DimValue.of(Fraction(3, 8)), ((ExtScalar.of(Fraction(3, 8)), ExtScalar.of(1)),))
        assert all(x.rdim <= y.rdim for x, y in zip(bounds, bounds[1:], strict=False))

    def test_budget_exhausted(self, halves_problem):
        """A depth budget of 1 cannot show stability."""
        assert product_general(*halves_problem, depth=1).convergence.status == STATUS_BOUNDS_ONLY

    def test_depth_must_be_positive(self, ff_problem):
        """Depth 0 is rejected."""
        with pytest.raises(ValidationError):
            run_product(*ff_problem, depth=0)

    def test_side_order_validated(self, ff_problem):
        """Side order is a permutation of A and B."""
        with pytest.raises(ValidationError):
            run_product(*ff_problem, side_order=("A", "A"))

    def test_provenance(self, finf_problem):
        """Every input summand is located in the single output factor."""
        result = product_general(*finf_problem)
        assert result.location_of("A", "A1") == ProjectionSpec.of([HALF])
        assert result.location_of("A", "A3") == ProjectionSpec.of([QUARTER])
        assert result.location_of("B", "B1") == ProjectionSpec.of([1])

    def test_compute_prefers_closed_form(self, ff_problem):
        """compute_product reports the closed form shape when there is one."""
        assert compute_product(*ff_problem).shape == SHAPE_FREE_FREE

    def test_compute_uses_free_general(self, finf_problem):
        """A single free factor against several free factors is a closed form too."""
        result = compute_product(*finf_problem)
        assert result.shape == SHAPE_FREE_GENERAL
        assert result.algebra.signature() == _signature(6, 1)

    def test_compute_falls_back(self, factory):
        """Without a closed form the general engine runs."""
        d = factory.abelian_base(HALF, HALF)
        a = factory.algebra(Summand.diffuse(HALF), Summand.diffuse(HALF), prefix="A")
        b = factory.algebra(Summand.diffuse(1), prefix="B")
        e_a = factory.embedding([HALF, 0], [0, HALF])
        result = compute_product(a, b, d, e_a, factory.embedding([HALF], [HALF]), depth=3)
        assert result.shape is None
        assert result.additivity_check == CHECK_MATCH
        assert result.rdim_structural == DimValue.of(HALF)


# =============================================================================
# 4. Reports
# =============================================================================


class TestReports:
    """Tests for ConvergenceReport and ProductResult.to_dict."""

    def test_note_with_depth(self):
        """Status and depth."""
        assert ConvergenceReport(STATUS_STABLE, 2).note == "stable at depth 2"

    def test_note_with_family(self):
        """Truncated inputs add the limit classification."""
        report = ConvergenceReport(STATUS_EXACT, truncated=True, limit_rdim=UNDEFINED)
        assert report.note == "exact; declared family: undef in limit"

    def test_result_dict(self, ff_problem):
        """Product records carry canonical strings."""
        record = product_general(*ff_problem).to_dict()
        assert list(record) == [
            "algebra",
            "rdim_structural",
            "rdim_formula",
            "additivity_check",
            "lineage",
            "convergence",
            "provenance",
            "shape",
        ]
        assert record["rdim_structural"] == "4"
        assert record["algebra"][0]["s"] == "4"
        assert record["convergence"]["status"] == STATUS_EXACT


# =============================================================================
# 5. Compression consistency
# =============================================================================


class TestCompressionConsistency:
    """Tests for check_compression_consistency."""

    def test_free_factors(self, ff_problem):
        """pMp directly and rebuilt over pD agree."""
        check, direct, rebuilt = check_compression_consistency(*ff_problem, "A1")
        assert check == CHECK_MATCH
        assert direct.signature() == _signature(4, 1)
        assert rebuilt.signature() == direct.signature()

    def test_unknown_label(self, ff_problem):
        """The label names a summand of A."""
        with pytest.raises(KeyError):
            check_compression_consistency(*ff_problem, "B1")
