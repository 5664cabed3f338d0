"""
E2E sweeps of the general engine over generated instances.

Covers:
1. rdim additivity and trace conservation for multimatrix products
2. Independence of the side order and of the simple step schedule
3. Free factor products against their closed form
4. Compression consistency for every summand of A
"""

import random

import pytest

from vna_calculus import engine, product
from vna_calculus.const import CHECK_MATCH, STATUS_EXACT
from vna_calculus.product import (
    check_compression_consistency,
    closed_form_product,
    product_general,
    run_product,
)

from .instances import (
    diffuse_instances,
    free_instances,
    multimatrix_instances,
    run_schedule,
    shuffled_schedule,
    simple_schedule,
)

pytestmark = pytest.mark.e2e


def _params(instances):
    """Three-block bases only run in long mode."""
    return [
        pytest.param(
            instance,
            id=instance.name,
            marks=[pytest.mark.long_sweep] if len(instance.d) > 2 else [],
        )
        for instance in instances
    ]


MULTIMATRIX = _params(multimatrix_instances())
FREE = _params(free_instances())
DIFFUSE = _params(diffuse_instances())


@pytest.fixture
def step_traces(monkeypatch):
    """Return the (before, after) total traces of every corner rewrite and completion."""
    seen = []

    def watch(step):
        def wrapped(state, *args, **kwargs):
            after = step(state, *args, **kwargs)
            seen.append((state.total_trace, after.total_trace))
            return after

        return wrapped

    monkeypatch.setattr(engine, "apply_corner", watch(engine.apply_corner))
    monkeypatch.setattr(product, "complete_block", watch(product.complete_block))
    return seen


# =============================================================================
# 1. Additivity
# =============================================================================


class TestMultimatrixAdditivity:
    """product_general on pairs of multimatrix algebras."""

    @pytest.mark.parametrize("instance", MULTIMATRIX)
    def test_additivity_and_trace(self, instance):
        """rdim is additive and the total trace is kept."""
        result = product_general(*instance.inputs, depth=1)
        assert result.additivity_check == CHECK_MATCH
        assert result.convergence.status == STATUS_EXACT
        assert result.algebra.total_trace == instance.d.total_trace

    @pytest.mark.parametrize("instance", MULTIMATRIX)
    def test_every_step_keeps_trace(self, instance, step_traces):
        """No corner rewrite changes the running total trace."""
        product_general(*instance.inputs, depth=1)
        assert step_traces
        assert all(before == after for before, after in step_traces)

    @pytest.mark.parametrize("instance", DIFFUSE)
    def test_completion_keeps_trace(self, instance, step_traces):
        """Completing diffuse blocks keeps the running total trace too."""
        product_general(*instance.inputs, depth=2)
        assert step_traces
        assert all(before == after for before, after in step_traces)


# =============================================================================
# 2. Side order and schedules
# =============================================================================


class TestSideOrder:
    """The product does not depend on which side the engine handles first."""

    @pytest.mark.parametrize("instance", MULTIMATRIX)
    def test_reversed_sides(self, instance):
        """("B", "A") gives the same algebra as ("A", "B")."""
        forward = run_product(*instance.inputs, depth=1).result
        backward = run_product(*instance.inputs, depth=1, side_order=("B", "A")).result
        assert backward.algebra.signature() == forward.algebra.signature()


class TestStepSchedules:
    """Interleaved simple steps of both sides give the same running product."""

    @pytest.mark.parametrize("seed", range(3))
    @pytest.mark.parametrize("instance", MULTIMATRIX)
    def test_shuffled_schedule(self, instance, seed):
        """Any order that respects step prerequisites agrees with A-then-B."""
        schedule = simple_schedule(instance)
        reference = run_schedule(instance, schedule)
        shuffled = run_schedule(instance, shuffled_schedule(schedule, random.Random(seed)))
        assert shuffled.product.signature() == reference.product.signature()
        assert shuffled.total_trace == reference.total_trace


# =============================================================================
# 3. Closed forms
# =============================================================================


class TestFreeAgainstClosedForm:
    """FG(1; 1) against multimatrix algebras."""

    @pytest.mark.parametrize("instance", FREE)
    def test_engine_matches_closed_form(self, instance, sweep_settings):
        """The general engine reproduces the closed form."""
        closed = closed_form_product(*instance.inputs)
        general = product_general(*instance.inputs, depth=sweep_settings.depth)
        assert general.algebra.signature() == closed.algebra.signature()
        assert general.rdim_structural == closed.rdim_structural


# =============================================================================
# 4. Compression consistency
# =============================================================================


class TestCompressionSweep:
    """Direct compression against the rebuilt corner, for every summand of A."""

    @pytest.mark.parametrize("instance", FREE)
    def test_free_factor_corner(self, instance, sweep_settings):
        """Both routes to pMp agree."""
        check, direct, rebuilt = check_compression_consistency(
            *instance.inputs, "A1", depth=sweep_settings.depth
        )
        assert check == CHECK_MATCH, f"{direct} vs {rebuilt}"

    @pytest.mark.parametrize("instance", MULTIMATRIX)
    def test_multimatrix_corners(self, instance):
        """Both routes agree for each matrix summand of A."""
        for label in instance.a.labels:
            check, direct, rebuilt = check_compression_consistency(*instance.inputs, label, depth=1)
            assert check == CHECK_MATCH, f"{label}: {direct} vs {rebuilt}"
