"""Sphericity gate, sampling adequacy, and MSA-driven item pruning."""

from __future__ import annotations

import math

import numpy as np
import pytest

from psychoval import (
    FactorModelSpec,
    SymMatrix,
    bartlett_sphericity,
    complete_cases,
    correlation_matrix,
    generate,
    kmo,
    msa_prune,
    sample_adequacy_advice,
)
from psychoval.errors import CannotReachThreshold, SampleTooSmall
from tests import oracles
from tests.frozen import PRUNE_SEED


def equicorrelated(p: int, r: float) -> np.ndarray:
    R = np.full((p, p), r)
    np.fill_diagonal(R, 1.0)
    return R


def prune_fixture_view():
    """Two 3-item blocks at loading 0.8 plus one pure-noise item G."""
    L = np.zeros((7, 2))
    L[:3, 0] = 0.8
    L[3:6, 1] = 0.8
    spec = FactorModelSpec(loadings=L, n=400, seed=PRUNE_SEED,
                           items=tuple("ABCDEFG"))
    return complete_cases(generate(spec), "listwise")


class TestBartlett:
    def test_identity_matrix(self):
        chi2, df, p = bartlett_sphericity(SymMatrix(np.eye(4)), 100)
        assert chi2 == 0.0
        assert df == 6
        assert p == 1.0

    def test_hand_value_p2(self):
        # p=2, r=0.5, n=101: -(100 - 9/6) ln(0.75) = 28.3367, df=1
        R = SymMatrix(equicorrelated(2, 0.5))
        chi2, df, p = bartlett_sphericity(R, 101)
        assert chi2 == pytest.approx(28.3367, abs=0.01)
        assert chi2 == pytest.approx(-98.5 * math.log(0.75), abs=1e-10)
        assert df == 1
        assert p == pytest.approx(oracles.chi2_sf_quadrature(chi2, 1), abs=1e-6)

    def test_near_singular_is_overwhelming(self):
        _, _, p = bartlett_sphericity(SymMatrix(equicorrelated(3, 0.999)), 50)
        assert p < 1e-10

    def test_p_decreases_with_correlation(self):
        ps = [bartlett_sphericity(SymMatrix(equicorrelated(4, r)), 80)[2]
              for r in (0.1, 0.3, 0.5)]
        assert ps[0] > ps[1] > ps[2]

    def test_sample_too_small(self):
        with pytest.raises(SampleTooSmall):
            bartlett_sphericity(SymMatrix(equicorrelated(4, 0.3)), 4)


class TestKmo:
    def test_equicorrelated_closed_form(self):
        # p=3, r=0.5: every partial correlation is -1/3, so
        # KMO = (6 * 0.25) / (6 * 0.25 + 6 * (1/9)) = 9/13
        overall, msa, _ = kmo(SymMatrix(equicorrelated(3, 0.5)), ["A", "B", "C"])
        assert overall == pytest.approx(9 / 13, abs=1e-9)
        for v in msa.values():
            assert v == pytest.approx(9 / 13, abs=1e-9)

    @pytest.mark.parametrize("seed,p", [(1, 3), (2, 4), (3, 4)])
    def test_matches_cofactor_oracle(self, seed, p):
        rng = np.random.default_rng(seed)
        M = rng.uniform(-1.0, 1.0, size=(p, p + 2))
        cov = M @ M.T + 0.5 * np.eye(p)
        sd = np.sqrt(np.diag(cov))
        R = cov / np.outer(sd, sd)
        overall, msa, _ = kmo(SymMatrix(R), [f"I{j}" for j in range(p)])
        exp_overall, exp_msa = oracles.kmo_definitional(R)
        assert overall == pytest.approx(exp_overall, abs=1e-9)
        assert list(msa.values()) == pytest.approx(exp_msa, abs=1e-9)

    def test_values_bounded(self):
        overall, msa, _ = kmo(SymMatrix(equicorrelated(5, 0.4)), list("ABCDE"))
        assert 0.0 <= overall <= 1.0
        assert all(0.0 <= v <= 1.0 for v in msa.values())

    def test_anti_image_unit_diagonal_symmetric(self):
        _, _, anti = kmo(SymMatrix(equicorrelated(4, 0.3)), list("ABCD"))
        A = anti.values
        assert np.allclose(np.diag(A), 1.0, atol=1e-12)
        assert np.allclose(A, A.T, atol=1e-12)

    def test_noise_item_has_lowest_msa(self):
        view = prune_fixture_view()
        R = correlation_matrix(view.data, list(view.items))
        _, msa, _ = kmo(R, list(view.items))
        assert min(msa, key=msa.get) == "G"
        assert msa["G"] < 0.5
        assert all(v >= 0.55 for it, v in msa.items() if it != "G")


class TestMsaPrune:
    def test_clean_data_prunes_nothing(self):
        view = complete_cases(generate(FactorModelSpec(
            loadings=np.full((4, 1), 0.8), n=300, seed=3, items=tuple("ABCD"),
        )), "listwise")
        trail = msa_prune(view)
        assert trail.steps == ()
        assert trail.retained == view.items
        assert trail.termination == "all_above_threshold"

    def test_noise_item_pruned_first_and_kmo_rises(self):
        view = prune_fixture_view()
        R = correlation_matrix(view.data, list(view.items))
        before, _, _ = kmo(R, list(view.items))
        trail = msa_prune(view, threshold=0.5)
        assert trail.removed == ("G",)
        assert trail.retained == tuple("ABCDEF")
        assert trail.steps[0].kmo_after > before
        # after pruning, everything clears the bar
        R2 = correlation_matrix(view.data[:, :6], list("ABCDEF"))
        _, msa2, _ = kmo(R2, list("ABCDEF"))
        assert all(v >= 0.5 for v in msa2.values())

    def test_zero_threshold_disables_pruning(self):
        trail = msa_prune(prune_fixture_view(), threshold=0.0)
        assert trail.removed == ()

    def test_unreachable_threshold_raises_with_trail(self):
        view = prune_fixture_view()
        with pytest.raises(CannotReachThreshold) as exc_info:
            msa_prune(view, threshold=0.999)
        trail = exc_info.value.trail
        assert trail.termination == "min_items_reached"
        assert len(trail.retained) == 3  # stops at the minimum item count
        assert len(trail.steps) == len(view.items) - 3


class TestAdvice:
    def solution(self, h2: float, p: int = 8, n_factors: int = 2):
        """Hand-built solution whose mean communality is exactly h2."""
        from psychoval import FactorSolution

        L = np.zeros((p, n_factors))
        half = p // n_factors
        for k in range(n_factors):
            L[k * half:(k + 1) * half, k] = math.sqrt(h2)
        return FactorSolution(
            items=tuple(f"I{j}" for j in range(p)),
            extraction="paf",
            rotation="none",
            loadings=L,
            eigenvalues=np.ones(p),
            phi=np.eye(n_factors),
            communalities=np.full(p, h2),
        )

    def test_high_band(self):
        advice = sample_adequacy_advice(self.solution(0.72), n=100)
        assert advice.communality_band == "high"
        assert not advice.caution

    def test_moderate_band_is_closed_at_point_four(self):
        advice = sample_adequacy_advice(self.solution(0.4), n=100)
        assert advice.communality_band == "moderate"

    def test_high_band_is_closed_at_point_seven(self):
        advice = sample_adequacy_advice(self.solution(0.7), n=100)
        assert advice.communality_band == "high"

    def test_low_band_with_small_sample_fires_caution(self):
        advice = sample_adequacy_advice(self.solution(0.3, p=6), n=150)
        assert advice.communality_band == "low"
        assert advice.items_per_factor == 3.0
        assert advice.caution

    def test_low_band_with_large_sample_does_not(self):
        advice = sample_adequacy_advice(self.solution(0.3, p=6), n=500)
        assert not advice.caution

    def test_low_band_with_many_items_per_factor_does_not(self):
        advice = sample_adequacy_advice(self.solution(0.3, p=8, n_factors=1),
                                        n=150)
        assert advice.communality_band == "low"
        assert not advice.caution

    def test_note_is_flagged_advisory(self):
        advice = sample_adequacy_advice(self.solution(0.8), n=50)
        assert "advisory" in advice.note
