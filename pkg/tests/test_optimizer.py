"""Utility equations against their closed-form substitutions, the selection
policies, and the mobility predictor."""

import math
import random

import pytest
from hypothesis import given, strategies as st

from hybridsim.actions import Action, Mode, Modality, enumerate_actions
from hybridsim.optimizer import (ConstantInteraction, EwmaInteraction,
                                 ModalityScores, NodeObservation,
                                 ScheduleInteraction, UtilityBreakdown,
                                 UtilityWeights, energy_utility, energy_weight,
                                 etno_select, euno_select, ewma_update,
                                 interaction_probability, localization_utility,
                                 mobility_probability, modality_utility,
                                 screen_utility, total_utility)

W = UtilityWeights()
P_OWC = Action(Mode.PERFORMANCE, Modality.OWC)
P_BLE = Action(Mode.PERFORMANCE, Modality.BLE)
C_OWC = Action(Mode.CONSERVATION, Modality.OWC)
C_BLE = Action(Mode.CONSERVATION, Modality.BLE)
SLEEP = Action(Mode.SLEEP, Modality.OWC)


def _observation(f_r=1.0, current=Modality.OWC, energies=None, rates=None,
                 p_int=0.7, snr=None, sample=None, baseline=None):
    actions = enumerate_actions(current)
    if energies is None:
        energies = {a: {Mode.PERFORMANCE: 0.45, Mode.CONSERVATION: 0.15,
                        Mode.SLEEP: 0.01}[a.mode] for a in actions}
    if rates is None:
        rates = {a: {Mode.PERFORMANCE: 300.0, Mode.CONSERVATION: 60.0,
                     Mode.SLEEP: 0.0}[a.mode] for a in actions}
    snr = snr or {Modality.OWC: 70.0, Modality.BLE: 67.0}
    sample = snr[current] if sample is None else sample
    return NodeObservation(
        f_r=f_r, current_modality=current, snr_db=snr,
        predicted_energy_j=energies, deliverable_rate_kbps=rates,
        p_int=p_int, snr_sample_db=sample,
        ewma_baseline_db=sample if baseline is None else baseline)


class TestEnergyWeight:
    def test_full_buffer(self):
        assert energy_weight(1.0, 0.2) == 0.0

    def test_critical_level(self):
        assert energy_weight(0.2, 0.2) == 1.0

    def test_direct_substitution(self):
        assert energy_weight(0.6, 0.2) == pytest.approx(0.5)

    def test_clamped_below_critical(self):
        assert energy_weight(0.05, 0.2) == 1.0

    @given(st.floats(0, 1), st.floats(0, 1))
    def test_monotone_non_increasing_in_f_r(self, a, b):
        lo, hi = sorted((a, b))
        assert energy_weight(lo, 0.2) >= energy_weight(hi, 0.2)


class TestModalityUtility:
    def test_upper_bound_reference(self):
        scores = ModalityScores(x_p=1, x_c=0, x_t=1, x_e=0, x_ch=0)
        assert modality_utility(1.0, scores, W) == pytest.approx(4.0)

    def test_conservation_substitution(self):
        scores = ModalityScores(x_p=0, x_c=1, x_t=0, x_e=1, x_ch=1)
        assert modality_utility(0.0, scores, W) == pytest.approx(1.7)

    def test_switch_penalty_isolation(self):
        kept = ModalityScores(x_p=1, x_c=0, x_t=0.5, x_e=0.2, x_ch=0)
        switched = ModalityScores(x_p=1, x_c=0, x_t=0.5, x_e=0.2, x_ch=1)
        diff = modality_utility(0.7, kept, W) - modality_utility(0.7, switched, W)
        assert diff == pytest.approx(W.p_ch)


class TestScreenAndLocalization:
    def test_screen_branches(self):
        assert screen_utility(P_OWC, 0.9, 0.5, 1.0) == 1.0
        assert screen_utility(C_OWC, 0.1, 0.5, 1.0) == 1.0
        assert screen_utility(SLEEP, 0.9, 0.5, 1.0) == 0.0
        assert screen_utility(C_OWC, 0.9, 0.5, 1.0) == 0.0

    def test_localization_branches(self):
        assert localization_utility(P_OWC, 0.8, 0.5, 1.0) == 1.0
        assert localization_utility(C_OWC, 0.8, 0.5, 1.0) == 0.0
        assert localization_utility(C_OWC, 0.2, 0.5, 1.0) == 1.0

    def test_threshold_is_strict(self):
        # probability exactly at the threshold does not demand the feature
        assert localization_utility(P_OWC, 0.5, 0.5, 1.0) == 0.0
        assert localization_utility(C_OWC, 0.5, 0.5, 1.0) == 1.0


class TestPredictor:
    def test_lambda_one_tracks_sample(self):
        assert ewma_update(5.0, 20.0, 1.0) == 20.0

    def test_constant_signal_fixed_point(self):
        baseline = 7.0
        for _ in range(50):
            baseline = ewma_update(baseline, 7.0, 0.2)
        assert baseline == pytest.approx(7.0)

    def test_substitution(self):
        assert ewma_update(10.0, 20.0, 0.5) == 15.0

    def test_lambda_domain(self):
        with pytest.raises(ValueError):
            ewma_update(0.0, 1.0, 0.0)

    def test_sigmoid_midpoint(self):
        assert mobility_probability(10.0, 13.0, 1.5, 3.0) == 0.5

    def test_stable_channel_probability_near_zero(self):
        assert mobility_probability(10.0, 10.0, 3.0, 6.0) < 1e-6

    def test_sigmoid_substitution(self):
        # deviation 5 with k=1, C=3: 1/(1 + e^-2)
        assert mobility_probability(10.0, 15.0, 1.0, 3.0) == pytest.approx(
            1.0 / (1.0 + math.exp(-2.0)))

    @given(st.floats(0, 15), st.floats(0.1, 10))
    def test_probability_open_interval_and_increasing(self, delta, step):
        # domain bounded where float64 can still resolve 1/(1+e^-x) < 1
        p1 = mobility_probability(0.0, delta, 1.5, 3.0)
        p2 = mobility_probability(0.0, delta + step, 1.5, 3.0)
        assert 0.0 < p1 < 1.0
        assert p2 > p1


class TestEnergyUtility:
    def test_bounds(self):
        assert energy_utility(0.0, 8.0) == 1.0
        assert energy_utility(8.0, 8.0) == 0.0

    def test_substitution(self):
        assert energy_utility(2.0, 8.0) == pytest.approx(0.75)

    def test_clamps_above_max(self):
        assert energy_utility(9.0, 8.0) == 0.0


class TestTotalUtility:
    def test_all_zero(self):
        comps = UtilityBreakdown(0.0, 0.0, 0.0, 0.0)
        assert total_utility(comps, W, 0.5) == 0.0

    def test_energy_term_vanishes_at_full_buffer(self):
        lo = total_utility(UtilityBreakdown(1.0, 0.0, 0.0, 0.0), W, 1.0)
        hi = total_utility(UtilityBreakdown(1.0, 0.0, 0.0, 1.0), W, 1.0)
        assert lo == hi

    def test_reference_substitution(self):
        comps = UtilityBreakdown(modality=4.0, screen=1.0, localization=1.0,
                                 energy=0.0)
        assert total_utility(comps, W, 1.0) == pytest.approx(3.73)


class TestEunoSelect:
    def test_sleep_guard_dominates(self):
        obs = _observation(f_r=0.1)
        assert euno_select(obs, W, 8.0).mode is Mode.SLEEP

    def test_sleep_guard_property_over_random_observations(self):
        rng = random.Random(1234)
        for _ in range(10_000):
            f_r = rng.uniform(0.0, 0.199999)
            current = rng.choice([Modality.OWC, Modality.BLE])
            actions = enumerate_actions(current)
            obs = _observation(
                f_r=f_r, current=current,
                energies={a: rng.uniform(0.0, 8.0) for a in actions},
                rates={a: rng.uniform(0.0, 400.0) for a in actions},
                p_int=rng.random(),
                sample=rng.uniform(0, 80), baseline=rng.uniform(0, 80))
            assert euno_select(obs, W, 8.0).mode is Mode.SLEEP

    def test_abundant_energy_picks_performance_on_best_link(self):
        # strong optical SNR, screen demanded, mobility detected
        obs = _observation(f_r=1.0, p_int=0.9,
                           snr={Modality.OWC: 80.0, Modality.BLE: 30.0},
                           sample=80.0, baseline=50.0)
        assert euno_select(obs, W, 8.0) == P_OWC

    def test_exact_tie_prefers_current_modality(self):
        actions = enumerate_actions(Modality.BLE)
        energies = {a: 0.2 for a in actions}
        rates = {a: 300.0 if a.mode is Mode.PERFORMANCE else 60.0 for a in actions}
        rates[Action(Mode.SLEEP, Modality.BLE)] = 0.0
        weights = UtilityWeights(p_ch=0.0)  # remove the switch penalty
        obs = _observation(f_r=0.9, current=Modality.BLE, energies=energies,
                           rates=rates)
        # (P, OWC) and (P, BLE) now score identically; the tie keeps BLE.
        assert euno_select(obs, weights, 8.0) == P_BLE

    def test_scaling_subutilities_preserves_argmax(self):
        rng = random.Random(7)
        for _ in range(200):
            comps = {a: UtilityBreakdown(rng.uniform(-0.1, 4), rng.random(),
                                         rng.random(), rng.random())
                     for a in (P_OWC, P_BLE, C_OWC, C_BLE)}
            f_r = rng.uniform(0.2, 1.0)
            scale = rng.uniform(0.01, 100.0)

            def pick(factor):
                scored = {
                    a: total_utility(UtilityBreakdown(
                        c.modality * factor, c.screen * factor,
                        c.localization * factor, c.energy * factor), W, f_r)
                    for a, c in comps.items()}
                return max(scored, key=lambda a: (scored[a], a.mode.value,
                                                  a.modality.value))
            assert pick(1.0) == pick(scale)

    def test_empty_action_set_rejected(self):
        with pytest.raises(ValueError):
            euno_select(_observation(), W, 8.0, action_set=[])


class TestEtnoSelect:
    def test_above_both_thresholds(self):
        action = etno_select(0.5, 0.2, 0.4, Modality.BLE, Modality.OWC)
        assert action == P_OWC  # performance on the best-SNR link

    def test_between_thresholds_conserves_on_radio(self):
        action = etno_select(0.3, 0.2, 0.4, Modality.OWC, Modality.OWC)
        assert action == C_BLE

    def test_below_sleep_threshold(self):
        action = etno_select(0.15, 0.2, 0.4, Modality.OWC, Modality.OWC)
        assert action.mode is Mode.SLEEP

    def test_owc_only_variant_pins_modality(self):
        assert etno_select(0.5, 0.2, 0.4, Modality.BLE, Modality.BLE,
                           owc_only=True).modality is Modality.OWC
        assert etno_select(0.3, 0.2, 0.4, Modality.OWC, Modality.OWC,
                           owc_only=True) == C_OWC

    def test_threshold_ordering_enforced(self):
        with pytest.raises(ValueError):
            etno_select(0.5, 0.4, 0.2, Modality.OWC, Modality.OWC)


class TestInteractionModels:
    def test_constant(self):
        model = ConstantInteraction(0.7)
        assert interaction_probability(model, 0.0) == 0.7
        assert interaction_probability(model, 1e6) == 0.7

    def test_schedule(self):
        model = ScheduleInteraction([(0.0, 0.9), (100.0, 0.1)])
        assert interaction_probability(model, 50.0) == 0.9
        assert interaction_probability(model, 150.0) == 0.1

    def test_ewma_decays_toward_zero(self):
        model = EwmaInteraction(lam=0.5, initial=1.0)
        for _ in range(30):
            model.observe(False)
        assert interaction_probability(model, 0.0) < 1e-6

    def test_ewma_rises_with_commands(self):
        model = EwmaInteraction(lam=0.5)
        for _ in range(10):
            model.observe(True)
        assert interaction_probability(model, 0.0) > 0.99


class TestWeightValidation:
    def test_static_weights_must_sum_to_one(self):
        with pytest.raises(ValueError) as err:
            UtilityWeights(p_m=0.5, p_s=0.3, p_l=0.3)
        assert "sum to 1" in str(err.value)

    def test_lambda_and_slope_domains(self):
        with pytest.raises(ValueError):
            UtilityWeights(ewma_lambda=0.0)
        with pytest.raises(ValueError):
            UtilityWeights(sigmoid_k=0.0)
        with pytest.raises(ValueError):
            UtilityWeights(f_c=1.0)


def test_action_set_enumeration_is_fixed_size():
    actions = enumerate_actions(Modality.BLE)
    assert len(actions) == 5
    sleeps = [a for a in actions if a.mode is Mode.SLEEP]
    assert sleeps == [Action(Mode.SLEEP, Modality.BLE)]
