"""Time-bin entanglement: interferometer action, visibility, fringe scans."""

import numpy as np
import pytest

from crowsim.detectors import DetectorParams
from crowsim.errors import InvalidVisibilityError, NonIntegerShiftError
from crowsim.source import SourceParams, entangle_preset
from crowsim.timebin import (
    InterferometerParams,
    TimeBinState,
    accidental_weight,
    apply_mzi,
    coincidence_probability,
    expected_coincidences_per_start,
    ideal_visibility,
    simulate_fringe_scan,
    state_visibility,
    transformed_state,
)

MZI = InterferometerParams(arm_delay=1e-9)  # two slots at 0.5 ns


def brute_force_diagonal(m: int, phi_s: float, phi_i: float, shift: int = 2) -> np.ndarray:
    """Hand expansion of the transformed state's same-slot amplitudes.

    Walks every emission slot k and the four path combinations explicitly;
    independent of the array-padding implementation under test.
    """
    size = m + shift
    table = np.zeros((size, size), dtype=complex)
    for k in range(m):
        amp = 1 / np.sqrt(m)
        for s_long in (False, True):
            for i_long in (False, True):
                a = k + (shift if s_long else 0)
                b = k + (shift if i_long else 0)
                phase = (phi_s if s_long else 0.0) + (phi_i if i_long else 0.0)
                table[a, b] += amp * 0.25 * np.exp(1j * phase)
    return np.diag(table)


class TestApplyMzi:
    def test_single_slot_splits_equally(self):
        amps = np.zeros(5, dtype=complex)
        amps[1] = 1.0
        out = apply_mzi(amps, MZI, "signal", slot_interval=0.5e-9, phase=0.0)
        assert out.size == 7
        assert out[1] == pytest.approx(0.5)
        assert out[3] == pytest.approx(0.5)
        assert np.count_nonzero(out) == 2

    def test_opposite_phases_cancel_interior_diagonal(self):
        state = TimeBinState(slot_count=8)
        table = transformed_state(state, MZI, MZI, phi_s=0.3, phi_i=np.pi - 0.3)
        diag = np.diag(table)
        # interior slots: both short-short and long-long paths present
        assert np.allclose(np.abs(diag[2:8]), 0.0, atol=1e-15)
        # boundary slots survive
        assert np.abs(diag[0]) > 0 and np.abs(diag[-1]) > 0

    @pytest.mark.parametrize("m", [2, 4, 8, 16])
    def test_matches_hand_expansion(self, m):
        rng = np.random.default_rng(m)
        phi_s, phi_i = rng.uniform(0, 2 * np.pi, 2)
        state = TimeBinState(slot_count=m)
        table = transformed_state(state, MZI, MZI, phi_s=phi_s, phi_i=phi_i)
        expected = brute_force_diagonal(m, phi_s, phi_i)
        assert np.max(np.abs(np.diag(table) - expected)) < 1e-12

    def test_m4_boundary_terms(self):
        # At M = 4 the first and last diagonal entries carry exactly one path.
        table = transformed_state(TimeBinState(slot_count=4), MZI, MZI, phi_s=0.7, phi_i=1.1)
        diag = np.diag(table)
        assert diag[0] == pytest.approx(0.25 / 2)              # |1>|1>: short-short
        assert diag[5] == pytest.approx(0.25 / 2 * np.exp(1.8j))  # |M+2>|M+2>: long-long
        interior = 0.25 / 2 * (1 + np.exp(1.8j))
        assert diag[2] == pytest.approx(interior)
        assert diag[3] == pytest.approx(interior)

    def test_norm_never_exceeds_input(self):
        rng = np.random.default_rng(7)
        amps = rng.normal(size=12) + 1j * rng.normal(size=12)
        amps /= np.linalg.norm(amps)
        out = apply_mzi(amps, MZI, "signal", slot_interval=0.5e-9)
        assert np.linalg.norm(out) <= 1.0 + 1e-12

    def test_non_integer_shift_rejected(self):
        bad = InterferometerParams(arm_delay=0.75e-9)
        with pytest.raises(NonIntegerShiftError):
            apply_mzi(np.ones(4, dtype=complex), bad, "signal", slot_interval=0.5e-9)


class TestCoincidenceProbability:
    def test_maximum(self):
        assert coincidence_probability(0.0, 0.0, 1.0) == pytest.approx(2.0)

    def test_null(self):
        assert coincidence_probability(np.pi, 0.0, 1.0) == pytest.approx(0.0, abs=1e-15)

    def test_paper_visibility_at_pi(self):
        assert coincidence_probability(np.pi, 0.0, 0.77) == pytest.approx(0.23)

    def test_invalid_visibility(self):
        with pytest.raises(InvalidVisibilityError):
            coincidence_probability(0.0, 0.0, 1.2)

    def test_period_mean_and_extrema(self):
        v = 0.6
        phis = np.linspace(0, 2 * np.pi, 10_000, endpoint=False)
        p = coincidence_probability(phis, 0.0, v)
        assert np.mean(p) == pytest.approx(1.0, abs=1e-12)
        assert p.max() == pytest.approx(1 + v, abs=1e-6)
        assert p.min() == pytest.approx(1 - v, abs=1e-6)
        assert coincidence_probability(1.23, 0.0, v) == pytest.approx(
            coincidence_probability(1.23 + 2 * np.pi, 0.0, v), rel=1e-12
        )


class TestIdealVisibility:
    def test_large_m_noiseless(self):
        state = TimeBinState(slot_count=20_000)
        v = state_visibility(state)
        assert 1 - v == pytest.approx(1e-4, rel=1e-9)

    def test_m2_from_four_term_expansion(self):
        # Only boundary terms exist: modulate the phase and measure contrast
        # of the exact amplitude table.
        rates = []
        for delta in (0.0, np.pi):
            diag = brute_force_diagonal(2, delta, 0.0)
            rates.append(float(np.sum(np.abs(diag) ** 2)))
        v_exact = (rates[0] - rates[1]) / (rates[0] + rates[1])
        assert v_exact == pytest.approx(0.0, abs=1e-15)
        assert state_visibility(TimeBinState(slot_count=2)) == pytest.approx(v_exact, abs=1e-15)
        assert state_visibility(TimeBinState(slot_count=2)) < 1.0

    @pytest.mark.parametrize("m", [4, 6, 10, 16])
    def test_state_visibility_matches_amplitude_contrast(self, m):
        rates = []
        for delta in (0.0, np.pi):
            diag = brute_force_diagonal(m, delta, 0.0)
            rates.append(float(np.sum(np.abs(diag) ** 2)))
        v_exact = (rates[0] - rates[1]) / (rates[0] + rates[1])
        assert state_visibility(TimeBinState(slot_count=m)) == pytest.approx(v_exact, rel=1e-12)

    def test_multi_pair_dilution_closed_form(self):
        state = TimeBinState(slot_count=20_000)
        source = entangle_preset()  # mu = 0.01, thermal, no noise
        v = ideal_visibility(state, source)
        # A = 2 mu^2 + mu^2 for thermal noiseless: V = V_M / (1 + 3 mu)
        expected = state_visibility(state) / (1 + 3 * 0.01)
        assert v == pytest.approx(expected, rel=1e-12)

    def test_calibrated_scenario_hits_paper_window(self):
        state = TimeBinState(slot_count=20_000)
        v = 0.814 * ideal_visibility(state, entangle_preset())
        assert 0.77 - 0.05 <= v <= 0.81 + 0.05


def photon_level_fringe_oracle(
    source: SourceParams, delta: float, n_windows: int, m: int, rng
) -> tuple[int, int]:
    """Slot-level Monte Carlo of same-slot coincidences, built independently.

    Per coherence window, every slot's pair number is drawn from the thermal
    law; each pair's joint interferometer outcome comes from the exclusive
    distribution {same-slot, offset +-s, signal-only, idler-only, none} whose
    same-slot weight carries the (1 + V_M cos delta)/8 interference and whose
    single-photon marginals are the 1/2 interferometer transmission.  Noise
    photons route independently.  Unit detection efficiency; returns
    (same-slot coincidences, idler-channel starts).
    """
    shift = 2
    v_m = (m - shift) / m
    p_same = (1 + v_m * np.cos(delta)) / 8
    p_off = 1 / 16
    p_s_only = 0.5 - p_same - 2 * p_off
    p_i_only = p_s_only
    edges = np.cumsum([p_same, p_off, p_off, p_s_only, p_i_only])
    coincidences = 0
    starts = 0
    p_thermal = 1 / (1 + source.mean_pair)
    for _ in range(n_windows):
        slot_s: list[int] = []
        slot_i: list[int] = []
        pairs_per_slot = rng.geometric(p_thermal, size=m) - 1
        for k in np.flatnonzero(pairs_per_slot):
            for _ in range(pairs_per_slot[k]):
                r = rng.random()
                branch = int(np.searchsorted(edges, r))
                if branch == 0:  # same-slot coincidence
                    j = k + shift * (rng.random() < 0.5)
                    slot_s.append(j)
                    slot_i.append(j)
                elif branch == 1:  # signal long, idler short
                    slot_s.append(k + shift)
                    slot_i.append(k)
                elif branch == 2:  # signal short, idler long
                    slot_s.append(k)
                    slot_i.append(k + shift)
                elif branch == 3:
                    slot_s.append(k + shift * (rng.random() < 0.5))
                elif branch == 4:
                    slot_i.append(k + shift * (rng.random() < 0.5))
        for arm_mean, bucket in ((source.mean_noise_signal, slot_s),
                                 (source.mean_noise_idler, slot_i)):
            for _ in range(rng.poisson(arm_mean * m)):
                if rng.random() < 0.5:  # transmitted
                    bucket.append(int(rng.integers(0, m)) + shift * (rng.random() < 0.5))
        starts += len(slot_i)
        arr_s = np.asarray(slot_s)
        for b in slot_i:
            coincidences += int(np.sum(arr_s == b))
    return coincidences, starts


class TestFringeScan:
    @staticmethod
    def scan(v_extra, seed, shots=500_000, settings=None):
        state = TimeBinState(slot_count=20_000)
        source = entangle_preset()
        det_s = DetectorParams(efficiency=0.14)
        det_i = DetectorParams(efficiency=0.11)
        mzi = InterferometerParams()
        temps = settings if settings is not None else np.linspace(22.0, 22.4, 10)
        return simulate_fringe_scan(
            temps, 22.74, shots, state, source, det_s, det_i, mzi, mzi,
            rng=np.random.default_rng(seed), v_extra=v_extra,
        )

    def test_zero_visibility_injection(self):
        data = self.scan(v_extra=0.0, seed=11)
        counts = data.coincidences.astype(float)
        contrast = (counts.max() - counts.min()) / (counts.max() + counts.min())
        assert np.all(data.analytic_probability == 1.0)
        # Poisson scatter only: contrast ~ sqrt(1/N) scale
        assert contrast < 4 / np.sqrt(counts.mean())

    def test_counts_track_analytic_modulation(self):
        data = self.scan(v_extra=0.814, seed=12)
        mean = data.coincidences.sum() / data.analytic_probability.sum()
        for count, rel in zip(data.coincidences, data.analytic_probability):
            expected = mean * rel
            assert abs(count - expected) < 4 * np.sqrt(expected)

    def test_phase_offset_difference_tracks_idler_temperature(self):
        from crowsim.analysis import fit_fringe

        state = TimeBinState(slot_count=20_000)
        source = entangle_preset()
        det_s, det_i = DetectorParams(efficiency=0.14), DetectorParams(efficiency=0.11)
        mzi = InterferometerParams()
        temps = np.linspace(22.0, 22.4, 10)
        fits = []
        for idler_temp, seed in ((22.74, 1), (22.94, 2)):
            data = simulate_fringe_scan(
                temps, idler_temp, 500_000, state, source, det_s, det_i, mzi, mzi,
                rng=np.random.default_rng(seed), v_extra=0.814,
            )
            fits.append(fit_fringe(data, pin_period=True))
        delta = (fits[1].phase_offset - fits[0].phase_offset) % (2 * np.pi)
        expected = (mzi.temperature_coefficient * 0.20) % (2 * np.pi)
        assert delta == pytest.approx(expected, abs=0.05)

    def test_visibility_formula_against_photon_level_oracle(self):
        # Independent slot-level simulation of the same model assumptions:
        # fringe contrast and rate must match the closed forms that the
        # rate-level scan uses.
        source = SourceParams(
            mean_pair=0.004, mean_noise_signal=0.002, mean_noise_idler=0.001,
            repetition_rate=2e9, pair_statistics="thermal",
        )
        m = 40
        rng = np.random.default_rng(123)
        counts = {}
        for delta in (0.0, np.pi):
            coinc = 0
            starts = 0
            c, s = photon_level_fringe_oracle(source, delta, 60_000, m, rng)
            coinc += c
            starts += s
            counts[delta] = (coinc, starts)
        c_max, c_min = counts[0.0][0], counts[np.pi][0]
        v_mc = (c_max - c_min) / (c_max + c_min)
        state = TimeBinState(slot_count=m)
        v_model = ideal_visibility(state, source)
        err = np.sqrt(c_max + c_min) / (c_max + c_min) * 2
        assert v_mc == pytest.approx(v_model, abs=3 * err + 0.01)
        # per-start rate at unit efficiency
        per_start, _ = expected_coincidences_per_start(
            state, source, DetectorParams(efficiency=1.0), DetectorParams(efficiency=1.0),
        )
        mean_rate_mc = (c_max + c_min) / (counts[0.0][1] + counts[np.pi][1])
        assert mean_rate_mc == pytest.approx(per_start, rel=0.1)

    def test_accidental_weight_formula(self):
        src = SourceParams(mean_pair=0.01, repetition_rate=2e9)
        # thermal noiseless: E[n(n-1)] = 2 mu^2, offset term mu^2
        assert accidental_weight(src) == pytest.approx(3 * 0.01**2, rel=1e-12)

    def test_shots_must_be_positive(self):
        with pytest.raises(ValueError):
            self.scan(v_extra=0.8, seed=1, shots=0)
