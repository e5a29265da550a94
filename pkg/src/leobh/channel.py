"""Downlink link budget: antenna pattern, channel gains, SINR, capacity.

Full frequency reuse: every active beam occupies the whole bandwidth, so a
served user sees intra-satellite interference from its satellite's other
beams and inter-satellite interference from every other satellite's active
beams.  All arithmetic is linear; dB only at the edges.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import CellGrid, CoverageMap, off_axis_angle_deg, slant_range_km
from .scenario import Scenario
from .units import BOLTZMANN_J_K

SIDELOBE_FLOOR_DB = 30.0


def tx_gain_dbi(theta_deg, scenario: Scenario):
    """Parabolic main-lobe pattern with a flat side-lobe floor.

    G(theta) = G_max - 12 (theta / theta_3dB)^2 dBi, floored at G_max - 30 dB.
    theta_3dB is the full 3 dB beamwidth, so the pattern is 3 dB down at half
    the beamwidth.
    """
    theta = np.asarray(theta_deg, dtype=float)
    if np.any(theta < 0):
        raise ValueError("off-axis angle must be >= 0")
    rolloff = 12.0 * (theta / scenario.beamwidth_3db_deg) ** 2
    g = scenario.g_tx_max_dbi - np.minimum(rolloff, SIDELOBE_FLOOR_DB)
    return g if g.ndim else float(g)


def channel_power_gain(sat_pos, boresight_cell: int, victim_cell: int,
                       grid: CellGrid, scenario: Scenario,
                       tx_gain_fn=None) -> float:
    """|h|^2 (linear): tx gain at the off-axis angle, rx gain, free-space loss.

    `tx_gain_fn(theta_deg, scenario) -> dBi` swaps in a different antenna
    taper; the parabolic pattern above is the default.
    """
    gain_fn = tx_gain_fn or tx_gain_dbi
    theta = off_axis_angle_deg(sat_pos, boresight_cell, victim_cell, grid)
    d_m = slant_range_km(sat_pos, victim_cell, grid) * 1e3
    g_tx = 10.0 ** (gain_fn(theta, scenario) / 10.0)
    g_rx = 10.0 ** (scenario.g_rx_dbi / 10.0)
    return g_tx * g_rx * (scenario.wavelength_m / (4.0 * np.pi * d_m)) ** 2


def noise_power_w(scenario: Scenario) -> float:
    """Thermal noise power k_B * T_rx * B."""
    return BOLTZMANN_J_K * scenario.t_rx_k * scenario.bandwidth_hz


@dataclass
class SlotRadioState:
    """One slot's radio picture: who illuminates what, with what power.

    `boresight`: (N, K) global cell ids served by each satellite's beams, -1
    for idle beams.  `powers_w`: (N, K).  `gain`: (N, K, V) linear power gain
    from each (satellite, beam) to every victim cell, evaluated with that
    beam's own boresight; zero rows for idle beams.
    """

    boresight: np.ndarray
    powers_w: np.ndarray
    gain: np.ndarray
    noise_w: float

    def serving_beam(self, sat: int, cell: int) -> int:
        hits = np.nonzero(self.boresight[sat] == cell)[0]
        return int(hits[0]) if len(hits) else -1


def build_slot_radio_state(scenario: Scenario, grid: CellGrid, coverage: CoverageMap,
                           boresight: np.ndarray, powers_w: np.ndarray,
                           tx_gain_fn=None) -> SlotRadioState:
    """Evaluate all beam-to-cell gains for one slot.

    boresight: (N, K) global cell ids (-1 = beam off); powers_w: (N, K).
    `tx_gain_fn` replaces the default antenna taper (see channel_power_gain).
    """
    gain_fn = tx_gain_fn or tx_gain_dbi
    n_sats, n_beams = boresight.shape
    n_cells = grid.n_cells
    gain = np.zeros((n_sats, n_beams, n_cells))
    cell_xy = grid.centers
    g_rx = 10.0 ** (scenario.g_rx_dbi / 10.0)
    lam = scenario.wavelength_m

    for n in range(n_sats):
        sat = coverage.sat_positions[n]
        to_cell = np.column_stack([cell_xy - sat[:2], np.full(n_cells, -sat[2])])
        rng_m = np.linalg.norm(to_cell, axis=1) * 1e3
        for k in range(n_beams):
            b = int(boresight[n, k])
            if b < 0:
                continue
            vb = to_cell[b]
            cosang = (to_cell @ vb) / (np.linalg.norm(to_cell, axis=1) * np.linalg.norm(vb))
            theta = np.degrees(np.arccos(np.clip(cosang, -1.0, 1.0)))
            g_tx = 10.0 ** (gain_fn(theta, scenario) / 10.0)
            gain[n, k] = g_tx * g_rx * (lam / (4.0 * np.pi * rng_m)) ** 2
    return SlotRadioState(boresight=boresight, powers_w=powers_w, gain=gain,
                          noise_w=noise_power_w(scenario))


def sinr(state: SlotRadioState, sat: int, beam: int, cell: int) -> float:
    """SINR at the user in `cell` served by (sat, beam)."""
    if state.boresight[sat, beam] != cell:
        raise ValueError(f"beam {beam} of satellite {sat} is not serving cell {cell}")
    signal = state.powers_w[sat, beam] * state.gain[sat, beam, cell]
    active = state.boresight >= 0
    rx = np.where(active, state.powers_w, 0.0) * state.gain[:, :, cell]
    interference = float(rx.sum()) - float(rx[sat, beam])
    return float(signal / (state.noise_w + interference))


def capacity_bps(state: SlotRadioState, scenario: Scenario, sat: int, cell: int) -> float:
    """Shannon capacity of `cell` as served by `sat`; 0 when not illuminated."""
    beam = state.serving_beam(sat, cell)
    if beam < 0:
        return 0.0
    return scenario.bandwidth_hz * float(np.log2(1.0 + sinr(state, sat, beam, cell)))


SINR_CSV_COLUMNS = ["slot", "sat", "beam", "cell", "sinr_db"]


def sinr_csv_rows(state: SlotRadioState, slot: int) -> list[dict]:
    """Debug rows: per active beam, the served cell's SINR in dB."""
    rows = []
    n_sats, n_beams = state.boresight.shape
    for n in range(n_sats):
        for k in range(n_beams):
            cell = int(state.boresight[n, k])
            if cell < 0:
                continue
            rows.append({"slot": slot, "sat": n, "beam": k, "cell": cell,
                         "sinr_db": repr(float(
                             10.0 * np.log10(sinr(state, n, k, cell))))})
    return rows


def write_sinr_csv(path, rows: list[dict]) -> None:
    import csv

    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=SINR_CSV_COLUMNS)
        w.writeheader()
        w.writerows(rows)
