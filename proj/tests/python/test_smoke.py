import math

import numpy as np
import pytest

import vibronic


def test_basis_and_operators():
    b = vibronic.build_basis(3, 20)
    assert b.dim == 84
    assert b.index(-1.5, 0) == 0
    assert b.label(b.index(0.5, 3)) == (0.5, 3)
    jz = vibronic.op_matrix("jz", 3, 2)
    assert np.allclose(np.diag(jz).real[::3], [-1.5, -0.5, 0.5, 1.5])
    with pytest.raises(vibronic.ConfigError):
        vibronic.op_matrix("sigma", 1, 1)
    with pytest.raises(ValueError):
        b.index(2.5, 0)


def test_hamiltonian_and_threshold():
    h = vibronic.hamiltonian(0.5, 1, 10)
    assert np.allclose(h, h.conj().T)
    assert vibronic.critical_coupling() == pytest.approx(0.5)
    assert vibronic.critical_coupling(1.0, vibronic.LHCII_EPSILON_RATIO) == pytest.approx(0.4743, abs=1e-4)
    assert vibronic.lambda_at(2.0, 0.5) == pytest.approx(1.0)


def test_entropy_and_negativity_of_a_bell_pair():
    b = vibronic.build_basis(1, 1)
    psi = (b.basis_state(-0.5, 0) + b.basis_state(0.5, 1)) / math.sqrt(2)
    assert vibronic.von_neumann_entropy(psi.reshape(-1, 1), 1, 1) == pytest.approx(1.0)
    rho = np.outer(psi, psi.conj())
    assert vibronic.negativity(rho, 1, 1) == pytest.approx(0.5)
    assert vibronic.log_negativity(rho, 1, 1) == pytest.approx(1.0)
    assert np.allclose(vibronic.partial_trace(rho, 1, 1, "field"), np.eye(2) / 2)


def test_pulse_run():
    run = vibronic.simulate_pulse(1, 0.5, fock_cutoff=20, samples=11, track_negativity=True)
    assert run["probabilities"].shape == (11, 2)
    assert np.allclose(run["probabilities"].sum(axis=1), 1.0)
    assert max(abs(n - 1.0) for n in run["norm"]) < 1e-8
    assert run["times"][-1] == pytest.approx(4.0)
    assert len(run["negativity"]) == 11
    x, p, w = vibronic.wigner(run["initial_field"], 4.5, 21)
    assert w.shape == (21, 21)
    assert w.max() == pytest.approx(2 / math.pi)


def test_sweep_matches_single_runs():
    vs = [0.25, 1.0]
    runs = vibronic.simulate_sweep(1, vs, fock_cutoff=15, samples=5, workers=2)
    single = vibronic.simulate_pulse(1, 1.0, fock_cutoff=15, samples=5)
    assert np.array_equal(runs[1]["probabilities"], single["probabilities"])


def test_lzs_and_window():
    v = vibronic.lzs_peak_velocity(0.5)
    assert v == pytest.approx(math.pi / (8 * math.log(2)))
    assert vibronic.lzs_excited_prob(0.5, v) == pytest.approx(0.5)
    assert vibronic.estimate_vmin([0.01, 0.1, 1, 10], [0, 0, 2, 2]) == pytest.approx(math.sqrt(0.1))
    assert vibronic.estimate_vmin([0.1, 1], [0, 0]) is None


def test_smearing():
    rows = vibronic.smeared_moments(1, 1, alpha_c=1.0, times=[1.0, 2.0], cutoffs=(3, 3, 8), phases=8)
    assert len(rows) == 2
    assert all(r["difference"] < 1e-8 for r in rows)


def test_run_experiment(tmp_path):
    res = vibronic.run_experiment("lzs", {"output_dir": str(tmp_path), "v_count": "5"})
    assert res["files"][0]["name"] == "lzs_curve.csv"
    assert (tmp_path / "lzs_curve.csv").read_text().count("\n") == 6
    assert (tmp_path / "manifest.json").exists()
    with pytest.raises(vibronic.ConfigError):
        vibronic.run_experiment("ramp", {"no_such_key": "1"})
