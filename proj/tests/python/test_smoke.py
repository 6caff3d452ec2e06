import math

import numpy as np
import pytest

import periodic_heat as ph


def test_presets_and_validation():
    c = ph.loop_z()
    assert (c.rank, c.num_vertices, c.num_edges) == (1, 1, 1)
    assert c.validate()["index"] == 1
    bad = ph.loop_z(shift=2)
    assert bad.validate()["index"] == 2
    with pytest.raises(ph.ValidationError):
        ph.effective_metric(bad)
    assert ph.supercell(ph.chain(2), 3).num_vertices == 6


def test_round_trip_and_format_errors(tmp_path):
    c = ph.random_weights(2, 3, 5)
    assert ph.from_text(c.to_text()) == c
    path = tmp_path / "c.complex"
    ph.save(c, str(path))
    assert ph.load(str(path)) == c
    with pytest.raises(ph.FormatError):
        ph.from_text("periodic-complex v1 rank=1\nv 0 mu=1\ne 0 0 w=0 ell=1 s=1\n")
    with pytest.raises(ph.FormatError):
        ph.from_text("periodic-complex v1 rank=1\nv 0 mu=1\ne 0 0 w=1 ell=1\n")


def test_effective_metric_examples():
    assert ph.effective_metric(ph.loop_z())["A"] == [[1.0]]
    assert ph.effective_metric(ph.chain(2))["A"][0][0] == pytest.approx(0.25, abs=1e-14)
    assert ph.effective_metric(ph.parallel_edges([1.0, 2.0]))["A"][0][0] == pytest.approx(3.0, abs=1e-12)
    A = np.array(ph.effective_metric(ph.grid_flat(4))["A"])
    assert np.allclose(A, np.eye(2), atol=1e-10)
    h = ph.harmonic_representative(ph.chain(2, [1.0, 3.0]), 0)
    assert np.allclose(h["tau"], [0.75, 0.25], atol=1e-14)


def test_bands_and_hessians():
    c = ph.chain(2)
    lam = ph.spectrum(c, np.array([0.0]), 2)
    assert np.allclose(lam, [0.0, 4.0], atol=1e-14)
    for gauge in ("phase", "harmonic"):
        assert ph.band_hessian_perturbative(c, gauge)[0, 0] == pytest.approx(0.5, abs=1e-12)
    assert ph.band_hessian_fd(c, 1e-3)[0, 0] == pytest.approx(0.5, abs=1e-6)
    assert ph.heat_trace(c, np.array([0.0]), 1.0) == pytest.approx(1.0 + math.exp(-4.0), abs=1e-14)
    gap = ph.gap_scan(ph.loop_z(), 64, 0.5)
    assert gap["epsilon"] == pytest.approx(2.0 - 2.0 * math.cos(0.5), abs=1e-12)
    with pytest.raises(ph.ParameterError):
        ph.spectrum(c, np.array([0.0]), 2, "sideways")


def test_heat_kernel_against_bessel():
    scipy_special = pytest.importorskip("scipy.special")
    table = ph.heat_kernel_lattice(ph.loop_z(), 5.0, 0, 6)
    exact = [scipy_special.ive(v, 10.0) for v in range(-6, 7)]
    assert np.allclose([row["k"] for row in table["values"]], exact, atol=1e-12, rtol=0)
    assert table["aliasing_bound"] <= 1e-12
    quad = ph.heat_kernel_lattice(ph.chain(2), 2.0, 6, 2)
    oracle = ph.supercell_oracle(ph.chain(2), 2.0, 6, 2)
    assert np.allclose([r["k"] for r in quad["values"]], [r["k"] for r in oracle["values"]], atol=1e-12, rtol=0)
    assert ph.gaussian_value(ph.loop_z(), 25.0, [0]) == pytest.approx(1 / math.sqrt(100 * math.pi))
    with pytest.raises(ph.ParameterError):
        ph.heat_kernel_lattice(ph.loop_z(), 1.0, 8, 4)


def test_walk_and_stable_norm():
    d = ph.sample_displacements(ph.loop_z(), 10.0, 1000, 3)
    assert d.shape == (1000, 1)
    assert np.array_equal(d, ph.sample_displacements(ph.loop_z(), 10.0, 1000, 3))
    rep = ph.covariance_check(ph.chain(2), 50.0, 20000, 1)
    assert rep["pass"]
    est = ph.stable_norm(ph.grid_flat(4), [1, 1], 8)
    assert est["norm"] == 2.0
    assert est["subadditive"]
