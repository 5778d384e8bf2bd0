import math

import numpy as np
import pytest

import cavity


def test_commands_and_error_codes():
    assert "cube-bench" in cavity.command_names()
    assert cavity.exit_code_of("range-error") == 2
    assert cavity.exit_code_of("inverted-element") == 3
    assert cavity.exit_code_of("io-failure") == 5


def test_analytic_cube_spectrum_starts_with_triple_two():
    exact = cavity.analytic_cube_spectrum(tau=1.0, m=12)
    assert exact[0].value == pytest.approx(2.0)
    assert exact[0].tag == "maxwell"
    assert sum(e.multiplicity for e in exact if abs(e.value - 2.0) < 1e-12) == 3
    gradients = [e for e in exact if e.tag == "gradient"]
    assert gradients[0].value == pytest.approx(3.0)


def test_coarse_cube_benchmark():
    b = cavity.cube_benchmark(tau=1.0, n_mesh=4, order=2, m=12)
    assert b.rows[0].exact == pytest.approx(2.0)
    assert b.passes(2, 0.02)
    assert len(b.eigenvalues) == 12
    assert b.tags[5] == "gradient"


def test_solve_pencil_matches_dense_oracle():
    rng = np.random.default_rng(5)
    n = 30
    x = rng.standard_normal((n, n))
    a = x @ x.T + n * np.eye(n)
    y = rng.standard_normal((n, n))
    m = y @ y.T + n * np.eye(n)
    lam, vec, res = cavity.solve_pencil(a, m, count=5, shift=0.0, tol=1e-10)
    chol = np.linalg.cholesky(m)
    inv = np.linalg.inv(chol)
    exact = np.linalg.eigvalsh(inv @ a @ inv.T)[:5]
    np.testing.assert_allclose(lam, exact, rtol=1e-8)
    np.testing.assert_allclose(vec.T @ m @ vec, np.eye(5), atol=1e-8)
    assert np.all(res < 1e-8 * (np.abs(lam) + 1))


def test_dini_closed_form_and_divergence():
    r = cavity.dini_integral(cavity.Modulus.power(0.75, 1.0, 1.0), 1e-100, math.inf)
    assert not r["divergent"]
    assert r["value"] == pytest.approx(1 / 0.5 + 1, abs=1e-6)
    assert cavity.dini_integral(cavity.Modulus.log_counterexample(), 1e-12, 0.3)["divergent"]
    law = cavity.scaling_law_check(2.0, cavity.Modulus.lipschitz_capped(1.0), [0.2, 0.1, 0.05])
    assert law["slope"] == pytest.approx(1.0, abs=0.05)


def test_profiles_and_d32():
    g = cavity.Profile.hoelder_power(1.0, 1.75)
    assert g.kind == "hoelder_power"
    assert g.value([0.5, 0.0]) == pytest.approx(0.5**1.75)
    flat = cavity.Profile.constant(0.3)
    assert cavity.d32_seminorm(flat, [0.0, 0.0], 0.1, 0.05) == pytest.approx(0.0, abs=1e-12)


def test_config_round_trip_and_errors():
    c = cavity.parse_config("command: cube-bench\n")
    assert (c.command, c.tau, c.order, c.m) == ("cube-bench", 1.0, 2, 40)
    assert cavity.parse_config(c.emit()) == c
    with pytest.raises(cavity.CavityError, match="range-error.*solver.tau"):
        cavity.parse_config("command: solve\nsolver:\n  tau: -1\n")
    with pytest.raises(cavity.CavityError, match="parse-error"):
        cavity.parse_config("command: frobnicate\n")


def test_run_writes_versioned_csv(tmp_path):
    c = cavity.parse_config("command: check-atlas\natlas: {grid_n: 32}\n")
    result = cavity.run(c, out_dir=str(tmp_path))
    assert result["checks_passed"]
    lines = (tmp_path / "atlas.csv").read_text().splitlines()
    assert lines[0] == "# cavity-atlas 1"
    assert len(lines) == 2 + 1 + 3
    assert (tmp_path / "run.log").exists()
