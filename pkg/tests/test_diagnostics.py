import numpy as np
import pytest

from tensorvar.diagnostics import autocorr, coeff_mse, ess, inefficiency_factor, margin_table, write_csv


def ar1(rng, rho, n):
    e = rng.normal(size=n)
    x = np.empty(n)
    x[0] = e[0] / np.sqrt(1 - rho ** 2)
    for t in range(1, n):
        x[t] = rho * x[t - 1] + e[t]
    return x


def test_iid_acf(rng):
    rho = autocorr(rng.normal(size=100_000), 50)
    assert rho[0] == 1.0
    assert np.all(np.abs(rho[1:]) < 0.02)


def test_ar1_acf(rng):
    assert autocorr(ar1(rng, 0.9, 100_000), 1)[1] == pytest.approx(0.9, abs=0.02)


def test_acf_matches_direct_formula(rng):
    x = rng.normal(size=300)
    xc = x - x.mean()
    direct = [np.sum(xc[k:] * xc[:len(x) - k]) / np.sum(xc * xc) for k in range(10)]
    assert np.allclose(autocorr(x, 9), direct, atol=1e-12)


def test_constant_chain(caplog):
    assert autocorr(np.ones(10), 3).tolist() == [1, 0, 0, 0]
    assert "constant" in caplog.text
    assert inefficiency_factor(np.ones(10)) == 1.0


def test_errors():
    with pytest.raises(ValueError):
        autocorr([1.0, np.nan, 2.0])
    with pytest.raises(ValueError):
        autocorr(np.arange(5.0), 5)


def test_if_iid(rng):
    assert 0.8 <= inefficiency_factor(rng.normal(size=10_000)) <= 1.3


def test_if_ar1(rng):
    assert inefficiency_factor(ar1(rng, 0.9, 100_000)) == pytest.approx(19.0, rel=0.25)


def test_antithetic(rng):
    x = np.tile([1.0, -1.0], 500)
    f = inefficiency_factor(x)
    assert f < 1 and ess(x) > x.size


def test_ess_times_if(rng):
    x = ar1(rng, 0.5, 2000)
    assert ess(x) * inefficiency_factor(x) == pytest.approx(x.size, rel=1e-14)


def test_mse():
    A = np.arange(12.0).reshape(2, 6)
    assert coeff_mse(A, A) == 0.0
    assert coeff_mse(A + 0.1, A) == pytest.approx(0.01)
    with pytest.raises(ValueError):
        coeff_mse(A, A.T)


def test_margin_table_csv(rng, tmp_path):
    rows = margin_table(rng.normal(size=(200, 5, 2)), 2, 1)
    assert len(rows) == 10 and rows[-1]["block"] == "B3"
    path = write_csv(rows, tmp_path / "if.csv")
    assert path.read_text().splitlines()[0] == "block,row,column,if,ess"
