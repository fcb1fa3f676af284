import math

import numpy as np
import pytest

from tensorvar.data_io import (SeriesSpec, load_dataset, parse_quarter, read_specs, standardize_and_order, transform,
                               write_standardized)
from tensorvar.errors import DataError


class TestTransform:
    def test_codes(self):
        assert transform([1, 3, 6], 2).tolist() == [2, 3]
        assert np.allclose(transform([1, math.e, math.e ** 2], 5), [1, 1], atol=1e-15)
        assert np.allclose(transform(1.03 ** np.arange(10), 6), 0, atol=1e-14)

    def test_errors(self):
        with pytest.raises(DataError):
            transform([1.0, -1.0], 5)
        with pytest.raises(DataError):
            transform([1.0, 2.0], 4)


def specs3():
    return [SeriesSpec("CPI", 6, "fast", 3), SeriesSpec("GDP", 5, "slow", 1), SeriesSpec("FEDFUNDS", 2, "policy", 5)]


def test_ordering_and_scaling(rng):
    Z, scaler, specs = standardize_and_order(rng.normal(3, 2, size=(50, 3)), specs3())
    assert [s.name for s in specs] == ["GDP", "FEDFUNDS", "CPI"]
    assert np.all(np.abs(Z.mean(0)) < 1e-12) and np.allclose(Z.var(0), 1, atol=1e-12)
    again, _, _ = standardize_and_order(Z, specs)
    assert np.allclose(again, Z, atol=1e-12)
    assert scaler.names == ("GDP", "FEDFUNDS", "CPI")


def test_constant_column():
    X = np.ones((10, 3))
    X[:, 0] = np.arange(10)
    X[:, 2] = np.arange(10) ** 2
    with pytest.raises(DataError, match="GDP"):
        standardize_and_order(X, specs3())


def test_spec_validation(tmp_path):
    with pytest.raises(DataError):
        SeriesSpec("X", 1, "slow", 1)
    p = tmp_path / "spec.csv"
    p.write_text("name,tcode,group,category\nA,2,slow,1\nB,5,fast,2\n")
    with pytest.raises(DataError, match="policy"):
        read_specs(p)
    p.write_text("name,tcode,group,category\nA,two,slow,1\n")
    with pytest.raises(DataError, match=":2:"):
        read_specs(p)


def test_quarter_parsing():
    assert parse_quarter("1960-Q1") == (1960, 1) and parse_quarter("2001q4") == (2001, 4)
    with pytest.raises(DataError):
        parse_quarter("1960-05")


def test_load_end_to_end(tmp_path, rng):
    n = 40
    gdp = 100 * np.exp(np.cumsum(rng.normal(0.01, 0.01, n)))
    cpi = 50 * np.exp(np.cumsum(rng.normal(0.005, 0.002, n)))
    ff = 5 + np.cumsum(rng.normal(0, 0.2, n))
    body = [f"{1960 + k // 4}-Q{k % 4 + 1}," + ",".join(repr(float(v[k])) for v in (gdp, cpi, ff)) for k in range(n)]
    lines = ["date,GDP,CPI,FEDFUNDS"] + body
    (tmp_path / "panel.csv").write_text("\n".join(lines) + "\n")
    (tmp_path / "spec.csv").write_text("name,tcode,group,category\nCPI,6,fast,3\nGDP,5,slow,1\nFEDFUNDS,2,policy,5\n")
    Z, dates, scaler, specs = load_dataset(tmp_path / "panel.csv", tmp_path / "spec.csv")
    assert Z.shape == (n - 2, 3) and len(dates) == n - 2 and dates[0] == (1960, 3)
    raw_gdp = np.diff(np.log(gdp))[1:]
    assert np.allclose(scaler.inverse(Z)[:, 0], raw_gdp, rtol=1e-12)
    write_standardized(tmp_path / "out.csv", Z, dates, scaler)
    assert (tmp_path / "out.csv").read_text().splitlines()[0] == "date,GDP,FEDFUNDS,CPI"
    assert (tmp_path / "out.scaler.json").exists()


def test_missing_series(tmp_path):
    (tmp_path / "panel.csv").write_text("date,GDP\n1960-Q1,1\n1960-Q2,2\n1960-Q3,3\n")
    (tmp_path / "spec.csv").write_text("name,tcode,group,category\nGDP,2,slow,1\nFEDFUNDS,2,policy,5\n")
    with pytest.raises(DataError, match="FEDFUNDS"):
        load_dataset(tmp_path / "panel.csv", tmp_path / "spec.csv")
