"""Catalog construction, synthetic generation, and CSV ingestion."""
import numpy as np
import pytest

from leadtime_rl.catalog import (
    CATALOG_HEADER,
    Catalog,
    CatalogError,
    FileDemand,
    Product,
    SyntheticDemand,
    load_catalog,
    load_demand_series,
    make_synthetic_catalog,
)
from leadtime_rl.store import default_constraints


class TestProductInvariants:
    def test_valid(self):
        p = Product(id=0, unit_volume=1.0, unit_weight=0.5, shelf_life=3, demand_mean=4.0)
        assert p.shelf_life == 3

    @pytest.mark.parametrize("kwargs", [
        dict(unit_volume=0.0),
        dict(unit_weight=-1.0),
        dict(shelf_life=0),
        dict(demand_mean=0.0),
        dict(demand_season_amp=1.0),
        dict(demand_season_amp=-0.1),
        dict(demand_noise_sd=-0.5),
    ])
    def test_invalid(self, kwargs):
        base = dict(id=0, unit_volume=1.0, unit_weight=0.5, shelf_life=3,
                    demand_mean=4.0)
        base.update(kwargs)
        with pytest.raises(CatalogError):
            Product(**base)

    def test_empty_catalog(self):
        with pytest.raises(CatalogError, match="empty catalog"):
            Catalog([])


class TestSyntheticCatalog:
    def test_deterministic(self):
        assert make_synthetic_catalog(1, 123) == make_synthetic_catalog(1, 123)
        a = make_synthetic_catalog(10, 5)
        b = make_synthetic_catalog(10, 5)
        assert a.products == b.products

    def test_sizes(self):
        assert make_synthetic_catalog(220, 0).n == 220
        assert make_synthetic_catalog(100, 0).n == 100

    def test_zero_products_rejected(self):
        with pytest.raises(CatalogError):
            make_synthetic_catalog(0, 0)

    def test_parameter_ranges(self):
        cat = make_synthetic_catalog(300, 11)
        assert ((cat.means >= 2.0) & (cat.means <= 20.0)).all()
        assert ((cat.amps >= 0.0) & (cat.amps <= 0.5)).all()
        assert np.isin(cat.periods, (10, 20, 30)).all()
        assert (cat.noise_sds <= 0.3 * cat.means).all()
        assert ((cat.volumes >= 0.2) & (cat.volumes <= 2.0)).all()
        assert ((cat.weights >= 0.1) & (cat.weights <= 1.0)).all()
        assert ((cat.shelf_lives >= 3) & (cat.shelf_lives <= 15)).all()

    def test_default_constraints_bind(self):
        cat = make_synthetic_catalog(50, 3)
        cons = default_constraints(cat)
        assert cons.max_volume == pytest.approx(0.7 * cat.volumes @ cat.means)
        assert cons.max_weight == pytest.approx(0.7 * cat.weights @ cat.means)


GOOD_CSV = """id,unit_volume,unit_weight,shelf_life,demand_mean,season_amp,season_period,phase,noise_sd
0,1.0,0.5,5,4.0,0.2,20,0.0,0.5
1,0.4,0.2,7,10.0,0.0,10,1.5,0.0
2,2.0,1.0,3,2.5,0.4,30,3.0,0.1
"""


class TestLoadCatalog:
    def test_well_formed(self, tmp_path):
        path = tmp_path / "catalog.csv"
        path.write_text(GOOD_CSV)
        cat = load_catalog(path)
        assert cat.n == 3
        assert cat.products[1].demand_mean == 10.0
        assert cat.products[2].shelf_life == 3

    def test_zero_shelf_life_names_row(self, tmp_path):
        path = tmp_path / "catalog.csv"
        path.write_text(GOOD_CSV.replace("1,0.4,0.2,7", "1,0.4,0.2,0"))
        with pytest.raises(CatalogError, match="row 2"):
            load_catalog(path)

    def test_empty_file(self, tmp_path):
        path = tmp_path / "catalog.csv"
        path.write_text("")
        with pytest.raises(CatalogError, match="empty catalog"):
            load_catalog(path)

    def test_header_only(self, tmp_path):
        path = tmp_path / "catalog.csv"
        path.write_text(",".join(CATALOG_HEADER) + "\n")
        with pytest.raises(CatalogError, match="empty catalog"):
            load_catalog(path)

    def test_bad_header(self, tmp_path):
        path = tmp_path / "catalog.csv"
        path.write_text("id,volume\n0,1.0\n")
        with pytest.raises(CatalogError, match="header"):
            load_catalog(path)

    def test_unparseable_cell_names_row_and_column(self, tmp_path):
        path = tmp_path / "catalog.csv"
        path.write_text(GOOD_CSV.replace("0.4", "abc"))
        with pytest.raises(CatalogError, match="row 2, column unit_volume"):
            load_catalog(path)

    def test_wrong_field_count(self, tmp_path):
        path = tmp_path / "catalog.csv"
        path.write_text(",".join(CATALOG_HEADER) + "\n0,1.0,0.5\n")
        with pytest.raises(CatalogError, match="row 1"):
            load_catalog(path)


class TestDemandSeries:
    def test_load(self, tmp_path):
        path = tmp_path / "demand.csv"
        path.write_text("t,0,1\n0,3,4\n1,5,6\n")
        m = load_demand_series(path)
        assert m.shape == (2, 2)
        assert m[1, 1] == 6

    def test_ids_checked_against_catalog(self, tmp_path):
        cat_path = tmp_path / "catalog.csv"
        cat_path.write_text(GOOD_CSV)
        cat = load_catalog(cat_path)
        path = tmp_path / "demand.csv"
        path.write_text("t,0,1\n0,3,4\n")
        with pytest.raises(CatalogError, match="do not match"):
            load_demand_series(path, cat)

    def test_negative_demand_rejected(self, tmp_path):
        path = tmp_path / "demand.csv"
        path.write_text("t,0\n0,-3\n")
        with pytest.raises(CatalogError, match="row 1, column 0"):
            load_demand_series(path)

    def test_empty(self, tmp_path):
        path = tmp_path / "demand.csv"
        path.write_text("t,0\n")
        with pytest.raises(CatalogError, match="empty demand series"):
            load_demand_series(path)


class TestDemandSources:
    def test_synthetic_matches_module_functions(self):
        cat = make_synthetic_catalog(4, 9)
        src = SyntheticDemand(cat)
        r1, r2 = np.random.default_rng(3), np.random.default_rng(3)
        from leadtime_rl.catalog import forecast, generate_demand
        assert (src.demand(2, r1) == generate_demand(cat, 2, r2)).all()
        assert (src.forecast(2) == forecast(cat, 2)).all()
        assert (src.typical() == cat.means).all()

    def test_file_demand_replays_rows(self):
        m = np.array([[3, 4], [5, 6], [7, 8]])
        src = FileDemand(m)
        rng = np.random.default_rng(0)
        assert (src.demand(0, rng) == [3, 4]).all()
        assert (src.demand(4, rng) == [5, 6]).all()  # wraps
        assert (src.forecast(1) == [5.0, 6.0]).all()

    def test_file_demand_moving_average(self):
        m = np.array([[2], [4], [6], [8]])
        src = FileDemand(m, forecast_mode="moving_average", ma_window=2)
        assert src.forecast(0)[0] == pytest.approx(5.0)   # column mean seeds t=0
        assert src.forecast(2)[0] == pytest.approx(3.0)   # mean of rows 0..1
        assert src.typical()[0] == pytest.approx(5.0)

    def test_file_demand_validation(self):
        with pytest.raises(CatalogError):
            FileDemand(np.array([[-1]]))
        with pytest.raises(ValueError):
            FileDemand(np.array([[1]]), forecast_mode="nope")
