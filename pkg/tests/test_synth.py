import numpy as np
import pytest

from stopaudit import BinSpec, MechanismSpec, StopAuditError, dcmr, generate, series_maxcorr


class TestMechanismSpec:
    def test_invalid_probability(self):
        with pytest.raises(StopAuditError):
            MechanismSpec("mcar", n=10, seed=0, p=1.5)

    def test_invalid_mnar_rate(self):
        with pytest.raises(StopAuditError):
            MechanismSpec("mnar", n=10, seed=0, rates={"black": 2.0})

    def test_unknown_mechanism(self):
        with pytest.raises(StopAuditError):
            MechanismSpec("listwise", n=10, seed=0)

    def test_unmaskable_target(self):
        with pytest.raises(StopAuditError):
            MechanismSpec("mcar", n=10, seed=0, targets=("date",))

    def test_mar_driver_must_stay_observed(self):
        with pytest.raises(StopAuditError):
            MechanismSpec("mar", n=10, seed=0, driver="time", targets=("time",))


class TestGenerate:
    def test_mcar_zero_probability_masks_nothing(self):
        result = generate(MechanismSpec("mcar", n=2000, seed=1, p=0.0))
        assert int(result.table.na_mask.sum()) == 0

    def test_mcar_fraction_concentrates(self):
        result = generate(MechanismSpec("mcar", n=10000, seed=2, p=0.3))
        for column in ("time", "subject_race", "searched", "contraband"):
            fraction = float(result.table.na_column(column).mean())
            assert abs(fraction - 0.3) <= 0.02

    def test_mnar_rates_recovered_against_shadow(self):
        spec = MechanismSpec(
            "mnar", n=20000, seed=3, rates={"black": 0.4, "white": 0.1}
        )
        result = generate(spec)
        truth = result.shadow.values("subject_race")
        masked = result.table.na_column("subject_race")
        for race, target in (("black", 0.4), ("white", 0.1)):
            rows = truth == race
            fraction = float(masked[rows].mean())
            assert abs(fraction - target) <= 0.03

    def test_shadow_is_complete_and_consistent(self):
        result = generate(MechanismSpec("mcar", n=500, seed=4, p=0.5))
        assert int(result.shadow.na_mask.sum()) == 0
        observed = ~result.table.na_column("subject_race")
        assert all(
            result.table.values("subject_race")[observed]
            == result.shadow.values("subject_race")[observed]
        )

    def test_mar_masks_follow_weekly_trend(self):
        spec = MechanismSpec(
            "mar", n=10000, seed=5, weeks=50, slope=4.0, intercept=-2.0
        )
        result = generate(spec)
        dates = result.shadow.values("date")
        masked = result.table.na_column("subject_race")
        midpoint = sorted(dates)[len(dates) // 2]
        early = masked[np.array([d < midpoint for d in dates])]
        late = masked[np.array([d >= midpoint for d in dates])]
        assert late.mean() > early.mean() + 0.2

    def test_date_column_never_masked(self):
        result = generate(MechanismSpec("mcar", n=1000, seed=6, p=0.9))
        assert int(result.table.na_column("date").sum()) == 0

    def test_deterministic_given_seed(self):
        a = generate(MechanismSpec("mcar", n=300, seed=7, p=0.3))
        b = generate(MechanismSpec("mcar", n=300, seed=7, p=0.3))
        assert np.array_equal(a.table.na_mask, b.table.na_mask)
        assert list(a.shadow.values("subject_race")) == list(
            b.shadow.values("subject_race")
        )

    def test_weeks_span_generated_dates(self):
        result = generate(MechanismSpec("mcar", n=10000, seed=8, p=0.1, weeks=50))
        series = dcmr(result.table, "date", BinSpec("week"))
        assert len(series.points) == 50


class TestMechanismDiscrimination:
    def test_mcar_series_scores_low(self):
        result = generate(MechanismSpec("mcar", n=10000, seed=11, p=0.3, weeks=50))
        series = dcmr(result.table, "date", BinSpec("week"))
        assert series_maxcorr(series).value <= 0.3

    def test_strong_mar_series_scores_high(self):
        result = generate(
            MechanismSpec("mar", n=10000, seed=11, weeks=50, slope=4.0, intercept=-2.0)
        )
        series = dcmr(result.table, "date", BinSpec("week"))
        assert series_maxcorr(series).value >= 0.8
