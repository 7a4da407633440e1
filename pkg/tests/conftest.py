from pathlib import Path

import pytest

from stopaudit import ColumnSchema, load_table

DATA_DIR = Path(__file__).parent / "data"

TOY_SCHEMA = [
    ColumnSchema("date", "date", "conditioning-candidate"),
    ColumnSchema("time", "time", "conditioning-candidate"),
    ColumnSchema("subject_race", "category", "analysis"),
    ColumnSchema("subject_age", "number", "analysis"),
]


@pytest.fixture
def toy_csv_path():
    return DATA_DIR / "toy_stops.csv"


@pytest.fixture
def toy_config_path():
    return DATA_DIR / "toy_config.json"


@pytest.fixture
def toy_table(toy_csv_path):
    return load_table(toy_csv_path, TOY_SCHEMA)
