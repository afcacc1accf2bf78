"""Shared fixtures."""

import os

import pytest
from sqlalchemy import create_engine
from sqlalchemy.orm import sessionmaker

DATA_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), 'data')


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: full-size random corpora")


@pytest.fixture
def data_dir():
    return DATA_DIR


@pytest.fixture
def test_db():
    """Create a test database session."""
    from src.database.models import Base

    engine = create_engine("sqlite:///:memory:")
    Base.metadata.create_all(bind=engine)
    TestingSessionLocal = sessionmaker(autocommit=False, autoflush=False, bind=engine)
    db = TestingSessionLocal()
    try:
        yield db
    finally:
        db.close()


@pytest.fixture
def pd_game():
    from src.services.games import prisoners_dilemma
    return prisoners_dilemma()


@pytest.fixture
def mp_game():
    from src.services.games import matching_pennies
    return matching_pennies()


@pytest.fixture
def unit_square():
    from src.services.polytope import HPolytope
    return HPolytope.unit_cube(2)
