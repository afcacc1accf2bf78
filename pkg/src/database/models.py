from datetime import datetime, timezone

from sqlalchemy import Column, DateTime, ForeignKey, Integer, String, Text
from sqlalchemy.orm import declarative_base, relationship

Base = declarative_base()


def _now():
    return datetime.now(timezone.utc)


class SolveRun(Base):
    __tablename__ = 'solve_runs'

    id = Column(Integer, primary_key=True, index=True)
    command = Column(String, index=True)  # solve, verify, bruteforce, saddle, info
    game_path = Column(String)
    game_digest = Column(String, index=True)
    phi = Column(String)
    status = Column(String)
    support_size = Column(Integer)
    n_bound = Column(Integer)
    ger_calls = Column(Integer)
    iterations = Column(Integer)
    escalations = Column(Integer)
    elapsed_ms = Column(Integer)
    created_at = Column(DateTime, default=_now)

    # Relationships
    support = relationship("SupportEntry", back_populates="run", cascade="all, delete-orphan")


class SupportEntry(Base):
    __tablename__ = 'support_entries'

    id = Column(Integer, primary_key=True, index=True)
    run_id = Column(Integer, ForeignKey('solve_runs.id'))
    profile_json = Column(Text)  # per-player vertex vectors, rationals as "p/q"
    weight = Column(String)

    # Relationships
    run = relationship("SolveRun", back_populates="support")
