from sqlalchemy.orm import Session

from . import models


def create_run(db: Session, run_data: dict):
    run = models.SolveRun(**run_data)
    db.add(run)
    db.commit()
    db.refresh(run)
    return run


def add_support(db: Session, run_id: int, profile_json: str, weight: str):
    entry = models.SupportEntry(run_id=run_id, profile_json=profile_json, weight=weight)
    db.add(entry)
    db.commit()
    db.refresh(entry)
    return entry


def get_run(db: Session, run_id: int):
    return db.query(models.SolveRun).filter(models.SolveRun.id == run_id).first()


def get_runs(db: Session, skip: int = 0, limit: int = 100, command: str = None):
    query = db.query(models.SolveRun)
    if command is not None:
        query = query.filter(models.SolveRun.command == command)
    return query.order_by(models.SolveRun.id).offset(skip).limit(limit).all()


def get_support(db: Session, run_id: int):
    return db.query(models.SupportEntry).filter(models.SupportEntry.run_id == run_id).all()
