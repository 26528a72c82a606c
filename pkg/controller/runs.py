from fastapi import APIRouter, Depends, HTTPException
from sqlalchemy.orm import Session
from typing import List, Optional
import hashlib
import logging

from database.database import get_db
from database.models import RunRecord
from nn.persistence import ModelError
from simulation.runner import ScenarioError, Simulation, configure_mode, load_mode_model
from simulation.scenario import Scenario, default_scenario
from .basemodel import RunCreate, RunOut

router = APIRouter()
logger = logging.getLogger(__name__)


def scenario_digest(scenario: Scenario) -> str:
    return hashlib.sha256(scenario.model_dump_json().encode("utf-8")).hexdigest()


@router.get("/scenario/default")
def get_default_scenario():
    return default_scenario().model_dump(mode="json")


@router.post("/runs", response_model=RunOut)
def create_run(request: RunCreate, db: Session = Depends(get_db)):
    base = request.scenario or default_scenario()
    try:
        if request.duration is not None:
            base = Scenario.model_validate({**base.model_dump(), "duration": request.duration})
        scenario = configure_mode(base, request.mode, request.seed, request.model_ref)
    except ModelError as e:
        raise HTTPException(status_code=422, detail=str(e))
    except (ScenarioError, ValueError) as e:
        raise HTTPException(status_code=400, detail=str(e))

    # the digest ignores seed and mode, which are stored alongside
    digest = scenario_digest(configure_mode(base, "default", 0))
    existing = db.query(RunRecord).filter(
        RunRecord.scenario_digest == digest,
        RunRecord.mode == request.mode,
        RunRecord.seed == request.seed,
    ).first()
    if existing:
        return existing

    try:
        model = load_mode_model(request.mode, scenario.model_ref) if request.mode in ("lstm", "gru") else None
        metrics = Simulation(scenario, model).run()
    except ModelError as e:
        raise HTTPException(status_code=422, detail=str(e))
    except ScenarioError as e:
        raise HTTPException(status_code=400, detail=str(e))

    aggregates = metrics.aggregates
    record = RunRecord(
        mode=request.mode,
        seed=request.seed,
        scenario_digest=digest,
        duration_ms=scenario.duration,
        mean_cqi=aggregates["mean_cqi"],
        mean_delay_ms=aggregates["mean_delay_ms"],
        mean_ota_delay_ms=aggregates["mean_ota_delay_ms"],
        mean_throughput_bps=aggregates["mean_throughput_bps"],
        freeze_count=aggregates["freeze_count"],
        freeze_total_ms=aggregates["freeze_total_ms"],
        ota_completion_ms=aggregates["ota_completion_ms"],
        handover_count=aggregates["handover_count"],
    )
    try:
        db.add(record)
        db.commit()
        db.refresh(record)
    except Exception as e:
        db.rollback()
        logger.error(f"Could not store run {request.mode}/{request.seed}: {e}")
        raise HTTPException(status_code=500, detail="Could not store run")
    logger.info(f"Stored run {record.id}: {request.mode}/{request.seed}")
    return record


@router.get("/runs", response_model=List[RunOut])
def list_runs(mode: Optional[str] = None, db: Session = Depends(get_db)):
    query = db.query(RunRecord)
    if mode:
        query = query.filter(RunRecord.mode == mode)
    return query.order_by(RunRecord.id).all()


@router.get("/runs/{run_id}", response_model=RunOut)
def get_run(run_id: int, db: Session = Depends(get_db)):
    record = db.query(RunRecord).filter(RunRecord.id == run_id).first()
    if not record:
        raise HTTPException(status_code=404, detail="Run not found")
    return record
