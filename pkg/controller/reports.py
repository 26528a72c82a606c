from fastapi import APIRouter, Depends, HTTPException
from sqlalchemy.orm import Session
import pandas as pd

from database.database import get_db
from database.models import RunRecord
from stats.summary import MissingModeError, summarize
from .basemodel import ReportOut, ReportRequest

router = APIRouter()


def _records(frame: pd.DataFrame) -> list:
    # NaN / NA (no CI, no test) is reported as null
    rows = []
    for row in frame.astype(object).to_dict(orient="records"):
        rows.append({
            key: None if value is None or (not isinstance(value, str) and pd.isna(value))
            else (value.item() if hasattr(value, "item") else value)
            for key, value in row.items()
        })
    return rows


@router.post("/reports", response_model=ReportOut)
def create_report(request: ReportRequest, db: Session = Depends(get_db)):
    query = db.query(RunRecord).filter(RunRecord.mode.in_(request.modes))
    if request.scenario_digest:
        query = query.filter(RunRecord.scenario_digest == request.scenario_digest)
    runs = {}
    for record in query.order_by(RunRecord.seed, RunRecord.id).all():
        runs.setdefault(record.mode, []).append(record.aggregates())
    try:
        summary = summarize(runs, request.metric, request.modes)
    except MissingModeError as e:
        raise HTTPException(status_code=409, detail=str(e))
    return ReportOut(metric=summary.metric, means=_records(summary.means), comparisons=_records(summary.comparisons))
