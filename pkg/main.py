from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware
from controller.runs import router as runs_router
from controller.reports import router as reports_router
from database.database import engine, Base
import database.models  # noqa: F401  registers RunRecord on Base
import logging

logger = logging.getLogger(__name__)

app = FastAPI(
    title="V2X RIC Co-Simulation API",
    version="1.0.0",
    description="Run catalog for the vehicular RAN / near-RT RIC co-simulation: launch runs and compare modes."
)

app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=False,  # Must be False when using "*"
    allow_methods=["GET", "POST", "OPTIONS"],
    allow_headers=["*"],
)

app.include_router(runs_router, tags=["runs"])
app.include_router(reports_router, tags=["reports"])


@app.on_event("startup")
async def startup_event():
    try:
        # Create database tables (only creates if they don't exist)
        Base.metadata.create_all(bind=engine)
        logger.info("Database tables created successfully")
    except Exception as e:
        logger.warning(f"Could not create database tables: {e}. Make sure the database is reachable.")
