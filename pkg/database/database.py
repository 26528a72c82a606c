from sqlalchemy import create_engine
from sqlalchemy.orm import declarative_base, sessionmaker
import os
import logging
from urllib.parse import quote_plus
from dotenv import load_dotenv
load_dotenv()

logger = logging.getLogger(__name__)


def database_url() -> str:
    """DATABASE_URL, else POSTGRES_URL / POSTGRES_* components, else a local SQLite file."""
    url = os.getenv("DATABASE_URL") or os.getenv("POSTGRES_URL")
    if url:
        # SQLAlchemy needs the psycopg (v3) driver spelled out
        if url.startswith("postgresql://"):
            url = url.replace("postgresql://", "postgresql+psycopg://", 1)
        return url
    host = os.getenv("POSTGRES_HOST")
    if not host:
        return "sqlite:///./runs.db"
    user = os.getenv("POSTGRES_USER")
    password = os.getenv("POSTGRES_PASSWORD")
    port = os.getenv("POSTGRES_PORT", "5432")
    database = os.getenv("POSTGRES_DB")
    # URL encode username and password to handle special characters
    encoded_user = quote_plus(user) if user else ""
    encoded_password = quote_plus(password) if password else ""
    return f"postgresql+psycopg://{encoded_user}:{encoded_password}@{host}:{port}/{database}"


SQLALCHEMY_DATABASE_URL = database_url()


def make_engine(url: str):
    if url.startswith("sqlite"):
        return create_engine(url, connect_args={"check_same_thread": False}, echo=False)
    return create_engine(
        url,
        pool_pre_ping=True,  # Verify connections before using
        pool_recycle=300,     # Recycle connections after 5 minutes
        connect_args={"connect_timeout": 10},
        echo=False
    )


try:
    engine = make_engine(SQLALCHEMY_DATABASE_URL)
except Exception as e:
    logger.error(f"Could not create database engine for {SQLALCHEMY_DATABASE_URL[:30]}...: {e}")
    raise

SessionLocal = sessionmaker(autocommit=False, autoflush=False, bind=engine)

# Declare the base class for the models
Base = declarative_base()


def get_db():
    db = SessionLocal()
    try:
        yield db
    finally:
        db.close()
