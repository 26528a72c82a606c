from sqlalchemy import Column, Integer, BigInteger, String, Float, DateTime, UniqueConstraint
from sqlalchemy.sql import func
from database.database import Base


class RunRecord(Base):
    __tablename__ = 'runs'
    __table_args__ = (UniqueConstraint('scenario_digest', 'mode', 'seed', name='uq_run_identity'),)

    id = Column(Integer, primary_key=True, index=True)
    mode = Column(String, index=True)
    seed = Column(BigInteger)
    scenario_digest = Column(String(64), index=True)  # sha256 of the canonical scenario JSON
    duration_ms = Column(BigInteger)
    mean_cqi = Column(Float, nullable=True)
    mean_delay_ms = Column(Float, nullable=True)
    mean_ota_delay_ms = Column(Float, nullable=True)
    mean_throughput_bps = Column(Float, nullable=True)
    freeze_count = Column(Integer)
    freeze_total_ms = Column(Float)
    ota_completion_ms = Column(Float, nullable=True)
    handover_count = Column(Integer)
    created_at = Column(DateTime(timezone=True), server_default=func.now())

    def aggregates(self) -> dict:
        return {
            "mode": self.mode,
            "seed": self.seed,
            "mean_cqi": self.mean_cqi,
            "mean_delay_ms": self.mean_delay_ms,
            "mean_ota_delay_ms": self.mean_ota_delay_ms,
            "mean_throughput_bps": self.mean_throughput_bps,
            "freeze_count": self.freeze_count,
            "freeze_total_ms": self.freeze_total_ms,
            "ota_completion_ms": self.ota_completion_ms,
            "handover_count": self.handover_count,
        }
