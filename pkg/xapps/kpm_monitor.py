import logging

from ric.runtime import XAppDescriptor
from ric.sdl import SdlStore
from simulation.radio import MeasurementReport

logger = logging.getLogger(__name__)

KPM_FUNCTION = "KPM"


def kpm_descriptor(period_ms: int = 1000) -> XAppDescriptor:
    return XAppDescriptor(name="kpm-mon", wanted_subscriptions=((KPM_FUNCTION, period_ms),))


class KpmMonitor:
    """Stores every KPM report in the SDL, one sample per (ue, cell) entry."""

    def __init__(self, sdl: SdlStore):
        self.sdl = sdl
        self.stored = 0
        self.dropped = 0

    def on_indication(self, report: MeasurementReport):
        latest = self.sdl.latest(report.ue)
        if latest is not None and report.t <= latest.t:
            self.dropped += 1
            logger.warning(f"Dropped KPM report for ue {report.ue} at t={report.t} (latest t={latest.t})")
            return
        # all or nothing: a report with one stale entry stores none of them
        stale = [cell for cell, _ in report.entries if not self.sdl.accepts(report.ue, cell, report.t)]
        if stale:
            self.dropped += 1
            logger.warning(f"Dropped KPM report for ue {report.ue} at t={report.t}: stale cells {stale}")
            return
        for cell, rsrp in report.entries:
            self.sdl.put(report.ue, cell, report.t, rsrp)
        self.sdl.set_latest(report)
        self.stored += 1
