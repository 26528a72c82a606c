"""
RAN side of the co-simulation: gNodeBs exposing KPM and handover RAN
functions over E2, UE attachment, periodic measurement reports, the
RAN-local Event A3 baseline and handover execution.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional

from e2.agent import E2Agent
from e2.messages import HandoverCommand, RanFunction
from simulation.core import Event, EventLoop, SimTime
from simulation.radio import MeasurementReport, RadioEnvironment
from simulation.scenario import CellConfig, Scenario
from traffic.link import LinkQueue, apply_handover_interruption
from xapps.ho_management import DecisionLog, baseline_ho_check, guard_expired

logger = logging.getLogger(__name__)

KPM_RAN_FUNCTION = RanFunction(id=1, name="KPM", description="per-UE RSRP/SINR/CQI measurement reports")
HO_RAN_FUNCTION = RanFunction(id=2, name="HO", description="handover control with time to trigger")


@dataclass
class UeContext:
    id: int
    serving: int
    last_handover: Optional[SimTime] = None
    pending_event: Optional[int] = None
    uplink: LinkQueue = field(default_factory=lambda: LinkQueue("uplink"))
    downlink: LinkQueue = field(default_factory=lambda: LinkQueue("downlink"))


class GNodeB:
    """One cell per gNodeB; the E2 node id is the cell id."""

    def __init__(self, cell: CellConfig, ran: "RadioAccessNetwork", endpoint=None):
        self.cell = cell
        self.ran = ran
        self.agent = E2Agent(cell.id, (KPM_RAN_FUNCTION, HO_RAN_FUNCTION), endpoint)
        self.agent.on_control(self.on_control)
        self.indications_sent = 0

    @property
    def node_id(self) -> int:
        return self.cell.id

    def kpm_periods(self) -> List[int]:
        return sorted({
            period
            for function_id, period in self.agent.state.active_subscriptions.values()
            if function_id == KPM_RAN_FUNCTION.id
        })

    def report(self, ue: UeContext, t: SimTime) -> MeasurementReport:
        report = self.ran.environment.report(ue.id, ue.serving, t)
        for period in self.kpm_periods():
            if t % period == 0:
                self.indications_sent += self.agent.indicate(KPM_RAN_FUNCTION.id, report, period)
        return report

    def on_control(self, ue_id: int, command: HandoverCommand) -> bool:
        return self.ran.command_handover(self.node_id, ue_id, command)


class RadioAccessNetwork:
    def __init__(self, scenario: Scenario, loop: EventLoop, environment: RadioEnvironment,
                 decisions: Optional[DecisionLog] = None, on_handover=None):
        self.scenario = scenario
        self.loop = loop
        self.environment = environment
        self.decisions = decisions
        self.on_handover = on_handover
        self.baseline = scenario.ho_mode == "default"
        self.nodes: Dict[int, GNodeB] = {}
        self.ues: Dict[int, UeContext] = {}
        self.handovers = 0
        self.rejected_commands = 0

    def add_node(self, cell: CellConfig, endpoint=None) -> GNodeB:
        node = GNodeB(cell, self, endpoint)
        self.nodes[cell.id] = node
        return node

    def attach_all(self, t: SimTime = 0):
        """Initial attach of every UE to its strongest cell."""
        for ue_id in sorted(self.environment.initial):
            serving = self.environment.strongest_cell(ue_id, t)
            self.ues[ue_id] = UeContext(id=ue_id, serving=serving)
            logger.info(f"UE {ue_id} attached to cell {serving}")

    def start(self):
        for node_id in sorted(self.nodes):
            self.loop.schedule(0, "e2-setup", lambda event, node=self.nodes[node_id]: node.agent.start())
        period = self.scenario.report_period_ms
        if period <= self.scenario.duration:
            self.loop.schedule(period, "measurement", self._on_measurement)

    def _on_measurement(self, event: Event):
        t = event.due
        following = t + self.scenario.report_period_ms
        if following <= self.scenario.duration:
            self.loop.schedule(following, "measurement", self._on_measurement)
        # attachment is fixed for the whole tick: one report per ue, even if the baseline hands it over
        pairs = [(self.nodes[node_id], ue) for node_id in sorted(self.nodes) for ue in self.attached(node_id)]
        reports = [(ue, node.report(ue, t)) for node, ue in pairs]
        if self.baseline:
            for ue, report in reports:
                self._baseline(ue, report, t)

    def attached(self, node_id: int) -> List[UeContext]:
        return [self.ues[ue_id] for ue_id in sorted(self.ues) if self.ues[ue_id].serving == node_id]

    def _baseline(self, ue: UeContext, report: MeasurementReport, t: SimTime):
        if ue.pending_event is not None:
            return
        policy = self.scenario.policy
        target = baseline_ho_check(report, policy.hom, t, ue.last_handover, policy.pingpong_guard_ms)
        if target is None:
            return
        if self.decisions is not None:
            self.decisions.record(t, ue.id, "default", ue.serving, target, 0)
        self.execute_handover(ue.id, target, t)

    def command_handover(self, node_id: int, ue_id: int, command: HandoverCommand) -> bool:
        """RIC Control: schedule the handover TTT ms from now, or refuse."""
        ue = self.ues.get(ue_id)
        now = self.loop.now
        if ue is None or ue.serving != node_id:
            logger.warning(f"Handover command for ue {ue_id} not attached to node {node_id}")
            self.rejected_commands += 1
            return False
        if command.target_cell not in self.nodes or command.target_cell == node_id:
            logger.warning(f"Handover command for ue {ue_id} names invalid target {command.target_cell}")
            self.rejected_commands += 1
            return False
        due = now + command.ttt_ms
        if ue.pending_event is not None or not guard_expired(due, ue.last_handover, self.scenario.policy.pingpong_guard_ms):
            logger.warning(f"Handover command for ue {ue_id} refused by the ping-pong guard")
            self.rejected_commands += 1
            return False
        ue.pending_event = self.loop.schedule(due, "ho-execute", self._on_execute, (ue_id, command.target_cell))
        return True

    def _on_execute(self, event: Event):
        ue_id, target = event.payload
        ue = self.ues[ue_id]
        ue.pending_event = None
        self.execute_handover(ue_id, target, event.due)

    def execute_handover(self, ue_id: int, target: int, t: SimTime):
        ue = self.ues[ue_id]
        source = ue.serving
        ue.serving = target
        ue.last_handover = t
        interruption = self.scenario.link.interruption_ms
        apply_handover_interruption(ue.uplink, t, interruption)
        apply_handover_interruption(ue.downlink, t, interruption)
        self.handovers += 1
        logger.info(f"t={t}: ue {ue_id} handed over {source} -> {target}")
        if self.on_handover is not None:
            self.on_handover(t, ue_id, target)
