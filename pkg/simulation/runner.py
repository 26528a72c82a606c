"""
Scenario runner: builds the event loop, radio environment, gNodeBs, the
near-RT RIC with its xApps and the traffic applications, then runs the
co-simulation to completion.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional

from e2.transport import InProcessTransport
from nn.model import RecurrentModel
from nn.persistence import ModelError, load_model
from ric.runtime import NearRtRic
from simulation.core import Event, EventLoop, rng_stream
from simulation.radio import RadioEnvironment
from simulation.ran import RadioAccessNetwork
from simulation.scenario import OtaConfig, Scenario, StreamConfig
from traffic.apps import OtaReceiver, OtaSource, StreamSource, stream_receiver
from traffic.link import serve_queue
from traffic.metrics import MetricsRecorder, RunMetrics, finalize_metrics
from xapps.ho_management import DecisionLog, HoManagement, ho_mgmt_descriptor
from xapps.kpm_monitor import KpmMonitor, kpm_descriptor
from xapps.qos_predictor import QP_DESCRIPTOR, ModelPredictor, OraclePredictor, QosPredictor

logger = logging.getLogger(__name__)


class ScenarioError(ValueError):
    pass


MODES = ("default", "oracle", "lstm", "gru")


def configure_mode(scenario: Scenario, mode: str, seed: Optional[int] = None, model_ref: Optional[str] = None) -> Scenario:
    """Copy of the scenario set up for one comparison mode."""
    if mode not in MODES:
        raise ScenarioError(f"unknown mode '{mode}', expected one of {', '.join(MODES)}")
    update = {"seed": scenario.seed if seed is None else seed}
    if mode == "default":
        update.update(ho_mode="default", predictor="oracle", model_ref=None)
    elif mode == "oracle":
        update.update(ho_mode="predictive", predictor="oracle", model_ref=None)
    else:
        model_ref = model_ref or scenario.model_ref
        if not model_ref:
            raise ModelError(f"mode '{mode}' needs a trained model")
        update.update(ho_mode="predictive", predictor="model", model_ref=str(model_ref))
    return Scenario.model_validate({**scenario.model_dump(), **update})


def load_mode_model(mode: str, model_ref) -> RecurrentModel:
    model = load_model(model_ref)
    if model.config.arch != mode:
        raise ModelError(f"model {model_ref} is a {model.config.arch} model, mode '{mode}' needs {mode}")
    return model


def run_mode(scenario: Scenario, model: Optional[RecurrentModel] = None) -> str:
    if scenario.ho_mode == "default":
        return "default"
    if scenario.predictor == "oracle":
        return "oracle"
    return model.config.arch if model is not None else "model"


@dataclass
class UeTraffic:
    streams: List[StreamSource] = field(default_factory=list)
    ota: Optional[OtaSource] = None
    ota_receiver: Optional[OtaReceiver] = None
    frame_arrivals: List[float] = field(default_factory=list)
    frame_period_ms: Optional[int] = None
    prebuffer_frames: int = 3


class Simulation:
    def __init__(self, scenario: Scenario, model: Optional[RecurrentModel] = None):
        self.scenario = scenario
        if scenario.ho_mode == "predictive" and scenario.predictor == "model" and model is None:
            model = load_model(scenario.model_ref)
        self.model = model
        self.mode = run_mode(scenario, model)
        self.loop = EventLoop()
        try:
            self.environment = RadioEnvironment(scenario)
        except (OSError, ValueError) as e:
            raise ScenarioError(f"cannot build the radio environment: {e}")
        self.recorder = MetricsRecorder(scenario.duration)
        self.decisions = DecisionLog()
        self.ran = RadioAccessNetwork(
            scenario, self.loop, self.environment, self.decisions, on_handover=self.recorder.handover
        )
        self.transport = InProcessTransport()
        self.ric = NearRtRic(self.loop, scenario.sdl_capacity)
        self.loop.after_dispatch = self.transport.pump
        for cell in sorted(scenario.cells, key=lambda c: c.id):
            ran_end, ric_end = self.transport.link(f"gnb-{cell.id}", f"ric-{cell.id}")
            self.ran.add_node(cell, ran_end)
            self.ric.connect(cell.id, ric_end)
        self.ran.attach_all()
        self.traffic = self._build_traffic()
        # RAN events first so measurements precede xApp timers at equal times
        self.ran.start()
        self.loop.schedule(0, "radio-tick", self._on_tick)
        self._register_xapps()

    def _register_xapps(self):
        self.kpm = KpmMonitor(self.ric.sdl)
        self.ric.register_xapp(kpm_descriptor(self.scenario.report_period_ms), self.kpm)
        self.ho_mgmt = None
        if self.scenario.ho_mode != "predictive":
            return
        if self.scenario.predictor == "oracle":
            predictor = OraclePredictor(self.environment)
        else:
            predictor = ModelPredictor(self.model)
        qos = QosPredictor(self.ric.sdl, predictor, self.scenario.policy)
        self.ric.register_xapp(QP_DESCRIPTOR, qos)
        self.ho_mgmt = HoManagement(self.ric, qos, self.scenario.policy, self.decisions, mode=self.mode)
        self.ho_mgmt.xapp_id = self.ric.register_xapp(ho_mgmt_descriptor(self.scenario.policy), self.ho_mgmt)

    def _build_traffic(self) -> Dict[int, UeTraffic]:
        ue_ids = sorted(self.ran.ues)
        traffic = {ue: UeTraffic() for ue in ue_ids}
        for app in self.scenario.traffic:
            targets = app.ue_ids if app.ue_ids is not None else ue_ids
            for ue in targets:
                if ue not in traffic:
                    raise ScenarioError(f"traffic app '{app.kind}' names unknown ue {ue}")
                if isinstance(app, StreamConfig):
                    if traffic[ue].streams:
                        raise ScenarioError(f"ue {ue} has more than one stream app")
                    try:
                        source = StreamSource(app, ue, rng_stream(f"stream:{ue}", self.scenario.seed))
                    except (OSError, ValueError) as e:
                        raise ScenarioError(f"cannot load frame trace: {e}")
                    traffic[ue].streams.append(source)
                    traffic[ue].frame_period_ms = app.frame_period_ms
                    traffic[ue].prebuffer_frames = app.prebuffer_frames
                elif isinstance(app, OtaConfig):
                    if traffic[ue].ota is not None:
                        raise ScenarioError(f"ue {ue} has more than one ota app")
                    traffic[ue].ota = OtaSource(app, ue)
                    traffic[ue].ota_receiver = OtaReceiver(traffic[ue].ota.count)
        return traffic

    def _on_tick(self, event: Event):
        t = event.due
        dt = self.scenario.tick_ms
        if t + 2 * dt <= self.scenario.duration:
            self.loop.schedule(t + dt, "radio-tick", self._on_tick)
        for ue_id in sorted(self.ran.ues):
            ue = self.ran.ues[ue_id]
            cqi = self.environment.report(ue_id, ue.serving, t).cqi
            if t % self.scenario.metrics_period_ms == 0:
                self.recorder.cqi(t, ue_id, cqi)
            apps = self.traffic[ue_id]
            for source in apps.streams:
                for packet in source.emit(t, t + dt):
                    ue.uplink.enqueue(packet)
            if apps.ota is not None:
                for packet in apps.ota.emit(t, t + dt):
                    ue.downlink.enqueue(packet)
            for direction, queue in (("uplink", ue.uplink), ("downlink", ue.downlink)):
                result = serve_queue(self.scenario.link, cqi, queue, t, dt)
                self.recorder.served(t, ue_id, result.served_bits, direction)
                for delivery in result.deliveries:
                    self.recorder.delay(delivery.delivered_at, ue_id, delivery.delay_ms, delivery.packet.app)
                    if delivery.packet.app == "stream":
                        apps.frame_arrivals.append(delivery.delivered_at)
                    elif apps.ota_receiver is not None:
                        apps.ota_receiver.deliver(delivery.delivered_at)

    def run(self) -> RunMetrics:
        logger.info(f"Running {self.mode} mode, seed {self.scenario.seed}, {self.scenario.duration} ms")
        self.transport.pump()
        self.loop.run_until(self.scenario.duration)
        for ue_id, apps in self.traffic.items():
            if apps.frame_period_ms is not None:
                for freeze in stream_receiver(apps.frame_arrivals, apps.frame_period_ms, apps.prebuffer_frames):
                    self.recorder.freeze(freeze.start, ue_id, freeze.duration)
            if apps.ota_receiver is not None:
                self.recorder.ota_done(ue_id, apps.ota_receiver.completion_ms)
        metrics = finalize_metrics(
            self.recorder, sorted(self.ran.ues), self.mode, self.scenario.seed, self.decisions.to_frame()
        )
        metrics.counters = {
            "events_dispatched": self.loop.dispatched,
            "indications_received": self.ric.counters.indications_received,
            "indications_delivered": self.ric.counters.indications_delivered,
            "indications_dropped": self.ric.counters.indications_dropped,
            "controls_sent": self.ric.counters.controls_sent,
            "acks_received": self.ric.counters.acks_received,
            "handovers": self.ran.handovers,
            "rejected_commands": self.ran.rejected_commands,
            "kpm_stored": self.kpm.stored,
            "kpm_dropped": self.kpm.dropped,
        }
        logger.info(
            f"Finished {self.mode} run: {self.ran.handovers} handovers, "
            f"mean delay {metrics.aggregates['mean_delay_ms']}, freezes {metrics.aggregates['freeze_count']}"
        )
        return metrics


def run(scenario: Scenario, model: Optional[RecurrentModel] = None) -> RunMetrics:
    return Simulation(scenario, model).run()
