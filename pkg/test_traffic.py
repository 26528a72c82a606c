import numpy as np
import pandas as pd
import pytest

from simulation.core import rng_stream
from simulation.scenario import LinkModel, OtaConfig, StreamConfig
from traffic.apps import FreezeEvent, OtaReceiver, OtaSource, StreamSource, load_frame_trace, stream_receiver
from traffic.link import LinkQueue, Packet, apply_handover_interruption, link_rate_bps, serve_queue
from traffic.metrics import (
    AGGREGATE_KEYS, METRIC_FILES, SERIES_COLUMNS, MetricsRecorder, aggregates_from_series,
    finalize_metrics, read_aggregates, write_outputs,
)


def link_with_rate(bps, cqi=15, **kwargs):
    """A link whose CQI `cqi` runs at exactly `bps`."""
    efficiency = LinkModel().cqi_efficiency
    return LinkModel(bandwidth_share=bps / efficiency[cqi], **kwargs)


class TestLink:
    def test_cqi_zero_delivers_nothing(self):
        queue = LinkQueue()
        queue.enqueue(Packet(1, "ota", 0, 0.0, 8192.0))
        result = serve_queue(LinkModel(), 0, queue, 0.0, 10.0)
        assert result.deliveries == [] and result.served_bits == 0.0
        assert len(queue) == 1

    def test_single_tick_drain(self):
        link = link_with_rate(2e6)
        queue = LinkQueue()
        queue.enqueue(Packet(1, "ota", 0, 0.0, 4000.0))
        queue.enqueue(Packet(1, "ota", 1, 0.0, 4000.0))
        result = serve_queue(link, 15, queue, 0.0, 10.0)
        delays = [delivery.delay_ms for delivery in result.deliveries]
        # 2000 bits per ms, back to back, plus 1 ms propagation
        assert delays == pytest.approx([3.0, 5.0])
        assert result.served_bits == pytest.approx(8000.0)
        assert len(queue) == 0 and queue.delivered == 2

    def test_partial_service_carries_over(self):
        link = link_with_rate(2e6)
        queue = LinkQueue()
        queue.enqueue(Packet(1, "stream", 0, 0.0, 30_000.0))
        assert serve_queue(link, 15, queue, 0.0, 10.0).deliveries == []
        assert queue.backlog_bits == pytest.approx(10_000.0)
        result = serve_queue(link, 15, queue, 10.0, 10.0)
        assert result.deliveries[0].delay_ms == pytest.approx(16.0)

    def test_service_waits_for_creation(self):
        link = link_with_rate(2e6)
        queue = LinkQueue()
        queue.enqueue(Packet(1, "ota", 0, 5.0, 2000.0))
        result = serve_queue(link, 15, queue, 0.0, 10.0)
        assert result.deliveries[0].delivered_at == pytest.approx(7.0)
        assert result.deliveries[0].delay_ms == pytest.approx(2.0)

    def test_dt_must_be_positive(self):
        with pytest.raises(ValueError):
            serve_queue(LinkModel(), 5, LinkQueue(), 0.0, 0.0)

    def test_interruption_delays_without_loss(self):
        link = link_with_rate(2e6)
        queue = LinkQueue()
        queue.enqueue(Packet(1, "ota", 0, 0.0, 2000.0))
        apply_handover_interruption(queue, 0.0, 50)
        deliveries = []
        for tick in range(10):
            deliveries += serve_queue(link, 15, queue, tick * 10.0, 10.0).deliveries
        assert len(deliveries) == 1
        assert deliveries[0].delay_ms >= 50.0
        assert deliveries[0].delay_ms == pytest.approx(52.0)

    def test_interruption_with_empty_queue_only_blocks_capacity(self):
        queue = LinkQueue()
        apply_handover_interruption(queue, 100.0, 50)
        apply_handover_interruption(queue, 110.0, 20)
        assert queue.outage_until == 150.0
        assert len(queue) == 0

    def test_more_interruptions_never_lower_mean_delay(self):
        link = link_with_rate(2e6)

        def mean_delay(outages):
            queue = LinkQueue()
            delays = []
            for tick in range(200):
                now = tick * 10.0
                if tick % 2 == 0:
                    queue.enqueue(Packet(1, "ota", tick, now, 8192.0))
                if now in outages:
                    apply_handover_interruption(queue, now, 50)
                delays += [d.delay_ms for d in serve_queue(link, 15, queue, now, 10.0).deliveries]
            return np.mean(delays)

        assert mean_delay(set()) <= mean_delay({500.0}) <= mean_delay({500.0, 1200.0})

    def test_rate_table(self):
        assert link_rate_bps(LinkModel(), 0) == 0.0
        assert link_rate_bps(LinkModel(), 15) == pytest.approx(7.4063 * 5e6)


class TestOta:
    def test_packet_count_and_rate(self):
        source = OtaSource(OtaConfig(), ue=1)
        assert source.count == 34_766
        assert source.offered_bps == pytest.approx(1.6384e6)
        assert source.packet_bytes(source.count - 1) == 640
        assert source.packet_bytes(0) == 1024

    def test_emit_respects_interval(self):
        source = OtaSource(OtaConfig(start_ms=100), ue=1)
        assert source.emit(0, 100) == []
        packets = source.emit(100, 120)
        assert [p.created for p in packets] == [100.0, 105.0, 110.0, 115.0]

    def test_lossless_download_completes_near_nominal_time(self):
        config = OtaConfig()
        link = link_with_rate(2e6)
        source = OtaSource(config, ue=1)
        receiver = OtaReceiver(source.count)
        queue = LinkQueue()
        longest = 0
        for tick in range(18_000):
            now = tick * 10.0
            for packet in source.emit(now, now + 10.0):
                queue.enqueue(packet)
            for delivery in serve_queue(link, 15, queue, now, 10.0).deliveries:
                receiver.deliver(delivery.delivered_at)
            longest = max(longest, len(queue))
            if receiver.completion_ms is not None:
                break
        assert receiver.completion_ms == pytest.approx(35.6e6 * 8 / 1.6384e6 * 1000, rel=0.01)
        assert longest <= 2
        assert queue.enqueued == queue.delivered

    def test_no_capacity_means_no_completion(self):
        source = OtaSource(OtaConfig(total_bytes=10_240), ue=1)
        receiver = OtaReceiver(source.count)
        queue = LinkQueue()
        for tick in range(100):
            for packet in source.emit(tick * 10.0, tick * 10.0 + 10.0):
                queue.enqueue(packet)
            for delivery in serve_queue(LinkModel(), 0, queue, tick * 10.0, 10.0).deliveries:
                receiver.deliver(delivery.delivered_at)
        assert receiver.completion_ms is None
        assert queue.enqueued == 10 and len(queue) == 10


class TestStream:
    def test_fixed_sizes_cycle(self):
        source = StreamSource(StreamConfig(frame_sizes=[100, 200]), ue=1, rng=rng_stream("stream:1", 1))
        packets = source.emit(0, 350)
        assert [(p.seq, p.created, p.size_bits) for p in packets] == [
            (0, 0.0, 800.0), (1, 100.0, 1600.0), (2, 200.0, 800.0), (3, 300.0, 1600.0),
        ]
        assert [p.seq for p in source.emit(350, 500)] == [4]

    def test_synthetic_sizes_have_configured_mean(self):
        source = StreamSource(StreamConfig(), ue=1, rng=rng_stream("stream:1", 3))
        sizes = [source.frame_bytes(seq) for seq in range(20_000)]
        assert np.mean(sizes) == pytest.approx(50_000, rel=0.02)

    def test_frame_trace(self, tmp_path):
        path = tmp_path / "frames.csv"
        path.write_text("frame_bytes\n1200\n800\n")
        assert load_frame_trace(path) == [1200, 800]
        bad = tmp_path / "bad.csv"
        bad.write_text("size\n0\n")
        with pytest.raises(ValueError):
            load_frame_trace(bad)

    def test_on_time_frames_never_freeze(self):
        assert stream_receiver([n * 100.0 for n in range(50)], 100) == []

    def test_late_frame_freezes(self):
        freezes = stream_receiver([0.0, 100.0, 350.0], 100, prebuffer_frames=1)
        assert freezes == [FreezeEvent(start=200.0, duration=150.0)]

    def test_prebuffer_absorbs_short_outage(self):
        arrivals = [0.0, 100.0, 200.0, 350.0, 400.0, 500.0]
        assert stream_receiver(arrivals, 100, prebuffer_frames=3) == []

    def test_freeze_total_is_sum_of_events(self):
        arrivals = [0.0, 100.0, 200.0, 900.0, 1000.0, 1900.0]
        freezes = stream_receiver(arrivals, 100, prebuffer_frames=3)
        assert len(freezes) == 2
        assert sum(f.duration for f in freezes) == pytest.approx(400.0 + 800.0)

    def test_too_few_frames(self):
        assert stream_receiver([0.0, 100.0], 100, prebuffer_frames=3) == []


class TestMetrics:
    def recorder(self):
        recorder = MetricsRecorder(duration_ms=3000)
        for t in range(0, 3000, 100):
            recorder.cqi(t, 1, 10)
        for delivered_at, delay in [(10.4, 10.0), (20.9, 20.0), (1500.2, 30.0)]:
            recorder.delay(delivered_at, 1, delay)
        recorder.delay(40.0, 1, 2.0, "ota")
        recorder.served(500, 1, 1e6)
        recorder.served(600, 1, 5e5, "uplink")
        recorder.freeze(1200.5, 1, 150.0)
        recorder.handover(2000, 1, 2)
        recorder.ota_done(1, 2500.0)
        return recorder

    def test_aggregates(self):
        metrics = finalize_metrics(self.recorder(), [1], "oracle", 7)
        aggregates = metrics.aggregates
        assert list(aggregates) == AGGREGATE_KEYS
        assert aggregates["mean_cqi"] == 10.0
        assert aggregates["mean_delay_ms"] == 20.0
        assert aggregates["mean_ota_delay_ms"] == 2.0
        assert aggregates["mean_throughput_bps"] == pytest.approx(1.5e6 / 3)
        assert (aggregates["freeze_count"], aggregates["freeze_total_ms"]) == (1, 150.0)
        assert aggregates["handover_count"] == 1
        assert aggregates["ota_completion_ms"] == 2500.0
        assert (aggregates["mode"], aggregates["seed"]) == ("oracle", 7)

    def test_series_shape_and_order(self):
        series = finalize_metrics(self.recorder(), [1], "default", 1).series
        assert list(series.columns) == SERIES_COLUMNS
        assert series["t_ms"].is_monotonic_increasing
        for direction, first_bin in [("uplink", 5e5), ("downlink", 1e6)]:
            throughput = series[series["metric"] == f"throughput_{direction}_bps"]
            assert throughput["t_ms"].tolist() == [0, 1000, 2000]
            assert throughput["value"].tolist() == [first_bin, 0.0, 0.0]
        assert series[series["metric"] == "ota_delay_ms"]["value"].tolist() == [2.0]
        assert series[series["metric"] == "delay_ms"]["t_ms"].tolist() == [10, 20, 1500]

    def test_incomplete_download_has_no_completion(self):
        recorder = self.recorder()
        recorder.ota_done(2, None)
        assert finalize_metrics(recorder, [1, 2], "default", 1).aggregates["ota_completion_ms"] is None

    def test_aggregates_match_recomputation_from_files(self, tmp_path):
        metrics = finalize_metrics(self.recorder(), [1], "default", 1)
        out = write_outputs(metrics, tmp_path / "run")
        reread = pd.read_csv(out / METRIC_FILES["series"])
        recomputed = aggregates_from_series(reread, "default", 1, metrics.aggregates["ota_completion_ms"])
        stored = read_aggregates(out / METRIC_FILES["aggregates"])
        assert stored == pytest.approx(recomputed)
        assert not (out / METRIC_FILES["decisions"]).exists()
