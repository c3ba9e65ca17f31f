"""Builds one simulation run from a validated config and executes it.

A run wires trajectory, channel, link layer, transport flows and traffic
sources onto a fresh engine, advances to the horizon, then freezes the
ledger into a summary plus optional CSV tables. Identical config and seed
always produce byte-identical tables.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

from uavnetsim import apps, channel, lte, metrics, mobility, stub, transport, wifi
from uavnetsim.config import Config
from uavnetsim.core import US_PER_MS, Engine, s_to_us

WIFI_BANDWIDTH_HZ = 20e6


@dataclass
class RunResult:
    run_id: str
    seed: int
    summary: metrics.RunSummary
    collector: metrics.Collector
    engine: Engine


def _make_trajectory(cfg: Config, bs_pos):
    if cfg["uav.trajectory"] == "orbit":
        return mobility.orbit_for_distance(bs_pos, cfg["uav.distance_m"],
                                           cfg["uav.altitude_m"], cfg["uav.speed_mps"])
    return mobility.RectangleLoop((bs_pos[0], bs_pos[1]), cfg["uav.rect_width_m"],
                                  cfg["uav.rect_depth_m"], cfg["uav.altitude_m"],
                                  cfg["uav.speed_mps"], cfg["uav.dwell_s"])


def _channel_params(cfg: Config) -> channel.ChannelParams:
    return channel.ChannelParams(
        regime=cfg["pathloss.regime"],
        c_offset_db=cfg["pathloss.c_offset_db"],
        diffraction_coeff_db=cfg["pathloss.diffraction_coeff_db"],
        diffraction_floor_db=cfg["pathloss.diffraction_floor_db"],
        l_ew_db=cfg["pathloss.l_ew_db"],
        g_h_db_per_m=cfg["pathloss.g_h_db_per_m"],
        g_h_cap_db=cfg["pathloss.g_h_cap_db"],
        shadow_sigma_db=cfg["shadowing.sigma_db"],
        softness_db=cfg["channel.softness_db"],
    )


def _transport_params(cfg: Config) -> transport.TransportParams:
    return transport.TransportParams(
        mss=cfg["transport.mss"],
        min_rto_us=cfg["transport.min_rto_ms"] * US_PER_MS,
        send_buffer=cfg["transport.send_buffer_bytes"],
        max_window=cfg["transport.send_buffer_bytes"],
    )


class _Build:
    """Holds the wired objects of one run; kept alive until the run finishes."""

    def __init__(self, cfg: Config, seed: int):
        self.cfg = cfg
        self.engine = Engine(seed)
        self.bs_pos = (0.0, 0.0, cfg["bs.height_m"])
        self.traj = _make_trajectory(cfg, self.bs_pos)
        self.chan = channel.ChannelModel(_channel_params(cfg), seed)
        kinds = ("telemetry", "task", "exogenous") if cfg["metrics.record_exogenous"] \
            else ("telemetry", "task")
        self.collector = metrics.Collector(record_kinds=kinds)
        self.uav_stack = transport.Stack("uav")
        self.infra_stack = transport.Stack("infra")
        self.ground = mobility.place_ground_nodes(
            self.engine.rng("ground.placement"), cfg["ground.n_nodes"],
            cfg["ground.radius_m"], (self.bs_pos[0], self.bs_pos[1]))
        self.keep = []                     # anchors sources and sinks

        tech = cfg["scenario.technology"]
        if tech == "wifi":
            self._wire_wifi()
        elif tech == "lte":
            self._wire_lte()
        else:
            self._wire_stub()
        self._wire_flows()

    # -- node position lookup -------------------------------------------

    def _node_pos(self, name: str):
        if name == "uav":
            return self.traj.position_at(self.engine.now)[0]
        return self.ground[int(name[3:])]      # "exoN"

    # -- link layers -----------------------------------------------------

    def _wire_wifi(self):
        cfg = self.cfg
        params = wifi.WifiParams(
            slot_us=cfg["wifi.slot_us"], sifs_us=cfg["wifi.sifs_us"],
            difs_us=cfg["wifi.difs_us"], cw_min=cfg["wifi.cw_min"],
            cw_max=cfg["wifi.cw_max"], retry_limit=cfg["wifi.retry_limit"],
            queue_frames=cfg["wifi.queue_frames"],
            softness_db=cfg["channel.softness_db"])
        freq = cfg["wifi.freq_ghz"] * 1e9
        noise = cfg.noise_floor_dbm(WIFI_BANDWIDTH_HZ)
        tx_power = cfg["wifi.tx_power_dbm"]

        def link_fn(src: str, dst: str) -> channel.LinkState:
            subject = dst if src == "ap" else src
            sinr = self.chan.sinr_db(f"wifi:{subject}", self._node_pos(subject),
                                     self.bs_pos, freq, tx_power, noise)
            return channel.link_state(sinr, channel.WIFI_80211A)

        medium = wifi.Medium(self.engine, params, link_fn)
        table = channel.WIFI_80211A
        ap = wifi.DcfStation("ap", self.engine, medium, params, table,
                             deliver_up=self.infra_stack.on_packet)
        uav = wifi.DcfStation("uav", self.engine, medium, params, table,
                              deliver_up=self.uav_stack.on_packet)
        stations = {"uav": uav}
        self.exo_nics = []
        for i in range(len(self.ground)):
            st = wifi.DcfStation(f"exo{i}", self.engine, medium, params, table)
            stations[f"exo{i}"] = st
            self.exo_nics.append(wifi.WifiNic(st, lambda dst, ap=ap: ap))
        self.uav_nic = wifi.WifiNic(uav, lambda dst, ap=ap: ap)
        self.infra_nic = wifi.WifiNic(ap, lambda dst, m=stations: m[dst])
        self.medium = medium

    def _wire_lte(self):
        cfg = self.cfg
        period_ttis = max(1, cfg["lte.cqi_period_ms"])
        params = lte.LteParams(
            n_prb_ul=cfg["lte.n_prb"], n_prb_dl=cfg["lte.n_prb"],
            overhead_factor=1.0 - cfg["lte.overhead"],
            sr_period_ttis=cfg["lte.sr_period_ms"],
            sr_grant_lag_ttis=cfg["lte.sr_grant_lag_ttis"],
            grant_to_tx_ttis=cfg["lte.grant_to_tx_ttis"],
            ul_decode_lag_ttis=cfg["lte.ul_decode_ttis"],
            dl_decode_lag_ttis=cfg["lte.dl_decode_ttis"],
            cqi_period_ttis=period_ttis,
            arq_rtt_ttis=cfg["lte.arq_rtt_ms"],
            max_arq_retx=cfg["lte.max_retx"],
            rlc_buffer_bytes=cfg["lte.rlc_buffer_bytes"],
            pf_alpha=1.0 / cfg["lte.pf_window_ttis"],
            softness_db=cfg["channel.softness_db"])
        freq = cfg["lte.freq_ghz"] * 1e9
        noise = cfg.noise_floor_dbm(cfg["lte.bandwidth_mhz"] * 1e6)
        ue_power = cfg["lte.ue_tx_power_dbm"]
        enb_power = cfg["lte.enb_tx_power_dbm"]

        def link_fn(name: str, direction: str) -> channel.LinkState:
            tx_power = ue_power if direction == "ul" else enb_power
            sinr = self.chan.sinr_db(f"lte:{name}", self._node_pos(name),
                                     self.bs_pos, freq, tx_power, noise)
            return channel.link_state(sinr, channel.LTE_CQI)

        cell = lte.LteCell(self.engine, params, channel.LTE_CQI, link_fn,
                           deliver_up=self.infra_stack.on_packet)
        uav_ue = cell.add_ue("uav", dl_deliver=self.uav_stack.on_packet)
        ue_map = {"uav": uav_ue}
        self.exo_nics = []
        for i in range(len(self.ground)):
            ue = cell.add_ue(f"exo{i}")
            ue_map[f"exo{i}"] = ue
            self.exo_nics.append(lte.LteUlNic(cell, ue))
        self.uav_nic = lte.LteUlNic(cell, uav_ue)
        self.infra_nic = lte.LteDlNic(cell, lambda dst, m=ue_map: m[dst])
        self.cell = cell

    def _wire_stub(self):
        cfg = self.cfg
        params = stub.StubParams(delay_us=cfg["stub.delay_us"],
                                 jitter_us=cfg["stub.jitter_us"],
                                 loss_prob=cfg["stub.loss_prob"])
        self.uav_nic = stub.StubLink(self.engine, self.infra_stack, params, "stub.up")
        self.infra_nic = stub.StubLink(self.engine, self.uav_stack, params, "stub.down")
        self.exo_nics = []

    # -- applications ----------------------------------------------------

    def _wire_flows(self):
        cfg = self.cfg
        engine = self.engine
        tp = _transport_params(cfg)
        estimator = apps.Estimator(mode=cfg["estimator.mode"])
        sampler = apps.ErrorSampler(engine, self.collector, self.traj, estimator,
                                    grid_us=cfg["error.grid_ms"] * US_PER_MS,
                                    planar=cfg["estimator.error_norm"] == "2d")
        drain = cfg["uav.battery_drain_per_s"]

        if cfg["transport.mode"] == "reliable":
            sender = transport.make_reliable_pair(
                engine, "tlm", self.uav_nic, self.infra_nic,
                self.uav_stack, self.infra_stack, "uav", "gcs", tp)
            tlm = apps.TelemetrySource(engine, self.collector, self.traj,
                                       cfg["telemetry.freq_hz"],
                                       cfg["telemetry.payload_bytes"], sender,
                                       estimator, drain)
        else:
            socket = transport.DatagramSocket(engine, "tlm", self.uav_nic,
                                              "uav", "gcs", mss=tp.mss)
            sink = transport.DatagramSink(on_payload=estimator.ingest)
            self.infra_stack.bind("tlm", sink.on_packet)
            tlm = apps.TelemetrySource(engine, self.collector, self.traj,
                                       cfg["telemetry.freq_hz"],
                                       cfg["telemetry.payload_bytes"], socket,
                                       estimator, drain)
        self.keep += [estimator, sampler, tlm]

        task_bytes = int(round(cfg["task.size_kb"] * 1000))
        if task_bytes > 0:
            sender = transport.make_reliable_pair(
                engine, "task", self.uav_nic, self.infra_nic,
                self.uav_stack, self.infra_stack, "uav", "gcs", tp)
            self.keep.append(apps.TaskSource(engine, self.collector, task_bytes,
                                             s_to_us(cfg["task.period_s"]), sender))

        rate_bps = cfg["exogenous.rate_mbps"] * 1e6
        if rate_bps > 0:
            for i, nic in enumerate(self.exo_nics):
                flow = f"exo{i}"
                socket = transport.DatagramSocket(engine, flow, nic, flow, "gcs",
                                                  mss=cfg["exogenous.packet_bytes"])
                self.infra_stack.bind(flow, transport.DatagramSink().on_packet)
                self.keep.append(apps.ExogenousSource(
                    engine, self.collector, socket, cfg["exogenous.packet_bytes"],
                    rate_bps, engine.rng(f"exo.phase.{i}")))


def run_scenario(cfg: Config, seed: int, out_dir: str | Path | None = None,
                 run_id: str | None = None, probe=None) -> RunResult:
    """Execute one run to the configured horizon; optionally write the CSV tables.

    `probe`, if given, is called with the wired build before the clock starts —
    use it to enable scheduler logs or attach extra observers.
    """
    rid = run_id or f"{cfg['scenario.technology']}_s{seed}"
    build = _Build(cfg, seed)
    if probe is not None:
        probe(build)
    horizon = s_to_us(cfg["scenario.horizon_s"])
    build.engine.run_until(horizon)
    build.collector.finalize()
    summary = metrics.summarize(build.collector, horizon)
    emitted, resolved = build.collector.conservation()
    if emitted != resolved:
        raise metrics.MetricsError(
            f"run {rid}: conservation broken, emitted {emitted} != resolved {resolved}")
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        metrics.write_packets_csv(out / "packets.csv", rid, build.collector)
        metrics.write_bursts_csv(out / "bursts.csv", rid, build.collector)
        metrics.write_error_csv(out / "error.csv", rid, build.collector)
    return RunResult(run_id=rid, seed=seed, summary=summary,
                     collector=build.collector, engine=build.engine)
