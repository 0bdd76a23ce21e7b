//! Scenario files: a TOML description of a network, its flows and what to
//! compute, plus the runner that turns one into CSV rows.
//!
//! See `scenarios/fig7_wcl.toml` in the repository for a fully commented
//! example of every section.

use std::fmt::Write as _;
use std::io;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use toml::Spanned;

use crate::analytics::{self, TdmParams};
use crate::engine::{self, CreditMode, Engine, SimConfig};
use crate::error::{NocError, Result};
use crate::model::{Address, Coord, FlowSpec, PortId, RateLaw, SizeLaw};
use crate::network::{build_mesh, dense_placement, CoreId, Network, RouterKind};

/// Builtin scenarios, shipped as files and embedded at compile time.
pub const BUILTINS: &[(&str, &str)] = &[
    (
        "fig5_analytic",
        include_str!("../../../scenarios/fig5_analytic.toml"),
    ),
    ("fig7_wcl", include_str!("../../../scenarios/fig7_wcl.toml")),
    (
        "fig9_compare",
        include_str!("../../../scenarios/fig9_compare.toml"),
    ),
    (
        "random_vbr",
        include_str!("../../../scenarios/random_vbr.toml"),
    ),
];

pub fn builtin(name: &str) -> Option<&'static str> {
    BUILTINS.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Analytic,
    Simulate,
    Both,
}

impl Mode {
    fn analytic(self) -> bool {
        matches!(self, Mode::Analytic | Mode::Both)
    }

    fn simulate(self) -> bool {
        matches!(self, Mode::Simulate | Mode::Both)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDef {
    name: String,
    mode: Mode,
    probe: Option<String>,
    #[serde(default = "default_duration")]
    duration: u64,
    #[serde(default)]
    seed: u64,
    #[serde(default = "default_clock")]
    clock_ns: f64,
    network: Option<NetworkDef>,
    #[serde(default)]
    flows: Vec<FlowDef>,
    sweep: Option<SweepDef>,
    analytic: Option<AnalyticDef>,
    random: Option<RandomDef>,
}

fn default_duration() -> u64 {
    1000
}

fn default_clock() -> f64 {
    10.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkDef {
    width: u32,
    height: u32,
    #[serde(default = "default_depth")]
    fifo_depth: usize,
    #[serde(default = "default_kind")]
    router_kind: RouterKind,
    #[serde(default = "default_drain")]
    drain_interval: u64,
    #[serde(default = "default_credit")]
    credit_mode: CreditMode,
    cores_per_router: Option<usize>,
    #[serde(default)]
    cores: Vec<CoreDef>,
}

fn default_depth() -> usize {
    4
}

fn default_kind() -> RouterKind {
    RouterKind::Rts
}

fn default_drain() -> u64 {
    1
}

fn default_credit() -> CreditMode {
    CreditMode::Flows
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct CoreDef {
    id: CoreId,
    router: [u32; 2],
    port: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct FlowDef {
    id: Spanned<String>,
    src: CoreId,
    dst: CoreId,
    size: SizeDef,
    rate: RateDef,
    #[serde(default)]
    data_base: u64,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(untagged)]
enum SizeDef {
    Fixed(u32),
    Range { min: u32, max: u32 },
}

impl From<SizeDef> for SizeLaw {
    fn from(s: SizeDef) -> Self {
        match s {
            SizeDef::Fixed(f) => SizeLaw::Fixed(f),
            SizeDef::Range { min, max } => SizeLaw::Uniform { min, max },
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case", deny_unknown_fields)]
enum RateDef {
    Saturating {
        #[serde(default)]
        start: u64,
    },
    Periodic {
        period: u64,
        #[serde(default)]
        phase: u64,
    },
    SingleShot {
        at: u64,
    },
    Silent,
}

impl From<RateDef> for RateLaw {
    fn from(r: RateDef) -> Self {
        match r {
            RateDef::Saturating { start } => RateLaw::Saturating { start },
            RateDef::Periodic { period, phase } => RateLaw::Periodic { period, phase },
            RateDef::SingleShot { at } => RateLaw::SingleShot { at },
            RateDef::Silent => RateLaw::Silent,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepDef {
    loads: Option<Vec<f64>>,
    from: Option<f64>,
    to: Option<f64>,
    step: Option<f64>,
}

impl SweepDef {
    fn points(&self) -> Result<Vec<f64>> {
        let pts = match (&self.loads, self.from, self.to, self.step) {
            (Some(l), None, None, None) => l.clone(),
            (None, Some(from), Some(to), Some(step)) if step > 0.0 && to >= from => {
                let n = ((to - from) / step + 1e-9).floor() as usize;
                // Rounded so that textual output is stable.
                (0..=n)
                    .map(|i| ((from + i as f64 * step) * 1e6).round() / 1e6)
                    .collect()
            }
            _ => return Err(NocError::Config(
                "sweep needs either `loads` or all of `from`, `to`, `step` (step > 0, to >= from)"
                    .into(),
            )),
        };
        if pts.is_empty() {
            return Err(NocError::Config("sweep has no load points".into()));
        }
        if let Some(bad) = pts.iter().find(|l| !(0.0..=1.0).contains(*l)) {
            return Err(NocError::Config(format!("load point {bad} outside [0, 1]")));
        }
        Ok(pts)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
enum AnalyticDef {
    /// Wormhole best-effort latency against interleaving latency over the
    /// sweep's loads.
    InterleaveVsWormhole {
        hops: u32,
        router_delay: f64,
        flits: f64,
        contenders: u32,
        bandwidth: f64,
    },
    /// TDM best-effort latency, with and without slot reuse, against the
    /// interleaving network's best and worst case.
    TdmComparison {
        tdm_hops: u32,
        tdm_router_delay: f64,
        rts_hops: u32,
        flits: u32,
        slots: u32,
        packets: u32,
        period: u32,
        slot_cycles: u32,
        gs_flows: u32,
        gs_utilization: f64,
        rts_contenders: Vec<u32>,
        rts_dest_contenders: u32,
        fifo_depth: u64,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RandomDef {
    flows: usize,
    size_min: u32,
    size_max: u32,
    period_min: u64,
    period_max: u64,
    seeds: Vec<u64>,
}

/// Command-line adjustments applied on top of a scenario file.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub duration: Option<u64>,
    pub clock_ns: Option<f64>,
}

/// A parsed, structurally valid scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    def: Resolved,
}

#[derive(Debug, Clone)]
struct Resolved {
    name: String,
    mode: Mode,
    probe: Option<String>,
    duration: u64,
    seed: u64,
    clock_ns: f64,
    network: Option<NetworkDef>,
    flows: Vec<FlowSpec>,
    sweep: Option<Vec<f64>>,
    analytic: Option<AnalyticDef>,
    random: Option<RandomDef>,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

impl Scenario {
    /// Parses and checks a scenario. Errors carry the line they refer to.
    pub fn parse(text: &str) -> Result<Self> {
        let raw: ScenarioDef = toml::from_str(text)
            .map_err(|e| NocError::Config(e.to_string().trim_end().to_string()))?;
        let sweep = raw.sweep.as_ref().map(SweepDef::points).transpose()?;
        if raw.clock_ns.is_nan() || raw.clock_ns <= 0.0 {
            return Err(NocError::Config(format!(
                "clock_ns must be positive, got {}",
                raw.clock_ns
            )));
        }
        if raw.duration == 0 {
            return Err(NocError::Config("duration must be positive".into()));
        }
        let net = raw.network.as_ref().map(build_network).transpose()?;
        let mut flows = Vec::with_capacity(raw.flows.len());
        for f in &raw.flows {
            let line = line_of(text, f.id.span().start);
            let id = f.id.get_ref().clone();
            let err = |msg: String| NocError::Config(format!("line {line}: flow `{id}`: {msg}"));
            if id.is_empty()
                || !id
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || "_-.:".contains(c))
            {
                return Err(err("ids may use only letters, digits and `_-.:`".into()));
            }
            let net = net
                .as_ref()
                .ok_or_else(|| err("flows need a [network] section".into()))?;
            let addr = |core: CoreId| {
                net.core_address(core)
                    .ok_or_else(|| err(format!("no core {core} in the network")))
            };
            let spec = FlowSpec::new(
                id.clone(),
                addr(f.src)?,
                addr(f.dst)?,
                f.size.into(),
                f.rate.into(),
            )
            .with_data_base(f.data_base);
            spec.validate().map_err(|e| err(e.to_string()))?;
            if flows.iter().any(|g: &FlowSpec| g.id == id) {
                return Err(err("duplicate flow id".into()));
            }
            flows.push(spec);
        }
        let def = Resolved {
            name: raw.name,
            mode: raw.mode,
            probe: raw.probe,
            duration: raw.duration,
            seed: raw.seed,
            clock_ns: raw.clock_ns,
            network: raw.network,
            flows,
            sweep,
            analytic: raw.analytic,
            random: raw.random,
        };
        let s = Scenario { def };
        s.check_shape()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| NocError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            NocError::Config(m) => NocError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Resolves a builtin name or a file path.
    pub fn resolve(name_or_path: &str) -> Result<Self> {
        match builtin(name_or_path) {
            Some(text) => Self::parse(text),
            None => Self::load(Path::new(name_or_path)),
        }
    }

    pub fn name(&self) -> &str {
        &self.def.name
    }

    pub fn mode(&self) -> Mode {
        self.def.mode
    }

    pub fn flows(&self) -> &[FlowSpec] {
        &self.def.flows
    }

    pub fn probe(&self) -> Option<&str> {
        self.def.probe.as_deref()
    }

    pub fn apply(&mut self, o: Overrides) -> Result<()> {
        if let Some(s) = o.seed {
            self.def.seed = s;
            if let Some(r) = &mut self.def.random {
                r.seeds = vec![s];
            }
        }
        if let Some(d) = o.duration {
            if d == 0 {
                return Err(NocError::Config("duration must be positive".into()));
            }
            self.def.duration = d;
        }
        if let Some(c) = o.clock_ns {
            if c.is_nan() || c <= 0.0 {
                return Err(NocError::Config(format!(
                    "clock_ns must be positive, got {c}"
                )));
            }
            self.def.clock_ns = c;
        }
        Ok(())
    }

    fn check_shape(&self) -> Result<()> {
        let d = &self.def;
        let cfg = |m: &str| Err(NocError::Config(format!("scenario `{}`: {m}", d.name)));
        if d.mode.analytic() && d.analytic.is_none() && d.flows.is_empty() {
            return cfg("analytic mode needs an [analytic] section or flows");
        }
        if d.mode.simulate() && d.random.is_none() && d.flows.is_empty() {
            return cfg("simulate mode needs flows or a [random] section");
        }
        if (d.random.is_some() || !d.flows.is_empty()) && d.network.is_none() {
            return cfg("flows need a [network] section");
        }
        if !d.flows.is_empty() {
            match &d.probe {
                None => return cfg("a probe flow id is required when flows are listed"),
                Some(p) if !d.flows.iter().any(|f| &f.id == p) => {
                    return cfg(&format!("probe `{p}` is not a declared flow"))
                }
                _ => {}
            }
        }
        if let Some(AnalyticDef::InterleaveVsWormhole { .. } | AnalyticDef::TdmComparison { .. }) =
            d.analytic
        {
            if d.sweep.is_none() {
                return cfg("analytic curves need a [sweep] section");
            }
        }
        if let Some(r) = &d.random {
            if r.seeds.is_empty() || r.flows == 0 {
                return cfg("[random] needs at least one seed and one flow");
            }
            if r.size_min == 0
                || r.size_min > r.size_max
                || r.period_min == 0
                || r.period_min > r.period_max
            {
                return cfg("[random] ranges need 1 <= min <= max");
            }
            if d.network
                .as_ref()
                .and_then(|n| n.cores_per_router)
                .is_none()
            {
                return cfg("[random] needs `cores_per_router` in [network]");
            }
        }
        Ok(())
    }

    fn sim_config(&self, net: Network, flows: Vec<FlowSpec>, seed: u64) -> SimConfig {
        let n = self.def.network.as_ref().expect("checked");
        SimConfig {
            network: net,
            flows,
            duration: self.def.duration,
            seed,
            clock_ns: self.def.clock_ns,
            credit_mode: n.credit_mode,
        }
    }

    /// The simulation configurations this scenario runs: one for explicit
    /// flows, one per seed for generated traffic.
    pub fn sim_configs(&self) -> Result<Vec<(String, SimConfig)>> {
        let d = &self.def;
        let Some(ndef) = &d.network else {
            return Ok(Vec::new());
        };
        let net = build_network(ndef)?;
        if let Some(r) = &d.random {
            return r
                .seeds
                .iter()
                .map(|&seed| {
                    let flows = random_flows(&net, r, seed)?;
                    Ok((
                        format!("seed{seed}:"),
                        self.sim_config(net.clone(), flows, seed),
                    ))
                })
                .collect();
        }
        Ok(vec![(
            String::new(),
            self.sim_config(net, d.flows.clone(), d.seed),
        )])
    }

    /// Full check without running anything.
    pub fn validate(&self) -> Result<Validation> {
        let mut v = Validation::default();
        for (_, cfg) in self.sim_configs()? {
            cfg.validate()?;
        }
        if let Some(p) = &self.def.probe {
            let cfg = &self.sim_configs()?[0].1;
            let idx = cfg.flow_index(p).expect("probe checked at parse time");
            let prof = cfg.network.contention_profile(&cfg.flows, idx)?;
            let wcl = analytics::wcl_for_flow(&cfg.network, &cfg.flows, idx)?;
            v.probe = Some(ProbeReport {
                id: p.clone(),
                n: prof.n,
                k: prof.k,
                h_path: prof.h_path,
                wcl: wcl.total(),
            });
        }
        if let Some(a) = &self.def.analytic {
            analytic_rows(self, a)?;
        }
        Ok(v)
    }

    /// Runs every mode the scenario asks for.
    pub fn run(&self) -> Result<Report> {
        let mut report = Report {
            name: self.def.name.clone(),
            ..Report::default()
        };
        if self.def.mode.analytic() {
            if let Some(a) = &self.def.analytic {
                report.rows.extend(analytic_rows(self, a)?);
            } else {
                for (prefix, cfg) in self.sim_configs()? {
                    for (i, w) in cfg.wcl_table()?.iter().enumerate() {
                        report.rows.push(ResultRow {
                            wcl_cycles: Some(w.total() as f64),
                            ..ResultRow::new(
                                &self.def.name,
                                "analytic",
                                None,
                                format!("{prefix}{}", cfg.flows[i].id),
                            )
                        });
                    }
                }
            }
        }
        if self.def.mode.simulate() {
            for (prefix, cfg) in self.sim_configs()? {
                self.simulate(&prefix, &cfg, &mut report)?;
            }
        }
        report.rows.sort_by(|a, b| {
            let la = a.offered_load.unwrap_or(-1.0);
            let lb = b.offered_load.unwrap_or(-1.0);
            la.total_cmp(&lb)
                .then_with(|| a.mode.cmp(b.mode))
                .then_with(|| a.flow.cmp(&b.flow))
        });
        Ok(report)
    }

    fn simulate(&self, prefix: &str, cfg: &SimConfig, report: &mut Report) -> Result<()> {
        let name = &self.def.name;
        let wcl: Vec<u64> = cfg.wcl_table()?.iter().map(|w| w.total()).collect();
        let mut e = Engine::new(cfg)?;
        while e.now() < cfg.duration {
            e.step()?;
            let (gen, queued, routers, rx, consumed) = e.flit_census();
            if gen != queued + routers + rx + consumed {
                report.violations.push(format!(
                    "{prefix}cycle {}: flit conservation broken",
                    e.now()
                ));
                break;
            }
        }
        let m = e.into_metrics();
        report.packets += m.packets.len() as u64;
        if m.order_violations > 0 {
            report.violations.push(format!(
                "{prefix}{} flits delivered out of order",
                m.order_violations
            ));
        }
        if cfg.network.kind() == RouterKind::Rts {
            for (p, bound) in m.bound_violations(&wcl) {
                report.violations.push(format!(
                    "{prefix}{} packet {}: latency {} exceeds bound {bound}",
                    cfg.flows[p.flow].id,
                    p.packet,
                    p.packet_latency()
                ));
            }
        }
        for (i, f) in cfg.flows.iter().enumerate() {
            let s = m.flow_stats(i);
            if s.packets == 0 {
                continue;
            }
            report.rows.push(ResultRow {
                avg_latency_cycles: Some(s.avg_latency),
                max_latency_cycles: Some(s.max_latency as f64),
                wcl_cycles: Some(wcl[i] as f64),
                throughput_flits_per_cycle: Some(s.throughput),
                latency_ns: Some(s.max_latency as f64 * cfg.clock_ns),
                ..ResultRow::new(name, "simulate", None, format!("{prefix}{}", f.id))
            });
        }
        if let Some(p) = self.def.probe.as_deref() {
            let idx = cfg.flow_index(p).expect("probe checked at parse time");
            let mut line = format!("probe {p}: wcl {}", wcl[idx]);
            match m
                .flow_packets(idx)
                .max_by_key(|r| (r.packet_latency(), r.header_latency()))
            {
                Some(r) => {
                    let _ = write!(
                        line,
                        ", observed header latency {} ({} ns), packet latency {} ({} ns)",
                        r.header_latency(),
                        r.header_latency() as f64 * cfg.clock_ns,
                        r.packet_latency(),
                        r.packet_latency() as f64 * cfg.clock_ns
                    );
                }
                None => line.push_str(", no packet delivered"),
            }
            report.summary.push(line);
            if let Some(loads) = &self.def.sweep {
                for row in engine::offered_load_sweep(cfg, p, loads)? {
                    if row.unreachable {
                        report.summary.push(format!(
                            "load {}: competitors reached only {:.3}",
                            row.offered_load, row.achieved_load
                        ));
                    }
                    report.rows.push(ResultRow {
                        avg_latency_cycles: Some(row.avg_latency),
                        max_latency_cycles: Some(row.max_latency as f64),
                        wcl_cycles: Some(wcl[idx] as f64),
                        latency_ns: Some(row.max_latency as f64 * cfg.clock_ns),
                        ..ResultRow::new(name, "simulate", Some(row.offered_load), p.to_string())
                    });
                }
            }
        }
        Ok(())
    }
}

fn build_network(n: &NetworkDef) -> Result<Network> {
    let placements = match (n.cores_per_router, n.cores.is_empty()) {
        (Some(per), true) => dense_placement(n.width, n.height, per)?,
        (None, false) => n
            .cores
            .iter()
            .map(|c| {
                let port: PortId = c.port.parse()?;
                Ok((
                    c.id,
                    Address::new(Coord::new(c.router[0], c.router[1]), port),
                ))
            })
            .collect::<Result<Vec<_>>>()?,
        _ => {
            return Err(NocError::Config(
                "[network] needs exactly one of `cores_per_router` or `[[network.cores]]`".into(),
            ))
        }
    };
    let mut net = build_mesh(n.width, n.height, &placements, n.fifo_depth, n.router_kind)?;
    net.set_drain_interval(n.drain_interval)?;
    Ok(net)
}

/// Seeded random flows: uniform sizes, periodic sources with random phase,
/// uniformly chosen distinct endpoints.
fn random_flows(net: &Network, r: &RandomDef, seed: u64) -> Result<Vec<FlowSpec>> {
    let cores: Vec<Address> = net.cores().values().copied().collect();
    if cores.len() < 2 {
        return Err(NocError::Config(
            "random traffic needs at least two cores".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..r.flows)
        .map(|i| {
            let src = cores[rng.gen_range(0..cores.len())];
            let dst = loop {
                let d = cores[rng.gen_range(0..cores.len())];
                if d != src {
                    break d;
                }
            };
            let period = rng.gen_range(r.period_min..=r.period_max);
            let phase = rng.gen_range(0..period);
            FlowSpec::new(
                format!("v{i:02}"),
                src,
                dst,
                SizeLaw::Uniform {
                    min: r.size_min,
                    max: r.size_max,
                },
                RateLaw::Periodic { period, phase },
            )
            .with_data_base((i as u64) << 8)
        })
        .collect())
}

fn analytic_rows(s: &Scenario, a: &AnalyticDef) -> Result<Vec<ResultRow>> {
    let name = &s.def.name;
    let loads = s.def.sweep.as_deref().unwrap_or(&[]);
    let mut rows = Vec::new();
    let mut push = |load: f64, flow: &str, v: f64, wcl: Option<f64>| {
        rows.push(ResultRow {
            avg_latency_cycles: Some(v),
            max_latency_cycles: Some(v),
            wcl_cycles: wcl,
            latency_ns: Some(v * s.def.clock_ns),
            ..ResultRow::new(name, "analytic", Some(load), flow.to_string())
        })
    };
    match a {
        AnalyticDef::InterleaveVsWormhole {
            hops,
            router_delay,
            flits,
            contenders,
            bandwidth,
        } => {
            for &x in loads {
                if x < 1.0 {
                    let be = analytics::latency_wormhole_be(
                        *hops,
                        *router_delay,
                        *flits,
                        *bandwidth,
                        x * bandwidth,
                    )?;
                    push(x, "wormhole_be", be, None);
                }
                let il = analytics::latency_interleave(
                    *hops,
                    *router_delay,
                    *contenders,
                    *flits,
                    *bandwidth,
                )?;
                push(x, "interleave", il, None);
            }
        }
        AnalyticDef::TdmComparison {
            tdm_hops,
            tdm_router_delay,
            rts_hops,
            flits,
            slots,
            packets,
            period,
            slot_cycles,
            gs_flows,
            gs_utilization,
            rts_contenders,
            rts_dest_contenders,
            fifo_depth,
        } => {
            if rts_contenders.len() != *rts_hops as usize {
                return Err(NocError::Config(format!(
                    "rts_contenders lists {} hops, rts_hops is {rts_hops}",
                    rts_contenders.len()
                )));
            }
            let base = TdmParams {
                slots: *slots,
                packets: *packets,
                period: *period,
                slot_cycles: *slot_cycles,
                gs_flows: *gs_flows,
                gs_utilization: *gs_utilization,
                slot_reuse: false,
            };
            let rts_min = (analytics::GRANT_PERIOD * (*rts_hops as u64 + *flits as u64 - 1)) as f64;
            let rts_max =
                analytics::packet_wcl(rts_contenders, *rts_dest_contenders, *flits, *fifo_depth)?
                    as f64;
            for &x in loads {
                for (label, reuse) in [("tdm_be_reuse_off", false), ("tdm_be_reuse_on", true)] {
                    let p = TdmParams {
                        slot_reuse: reuse,
                        ..base
                    };
                    let b = analytics::tdm_be_bandwidth(&p)?;
                    if x < 1.0 {
                        let v = analytics::tdm_be_latency(
                            *tdm_hops,
                            *tdm_router_delay,
                            *flits,
                            &p,
                            x * b,
                        )?;
                        push(x, label, v, None);
                    }
                }
                push(x, "rts_min", rts_min, None);
                push(x, "rts_max", rts_max, Some(rts_max));
            }
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ProbeReport {
    pub id: String,
    pub n: Vec<u32>,
    pub k: u32,
    pub h_path: u32,
    pub wcl: u64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Validation {
    pub probe: Option<ProbeReport>,
}

/// One CSV line.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub scenario: String,
    pub mode: &'static str,
    pub offered_load: Option<f64>,
    pub flow: String,
    pub avg_latency_cycles: Option<f64>,
    pub max_latency_cycles: Option<f64>,
    pub wcl_cycles: Option<f64>,
    pub throughput_flits_per_cycle: Option<f64>,
    pub latency_ns: Option<f64>,
}

impl ResultRow {
    fn new(scenario: &str, mode: &'static str, load: Option<f64>, flow: String) -> Self {
        Self {
            scenario: scenario.to_string(),
            mode,
            offered_load: load,
            flow,
            avg_latency_cycles: None,
            max_latency_cycles: None,
            wcl_cycles: None,
            throughput_flits_per_cycle: None,
            latency_ns: None,
        }
    }
}

pub const CSV_HEADER: [&str; 9] = [
    "scenario",
    "mode",
    "offered_load",
    "flow",
    "avg_latency_cycles",
    "max_latency_cycles",
    "wcl_cycles",
    "throughput_flits_per_cycle",
    "latency_ns",
];

fn num(v: Option<f64>) -> String {
    match v {
        None => String::new(),
        Some(v) if v.fract() == 0.0 && v.abs() < 1e15 => format!("{}", v as i64),
        Some(v) => {
            let s = format!("{v:.6}");
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        }
    }
}

/// Writes `rows` as CSV with a header line.
pub fn write_csv<W: io::Write>(rows: &[ResultRow], out: W) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.scenario.clone(),
            r.mode.to_string(),
            num(r.offered_load),
            r.flow.clone(),
            num(r.avg_latency_cycles),
            num(r.max_latency_cycles),
            num(r.wcl_cycles),
            num(r.throughput_flits_per_cycle),
            num(r.latency_ns),
        ])?;
    }
    w.flush()
}

/// Everything a run produced.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub name: String,
    pub rows: Vec<ResultRow>,
    pub summary: Vec<String>,
    /// Broken invariants; empty on a clean run.
    pub violations: Vec<String>,
    pub packets: u64,
}

impl Report {
    pub fn rows_for(&self, mode: &str) -> Vec<ResultRow> {
        self.rows
            .iter()
            .filter(|r| r.mode == mode)
            .cloned()
            .collect()
    }

    pub fn csv(&self, mode: &str) -> String {
        let mut buf = Vec::new();
        write_csv(&self.rows_for(mode), &mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("CSV is UTF-8")
    }
}
