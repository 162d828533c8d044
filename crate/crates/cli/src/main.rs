// SPDX-License-Identifier: Apache-2.0

mod config;
mod inputs;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use modassert::graph::{extract_relationships, DesignGraph};
use modassert::llm::{
    write_transcript, Gateway, LiveBackend, LiveConfig, MockBackend, RecordBackend, ReplayBackend,
};
use modassert::mutation::{
    campaign_table, enumerate_mutations, run_campaign, AssertionSet, CampaignConfig, Mutation,
};
use modassert::pipeline::{
    artifact_text, assertions_sv, assertions_text, extract_module_spec, extract_verification_items,
    generate_deep_assertions, items_text, run_pipeline, write_bundle, ModuleSpec, SpecDocument,
    VerificationItem,
};
use modassert::report::{aggregate, render, Format, Merge, ReportOptions, SetEvidence};
use modassert::sim::{BuiltinSimulator, CommandSimulator, Simulator};
use modassert::sva::{parse_sva, validate, AssertionInput, VerdictReport};
use modassert::trace::{check_texts, parse_vcd, toggle_coverage, CheckOptions, Verdict, Waveform};
use modassert::verilog::{ast_json, load_design, PreprocessOptions, SourceUnit};
use serde::Deserialize;

use config::{Config, LlmMode};
use inputs::{load_assertions, parse_set_arg};

const EXIT_FAILURES: u8 = 1;
const EXIT_ERROR: u8 = 2;
const EXIT_USAGE: u8 = 64;

#[derive(Parser)]
#[command(name = "modassert", version, about = "Module-level assertion generation and checking for Verilog designs")]
#[command(after_help = "Any config key can be set from the command line as --section.key VALUE, e.g. --llm.mode mock.")]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone, Default)]
struct Design {
    /// RTL files or glob patterns (adds to paths.rtl).
    #[arg(long = "rtl")]
    rtl: Vec<String>,
    /// Output directory (overrides paths.out).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone, Default)]
struct Gen {
    #[command(flatten)]
    design: Design,
    /// Specification documents (adds to paths.spec).
    #[arg(long = "spec")]
    spec: Vec<PathBuf>,
    /// Restrict to these modules.
    #[arg(long = "module")]
    modules: Vec<String>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse the design and write its relationship graph.
    Analyze {
        #[command(flatten)]
        design: Design,
        /// Also write the parsed AST.
        #[arg(long)]
        ast: bool,
    },
    /// Extract a specification for each module.
    ExtractSpec(Gen),
    /// Derive verification items from extracted specifications.
    GenItems(Gen),
    /// Generate assertions from verification items.
    GenAssertions(Gen),
    /// Run all generation stages for every module.
    Pipeline(Gen),
    /// Check assertion syntax, naming and signal resolution.
    Validate {
        #[command(flatten)]
        design: Design,
        /// Assertion files (.sv, or assertions.v1 JSON).
        #[arg(long = "assertions", required = true)]
        assertions: Vec<String>,
    },
    /// Evaluate assertions on simulation waveforms.
    CheckTrace {
        #[command(flatten)]
        design: Design,
        #[arg(long = "assertions", required = true)]
        assertions: Vec<String>,
        #[arg(long = "vcd", required = true)]
        vcd: Vec<PathBuf>,
        /// Waveform scope of the design root, e.g. tb.dut.
        #[arg(long)]
        root_scope: Option<String>,
    },
    /// Sample mutations of the design.
    Mutate {
        #[command(flatten)]
        design: Design,
    },
    /// Simulate mutants and score assertion sets.
    Campaign {
        #[command(flatten)]
        design: Design,
        /// Assertion set as ID=FILE[,FILE...]; repeatable.
        #[arg(long = "set", required = true)]
        sets: Vec<String>,
        /// Stimulus (built-in simulator) or testbench (command template).
        #[arg(long)]
        testbench: Option<PathBuf>,
        /// Mutations from a previous `mutate` run instead of sampling.
        #[arg(long)]
        mutants: Option<PathBuf>,
    },
    /// Aggregate verdicts into metric rows.
    Report {
        #[command(flatten)]
        design: Design,
        /// Assertion set as ID=FILE[,FILE...]; repeatable.
        #[arg(long = "set")]
        sets: Vec<String>,
        /// Union row as ID=SET,SET[,...]; repeatable.
        #[arg(long = "merge")]
        merges: Vec<String>,
        #[arg(long = "vcd")]
        vcd: Vec<PathBuf>,
        #[arg(long)]
        root_scope: Option<String>,
        /// campaign.v1 result to take error coverage from.
        #[arg(long)]
        campaign: Option<PathBuf>,
        /// json, markdown or csv.
        #[arg(long, default_value = "markdown")]
        format: String,
        #[arg(long)]
        include_trivial: bool,
    },
}

struct Ctx {
    cfg: Config,
}

impl Ctx {
    fn out(&self, d: &Design) -> PathBuf {
        d.out.clone().unwrap_or_else(|| self.cfg.paths.out.clone())
    }

    fn rtl_paths(&self, d: &Design) -> Result<Vec<PathBuf>> {
        let patterns: Vec<&String> = self.cfg.paths.rtl.iter().chain(&d.rtl).collect();
        if patterns.is_empty() {
            bail!("no RTL given (use --rtl or paths.rtl)");
        }
        let mut out = Vec::new();
        for p in patterns {
            let mut hits: Vec<PathBuf> = glob::glob(p).with_context(|| format!("bad pattern `{p}`"))?.collect::<Result<_, _>>()?;
            if hits.is_empty() {
                bail!("`{p}` matches no files");
            }
            hits.sort();
            for h in hits {
                if !out.contains(&h) {
                    out.push(h);
                }
            }
        }
        Ok(out)
    }

    fn preprocess(&self) -> PreprocessOptions {
        PreprocessOptions {
            include_dirs: self.cfg.paths.include.clone(),
            defines: self.cfg.paths.defines.iter().map(|(k, v)| (k.clone(), v.clone())).collect(),
        }
    }

    fn unit(&self, d: &Design) -> Result<(Vec<PathBuf>, SourceUnit)> {
        let paths = self.rtl_paths(d)?;
        let unit = load_design(&paths, &self.preprocess())?;
        for diag in &unit.diagnostics {
            eprintln!("{diag}");
        }
        if unit.errors().next().is_some() {
            bail!("design has parse errors");
        }
        Ok((paths, unit))
    }

    fn graph(&self, unit: &SourceUnit) -> Result<DesignGraph> {
        Ok(extract_relationships(unit, self.cfg.root_override.as_deref())?)
    }

    fn spec_doc(&self, g: &Gen) -> Result<SpecDocument> {
        let paths: Vec<PathBuf> = self.cfg.paths.spec.iter().map(PathBuf::from).chain(g.spec.iter().cloned()).collect();
        if paths.is_empty() {
            bail!("no specification given (use --spec or paths.spec)");
        }
        Ok(SpecDocument::load(&paths)?)
    }

    fn gateway(&self) -> Result<Gateway> {
        let l = &self.cfg.llm;
        let live = || {
            LiveBackend::new(LiveConfig {
                base_url: l.base_url.clone(),
                model: l.model.clone(),
                timeout: std::time::Duration::from_secs(l.timeout_secs),
            })
        };
        let backend: Box<dyn modassert::llm::Backend> = match l.mode {
            LlmMode::Mock => Box::new(MockBackend),
            LlmMode::Live => Box::new(live()?),
            LlmMode::Replay => Box::new(ReplayBackend::open(l.transcript.as_deref().expect("validated"))?),
            LlmMode::Record => {
                let path = l.transcript.clone().unwrap_or_else(|| PathBuf::from("transcript.jsonl"));
                Box::new(RecordBackend::new(Box::new(live()?), &path)?)
            }
        };
        Ok(Gateway::with_limits(backend, l.retry_limit, l.max_inflight))
    }

    fn simulator(&self) -> Box<dyn Simulator> {
        match &self.cfg.mutate.sim_cmd_template {
            Some(t) => Box::new(CommandSimulator { template: t.clone() }),
            None => Box::new(BuiltinSimulator { root: self.cfg.root_override.clone(), preprocess: self.preprocess() }),
        }
    }

    fn check_options(&self, root_scope: Option<String>) -> CheckOptions {
        CheckOptions { root_scope, default_clock: None, clock_regex: Some(self.cfg.clock_regex()) }
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(d) = path.parent() {
        std::fs::create_dir_all(d).with_context(|| format!("creating {}", d.display()))?;
    }
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn json_text<T: serde::Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializes");
    s.push('\n');
    s
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn selected_modules(graph: &DesignGraph, g: &Gen) -> Result<Vec<String>> {
    let order = graph.children_first();
    for m in &g.modules {
        if !graph.has_module(m) {
            bail!("unknown module `{m}`");
        }
    }
    Ok(order.into_iter().filter(|m| g.modules.is_empty() || g.modules.contains(m)).collect())
}

#[derive(Deserialize)]
struct ItemsFile {
    items: Vec<VerificationItem>,
}

fn load_waves(paths: &[PathBuf]) -> Result<Vec<Waveform>> {
    paths.iter().map(|p| parse_vcd(p).with_context(|| format!("reading {}", p.display()))).collect()
}

/// Stage commands keep their own transcript next to the artifacts.
fn save_stage_transcript(gw: &Gateway, out: &Path, stage: &str) -> Result<()> {
    let path = out.join("transcripts").join(format!("{stage}.jsonl"));
    if let Some(d) = path.parent() {
        std::fs::create_dir_all(d)?;
    }
    write_transcript(&path, &gw.transcript())?;
    Ok(())
}

fn print_warnings(module: &str, warnings: &[String]) {
    for w in warnings {
        eprintln!("warning: {module}: {w}");
    }
}

fn run(cli: Cli, cfg: Config) -> Result<u8> {
    let ctx = Ctx { cfg };
    match cli.cmd {
        Cmd::Analyze { design, ast } => {
            let (_, unit) = ctx.unit(&design)?;
            let graph = ctx.graph(&unit)?;
            let out = ctx.out(&design);
            write(&out.join("design_graph.json"), &json_text(&graph.to_json()))?;
            if ast {
                write(&out.join("ast.json"), &json_text(&ast_json(&unit)))?;
            }
            println!("root {}: {} modules, {} instances", graph.root, graph.children_first().len(), graph.nodes.len());
        }
        Cmd::ExtractSpec(g) => {
            let (_, unit) = ctx.unit(&g.design)?;
            let graph = ctx.graph(&unit)?;
            let doc = ctx.spec_doc(&g)?;
            let (gw, pcfg, out) = (ctx.gateway()?, ctx.cfg.pipeline_config(), ctx.out(&g.design));
            let mut failed = false;
            for m in selected_modules(&graph, &g)? {
                let mut warnings = Vec::new();
                match extract_module_spec(&gw, &pcfg, &doc, &graph, &unit, &m, &mut warnings) {
                    Ok(spec) => write(&out.join("modules").join(&m).join("module_spec.json"), &artifact_text("module_spec.v1", &spec))?,
                    Err(e) => {
                        eprintln!("error: {m}: {e}");
                        failed = true;
                    }
                }
                print_warnings(&m, &warnings);
            }
            save_stage_transcript(&gw, &out, "extract-spec")?;
            return Ok(if failed { EXIT_FAILURES } else { 0 });
        }
        Cmd::GenItems(g) => {
            let (_, unit) = ctx.unit(&g.design)?;
            let graph = ctx.graph(&unit)?;
            let (gw, pcfg, out) = (ctx.gateway()?, ctx.cfg.pipeline_config(), ctx.out(&g.design));
            let mut failed = false;
            for m in selected_modules(&graph, &g)? {
                let dir = out.join("modules").join(&m);
                let spec_path = dir.join("module_spec.json");
                if !spec_path.exists() {
                    if !g.modules.is_empty() {
                        bail!("{} missing; run extract-spec first", spec_path.display());
                    }
                    continue;
                }
                let spec: ModuleSpec = read_json(&spec_path)?;
                let mut warnings = Vec::new();
                match extract_verification_items(&gw, &pcfg, &spec, &graph, &mut warnings) {
                    Ok(items) => write(&dir.join("items.json"), &items_text(&m, &items))?,
                    Err(e) => {
                        eprintln!("error: {m}: {e}");
                        failed = true;
                    }
                }
                print_warnings(&m, &warnings);
            }
            save_stage_transcript(&gw, &out, "gen-items")?;
            return Ok(if failed { EXIT_FAILURES } else { 0 });
        }
        Cmd::GenAssertions(g) => {
            let (_, unit) = ctx.unit(&g.design)?;
            let graph = ctx.graph(&unit)?;
            let (gw, pcfg, out) = (ctx.gateway()?, ctx.cfg.pipeline_config(), ctx.out(&g.design));
            let mut failed = false;
            for m in selected_modules(&graph, &g)? {
                let dir = out.join("modules").join(&m);
                let (spec_path, items_path) = (dir.join("module_spec.json"), dir.join("items.json"));
                if !spec_path.exists() || !items_path.exists() {
                    if !g.modules.is_empty() {
                        bail!("artifacts for `{m}` missing; run extract-spec and gen-items first");
                    }
                    continue;
                }
                let spec: ModuleSpec = read_json(&spec_path)?;
                let items: ItemsFile = read_json(&items_path)?;
                let mut warnings = Vec::new();
                match generate_deep_assertions(&gw, &pcfg, &spec, &items.items, &graph, &mut warnings) {
                    Ok(a) => {
                        write(&dir.join("assertions.json"), &assertions_text(&m, &a))?;
                        write(&dir.join("assertions.sv"), &assertions_sv(&m, &a))?;
                    }
                    Err(e) => {
                        eprintln!("error: {m}: {e}");
                        failed = true;
                    }
                }
                print_warnings(&m, &warnings);
            }
            save_stage_transcript(&gw, &out, "gen-assertions")?;
            return Ok(if failed { EXIT_FAILURES } else { 0 });
        }
        Cmd::Pipeline(g) => {
            let (_, unit) = ctx.unit(&g.design)?;
            let doc = ctx.spec_doc(&g)?;
            let gw = ctx.gateway()?;
            let filter = (!g.modules.is_empty()).then_some(g.modules.as_slice());
            let bundle = run_pipeline(&gw, &ctx.cfg.pipeline_config(), &doc, &unit, filter)?;
            let summary = write_bundle(&bundle, &ctx.out(&g.design))?;
            let mut failed = false;
            for m in &summary.modules {
                print_warnings(&m.module, &m.warnings);
                match &m.error {
                    Some(e) => {
                        eprintln!("error: {}: {e}", m.module);
                        failed = true;
                    }
                    None => println!("{}: {} items, {} assertions ({} syntax ok)", m.module, m.items, m.assertions, m.syntax_ok),
                }
            }
            return Ok(if failed { EXIT_FAILURES } else { 0 });
        }
        Cmd::Validate { design, assertions } => {
            let (_, unit) = ctx.unit(&design)?;
            let graph = ctx.graph(&unit)?;
            let inputs: Vec<AssertionInput> = load_assertions(&assertions)?
                .into_iter()
                .map(|(id, text)| AssertionInput { id, text })
                .collect();
            let report = VerdictReport::new(validate(&inputs, &graph));
            write(&ctx.out(&design).join("verdicts.json"), &json_text(&report))?;
            let valid = report.verdicts.iter().filter(|v| v.fully_valid()).count();
            println!("N={} S={} fully valid={}", report.n, report.s, valid);
            return Ok(if report.has_failures() { EXIT_FAILURES } else { 0 });
        }
        Cmd::CheckTrace { design, assertions, vcd, root_scope } => {
            let graph = if design.rtl.is_empty() && ctx.cfg.paths.rtl.is_empty() {
                None
            } else {
                Some(ctx.graph(&ctx.unit(&design)?.1)?)
            };
            let waves = load_waves(&vcd)?;
            let refs: Vec<&Waveform> = waves.iter().collect();
            let asserts = load_assertions(&assertions)?;
            let report = check_texts(&asserts, &refs, graph.as_ref(), &ctx.check_options(root_scope));
            write(&ctx.out(&design).join("trace_verdicts.json"), &json_text(&report))?;
            for e in &report.errors {
                eprintln!("error: {}: {}", e.id, e.message);
            }
            let fails = report.verdicts.iter().filter(|v| v.verdict == Verdict::Fail).count();
            println!("{} checked, {} failing, {} not checkable", report.verdicts.len(), fails, report.errors.len());
            return Ok(if fails > 0 || !report.errors.is_empty() { EXIT_FAILURES } else { 0 });
        }
        Cmd::Mutate { design } => {
            let (_, unit) = ctx.unit(&design)?;
            let muts = enumerate_mutations(&unit, ctx.cfg.mutate.budget, ctx.cfg.mutate.seed)?;
            write(&ctx.out(&design).join("mutants.json"), &json_text(&muts))?;
            println!("{} mutants", muts.len());
        }
        Cmd::Campaign { design, sets, testbench, mutants } => {
            let (_, unit) = ctx.unit(&design)?;
            let muts: Vec<Mutation> = match mutants {
                Some(p) => read_json(&p)?,
                None => enumerate_mutations(&unit, ctx.cfg.mutate.budget, ctx.cfg.mutate.seed)?,
            };
            let mut aset = Vec::new();
            for s in &sets {
                let (id, files) = parse_set_arg(s)?;
                aset.push(AssertionSet { id, assertions: load_assertions(&files)? });
            }
            let tb = testbench
                .or_else(|| ctx.cfg.mutate.testbench.clone())
                .context("no testbench given (use --testbench or mutate.testbench)")?;
            let out = ctx.out(&design);
            let ccfg = CampaignConfig {
                jobs: ctx.cfg.jobs(),
                timeout: ctx.cfg.sim_timeout(),
                root: ctx.cfg.root_override.clone(),
                check: ctx.check_options(None),
                workdir: out.join("campaign_work"),
            };
            let result = run_campaign(&unit, &muts, &aset, ctx.simulator().as_ref(), &tb, &ccfg)?;
            write(&out.join("campaign.json"), &json_text(&result))?;
            print!("{}", campaign_table(&result));
        }
        Cmd::Report { design, sets, merges, vcd, root_scope, campaign, format, include_trivial } => {
            let format: Format = format.parse()?;
            let campaign: Option<modassert::mutation::CampaignResult> = campaign.map(|p| read_json(&p)).transpose()?;
            let mut evidence = Vec::new();
            if !sets.is_empty() {
                let (_, unit) = ctx.unit(&design)?;
                let graph = ctx.graph(&unit)?;
                let waves = load_waves(&vcd)?;
                let refs: Vec<&Waveform> = waves.iter().collect();
                let opts = ctx.check_options(root_scope.clone());
                let mut parsed_sets = Vec::new();
                for s in &sets {
                    let (id, files) = parse_set_arg(s)?;
                    let asserts = load_assertions(&files)?;
                    let inputs: Vec<AssertionInput> =
                        asserts.iter().map(|(i, t)| AssertionInput { id: i.clone(), text: t.clone() }).collect();
                    let validation = validate(&inputs, &graph);
                    let trace = if refs.is_empty() {
                        vec![]
                    } else {
                        let ok: Vec<(String, String)> = validation
                            .iter()
                            .filter(|v| v.fully_valid())
                            .map(|v| (v.id.clone(), v.text.clone()))
                            .collect();
                        check_texts(&ok, &refs, Some(&graph), &opts).verdicts
                    };
                    let asts = validation.iter().filter(|v| v.fully_valid()).filter_map(|v| parse_sva(&v.text).ok()).collect();
                    parsed_sets.push((id.clone(), asts));
                    evidence.push(SetEvidence { design: graph.root.clone(), set_id: id, validation, trace, toggle: None });
                }
                if !refs.is_empty() {
                    for (e, t) in evidence.iter_mut().zip(toggle_coverage(&refs, &graph, &parsed_sets, root_scope.as_deref())) {
                        e.toggle = Some(t);
                    }
                }
            }
            let merges: Vec<Merge> = merges
                .iter()
                .map(|m| parse_set_arg(m).map(|(set_id, members)| Merge { set_id, members }))
                .collect::<Result<_>>()?;
            let rows = aggregate(&evidence, &merges, campaign.as_ref(), ReportOptions { include_trivial })?;
            let text = render(&rows, format);
            match &design.out {
                Some(dir) => {
                    let ext = match format {
                        Format::Json => "json",
                        Format::Markdown => "md",
                        Format::Csv => "csv",
                    };
                    write(&dir.join(format!("metrics.{ext}")), &text)?;
                }
                None => print!("{text}"),
            }
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().collect();
    let (args, overrides) = match config::split_overrides(args) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let cfg = match Config::load(cli.config.as_deref(), &overrides) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    match run(cli, cfg) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
