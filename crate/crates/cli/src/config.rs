//! Flat key-value run configuration.
//!
//! The document format is line-oriented: `key = value`, one pair per line,
//! `#` starts a comment, blank lines are ignored. Sections are spelled with
//! dotted keys (`domain.kind`, `spec.p`, `quad.seed`). A handful of top-level
//! aliases keep small documents small: `N`, `p`, `q`, `s`, `tau` stand for
//! `domain.dim`, `spec.p`, `spec.q`, `spec.s`, `spec.tau`.
//!
//! Parsing is strict: unknown keys, duplicate keys, and keys a command does
//! not use are all rejected with the offending line number. Every run echoes
//! the fully resolved key set (defaults filled in) into its report so a
//! result can be reproduced from the report alone.

use std::collections::{BTreeMap, BTreeSet};

use fracnorm::{
    default_s_sequence, Domain, Point, QuadratureConfig, SamplingPlan, SeminormSpec,
    StudyControls, TestFunction, Truncation, Variant,
};

/// A configuration or usage error, with the line it came from when known.
#[derive(Debug)]
pub struct ConfigError {
    pub message: String,
}

impl ConfigError {
    fn new(message: impl Into<String>) -> Self {
        ConfigError {
            message: message.into(),
        }
    }
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for ConfigError {}

type Result<T> = std::result::Result<T, ConfigError>;

fn err<T>(message: impl Into<String>) -> Result<T> {
    Err(ConfigError::new(message))
}

/// The eight run modes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Seminorm,
    Study,
    Pointwise,
    Embedding,
    Detect,
    Tails,
    DoubleLimit,
    Constant,
}

impl Command {
    pub fn as_str(&self) -> &'static str {
        match self {
            Command::Seminorm => "seminorm",
            Command::Study => "study",
            Command::Pointwise => "pointwise",
            Command::Embedding => "embedding",
            Command::Detect => "detect",
            Command::Tails => "tails",
            Command::DoubleLimit => "double-limit",
            Command::Constant => "constant",
        }
    }

    fn parse(text: &str) -> Result<Self> {
        Ok(match text {
            "seminorm" => Command::Seminorm,
            "study" => Command::Study,
            "pointwise" => Command::Pointwise,
            "embedding" => Command::Embedding,
            "detect" => Command::Detect,
            "tails" => Command::Tails,
            "double-limit" | "double_limit" => Command::DoubleLimit,
            "constant" => Command::Constant,
            other => {
                return err(format!(
                    "unknown command '{other}' (expected one of seminorm, study, pointwise, \
                     embedding, detect, tails, double-limit, constant)"
                ))
            }
        })
    }
}

/// Raw parsed document: key -> (value, line number), with used-key tracking
/// so leftovers can be reported precisely.
struct Doc {
    entries: BTreeMap<String, (String, usize)>,
    used: BTreeSet<String>,
}

impl Doc {
    fn parse(text: &str) -> Result<Doc> {
        let mut entries: BTreeMap<String, (String, usize)> = BTreeMap::new();
        for (idx, raw_line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = match raw_line.find('#') {
                Some(pos) => &raw_line[..pos],
                None => raw_line,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let Some(eq) = line.find('=') else {
                return err(format!("line {line_no}: expected 'key = value', got '{line}'"));
            };
            let key = line[..eq].trim().to_string();
            let value = line[eq + 1..].trim().to_string();
            if key.is_empty() {
                return err(format!("line {line_no}: empty key"));
            }
            if let Some((_, first)) = entries.get(&key) {
                return err(format!(
                    "line {line_no}: duplicate key '{key}' (first set on line {first})"
                ));
            }
            entries.insert(key, (value, line_no));
        }
        let mut doc = Doc {
            entries,
            used: BTreeSet::new(),
        };
        doc.expand_aliases()?;
        Ok(doc)
    }

    /// Rewrite the short top-level spellings to their dotted homes.
    fn expand_aliases(&mut self) -> Result<()> {
        const ALIASES: [(&str, &str); 5] = [
            ("N", "domain.dim"),
            ("p", "spec.p"),
            ("q", "spec.q"),
            ("s", "spec.s"),
            ("tau", "spec.tau"),
        ];
        for (short, full) in ALIASES {
            if let Some((value, line)) = self.entries.remove(short) {
                if let Some((_, other)) = self.entries.get(full) {
                    return err(format!(
                        "line {line}: '{short}' is an alias of '{full}', which is also set \
                         (line {other})"
                    ));
                }
                self.entries.insert(full.to_string(), (value, line));
            }
        }
        Ok(())
    }

    fn get(&mut self, key: &str) -> Option<String> {
        if self.entries.contains_key(key) {
            self.used.insert(key.to_string());
        }
        self.entries.get(key).map(|(v, _)| v.clone())
    }

    fn line(&self, key: &str) -> usize {
        self.entries.get(key).map(|(_, l)| *l).unwrap_or(0)
    }

    fn require(&mut self, key: &str) -> Result<String> {
        match self.get(key) {
            Some(v) => Ok(v),
            None => err(format!("missing required key '{key}'")),
        }
    }

    fn get_f64(&mut self, key: &str) -> Result<Option<f64>> {
        let Some(text) = self.get(key) else {
            return Ok(None);
        };
        let line = self.line(key);
        parse_f64(&text)
            .map(Some)
            .map_err(|e| ConfigError::new(format!("line {line}: {key}: {e}")))
    }

    fn require_f64(&mut self, key: &str) -> Result<f64> {
        match self.get_f64(key)? {
            Some(v) => Ok(v),
            None => err(format!("missing required key '{key}'")),
        }
    }

    fn get_usize(&mut self, key: &str) -> Result<Option<usize>> {
        let Some(text) = self.get(key) else {
            return Ok(None);
        };
        let line = self.line(key);
        text.parse::<usize>()
            .map(Some)
            .map_err(|_| ConfigError::new(format!("line {line}: {key}: expected a nonnegative integer, got '{text}'")))
    }

    fn get_u64(&mut self, key: &str) -> Result<Option<u64>> {
        let Some(text) = self.get(key) else {
            return Ok(None);
        };
        let line = self.line(key);
        text.parse::<u64>()
            .map(Some)
            .map_err(|_| ConfigError::new(format!("line {line}: {key}: expected a nonnegative integer, got '{text}'")))
    }

    fn get_coords(&mut self, key: &str) -> Result<Option<Vec<f64>>> {
        let Some(text) = self.get(key) else {
            return Ok(None);
        };
        let line = self.line(key);
        parse_coords(&text)
            .map(Some)
            .map_err(|e| ConfigError::new(format!("line {line}: {key}: {e}")))
    }

    fn require_point(&mut self, key: &str) -> Result<Point> {
        let line = self.line(key);
        let coords = match self.get_coords(key)? {
            Some(c) => c,
            None => return err(format!("missing required key '{key}'")),
        };
        Point::new(&coords)
            .map_err(|e| ConfigError::new(format!("line {line}: {key}: {e}")))
    }

    /// Error out if any key was never consumed by the active command.
    fn finish(self) -> Result<()> {
        let mut leftovers: Vec<String> = Vec::new();
        for (key, (_, line)) in &self.entries {
            if !self.used.contains(key) {
                leftovers.push(format!("'{key}' (line {line})"));
            }
        }
        if leftovers.is_empty() {
            Ok(())
        } else {
            err(format!(
                "unknown or unused key(s) for this command: {}",
                leftovers.join(", ")
            ))
        }
    }
}

fn parse_f64(text: &str) -> std::result::Result<f64, String> {
    let lowered = text.to_ascii_lowercase();
    if lowered == "inf" || lowered == "infinity" {
        return Ok(f64::INFINITY);
    }
    text.parse::<f64>()
        .map_err(|_| format!("expected a number, got '{text}'"))
}

fn parse_coords(text: &str) -> std::result::Result<Vec<f64>, String> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    if parts.is_empty() || parts.iter().any(|p| p.is_empty()) {
        return Err(format!("expected comma-separated numbers, got '{text}'"));
    }
    parts.iter().map(|p| parse_f64(p)).collect()
}

/// Shortest faithful text for a float, used when echoing resolved values.
pub fn fmt_f64(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v}")
    }
}

fn fmt_coords(coords: &[f64]) -> String {
    coords
        .iter()
        .map(|&c| fmt_f64(c))
        .collect::<Vec<_>>()
        .join(",")
}

/// The spec block with the sweep resolved.
#[derive(Debug)]
pub struct SpecConfig {
    pub p: f64,
    pub q: f64,
    pub tau: f64,
    pub r_cap: f64,
    pub variant: Variant,
    /// Single-s commands use this.
    pub s: Option<f64>,
    /// Sweep commands use this.
    pub s_values: Vec<f64>,
}

impl SpecConfig {
    pub fn seminorm_spec(&self, s: f64) -> std::result::Result<SeminormSpec, fracnorm::Error> {
        SeminormSpec::new(s, self.p, self.q, self.tau, self.r_cap, self.variant)
    }
}

/// Everything a run needs, validated and with defaults filled in.
#[derive(Debug)]
pub struct RunConfig {
    pub command: Command,
    pub domain: Option<Domain>,
    pub dim: usize,
    pub function: Option<TestFunction>,
    pub spec: SpecConfig,
    pub quad: QuadratureConfig,
    pub plan: SamplingPlan,
    pub controls: StudyControls,
    pub seed: u64,
    pub points: Vec<Point>,
    pub tail_indices: Vec<u32>,
    pub lambdas: Vec<f64>,
    pub verbosity: u64,
    pub formats: OutputFormats,
    /// `output.path` from the document; the `--out` flag wins over it.
    pub out_path: Option<String>,
    /// Regime notes collected while resolving; emitted in-band in the report.
    pub warnings: Vec<String>,
    /// The fully resolved flat key set, echoed into every report.
    pub echo: BTreeMap<String, String>,
}

/// Which artifact families to write.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormats {
    Csv,
    Json,
    Both,
}

impl OutputFormats {
    pub fn csv(&self) -> bool {
        matches!(self, OutputFormats::Csv | OutputFormats::Both)
    }
    pub fn json(&self) -> bool {
        matches!(self, OutputFormats::Json | OutputFormats::Both)
    }
}

fn variant_name(v: Variant) -> &'static str {
    match v {
        Variant::Full => "full",
        Variant::Tilde => "tilde",
        Variant::Hat => "hat",
    }
}

/// Parse and resolve a configuration document. `seed_override` is the
/// `--seed` flag, which wins over `quad.seed`.
pub fn parse_config(text: &str, seed_override: Option<u64>) -> Result<RunConfig> {
    let mut doc = Doc::parse(text)?;
    let command = Command::parse(&doc.require("command")?)?;
    let mut echo: BTreeMap<String, String> = BTreeMap::new();
    let mut warnings: Vec<String> = Vec::new();
    echo.insert("command".into(), command.as_str().into());

    // --- domain -----------------------------------------------------------
    let needs_domain = command != Command::Constant;
    let (domain, dim) = if needs_domain {
        let (d, described) = parse_domain(&mut doc, &mut echo)?;
        let dim = d.dim();
        echo.insert("domain.kind".into(), described);
        (Some(d), dim)
    } else {
        let dim = match doc.get_usize("domain.dim")? {
            Some(d) => d,
            None => return err("missing required key 'domain.dim' (alias 'N')"),
        };
        echo.insert("domain.dim".into(), dim.to_string());
        (None, dim)
    };

    // --- function ---------------------------------------------------------
    let function = if command == Command::Constant {
        None
    } else {
        let f = parse_function(&mut doc, &mut echo)?;
        f.validate_for_dim(dim)
            .map_err(|e| ConfigError::new(format!("function: {e}")))?;
        Some(f)
    };

    // --- spec -------------------------------------------------------------
    let p = doc.require_f64("spec.p")?;
    let q = match command {
        // The detector and the exhaustion study live in the p = q setting.
        Command::Detect | Command::DoubleLimit | Command::Tails => {
            if let Some(q) = doc.get_f64("spec.q")? {
                if q != p {
                    return err(format!(
                        "spec.q (line {}): this command uses q = p; omit spec.q or set it \
                         equal to spec.p",
                        doc.line("spec.q")
                    ));
                }
            }
            p
        }
        Command::Constant | Command::Seminorm | Command::Study | Command::Pointwise
        | Command::Embedding => doc.require_f64("spec.q")?,
    };
    echo.insert("spec.p".into(), fmt_f64(p));
    echo.insert("spec.q".into(), fmt_f64(q));

    // tau matters wherever an inner radius is distance-restricted; the
    // truncated-set commands and the constant use none of the three, and the
    // detector pins its own variant, so those keys stay unconsumed there and
    // the strict leftover check rejects them.
    let uses_tau = matches!(
        command,
        Command::Seminorm | Command::Study | Command::Pointwise | Command::Embedding
            | Command::Detect
    );
    let uses_variant = matches!(
        command,
        Command::Seminorm | Command::Study | Command::Pointwise | Command::Embedding
    );
    let tau = if uses_tau {
        let tau = doc.get_f64("spec.tau")?.unwrap_or(0.5);
        echo.insert("spec.tau".into(), fmt_f64(tau));
        tau
    } else {
        0.5
    };
    let (r_cap, variant) = if uses_variant {
        let r_cap = match command {
            Command::Embedding => doc.get_f64("spec.r_cap")?.unwrap_or(1.0),
            _ => doc.get_f64("spec.r_cap")?.unwrap_or(f64::INFINITY),
        };
        let variant = match (command, doc.get("spec.variant").as_deref()) {
            (Command::Embedding, None) => Variant::Hat,
            (_, None) => Variant::Tilde,
            (_, Some(text)) => match text {
                "full" => Variant::Full,
                "tilde" => Variant::Tilde,
                "hat" => Variant::Hat,
                other => {
                    return err(format!(
                        "line {}: spec.variant: unknown variant '{other}' (expected full, \
                         tilde, or hat)",
                        doc.line("spec.variant")
                    ))
                }
            },
        };
        echo.insert("spec.r_cap".into(), fmt_f64(r_cap));
        echo.insert("spec.variant".into(), variant_name(variant).into());
        (r_cap, variant)
    } else {
        (f64::INFINITY, Variant::Tilde)
    };

    let wants_sweep = matches!(
        command,
        Command::Study | Command::Pointwise | Command::Detect | Command::DoubleLimit
    );
    let single_s = doc.get_f64("spec.s")?;
    let s_values = match doc.get("spec.s_sequence") {
        Some(text) => {
            let line = doc.line("spec.s_sequence");
            parse_s_sequence(&text)
                .map_err(|e| ConfigError::new(format!("line {line}: spec.s_sequence: {e}")))?
        }
        None if wants_sweep => default_s_sequence(10),
        None => Vec::new(),
    };
    if wants_sweep {
        if let Some(_s) = single_s {
            return err(format!(
                "line {}: spec.s: this command sweeps s; use spec.s_sequence instead",
                doc.line("spec.s")
            ));
        }
        echo.insert("spec.s_sequence".into(), fmt_coords(&s_values));
    } else if command == Command::Embedding {
        // Either a single check or a ratio sweep.
        if single_s.is_some() && !s_values.is_empty() {
            return err("embedding: set spec.s or spec.s_sequence, not both");
        }
        if let Some(s) = single_s {
            echo.insert("spec.s".into(), fmt_f64(s));
        } else if !s_values.is_empty() {
            echo.insert("spec.s_sequence".into(), fmt_coords(&s_values));
        } else {
            return err("embedding: missing spec.s (single check) or spec.s_sequence (sweep)");
        }
    } else if matches!(command, Command::Seminorm | Command::Tails) {
        let Some(s) = single_s else {
            return err("missing required key 'spec.s' (alias 's')");
        };
        if !s_values.is_empty() {
            return err(format!(
                "line {}: spec.s_sequence: this command evaluates a single s; use spec.s",
                doc.line("spec.s_sequence")
            ));
        }
        echo.insert("spec.s".into(), fmt_f64(s));
    }

    // Regime notes, kept in-band so they survive into the report.
    if command != Command::Constant {
        if q > p {
            warnings.push(
                "q > p: the first-order limit holds under embedding-range hypotheses; \
                 treat results as exploratory"
                    .into(),
            );
        }
        if variant == Variant::Full {
            if let Some(d) = &domain {
                if !d.is_bounded() {
                    warnings.push(
                        "full variant on an unbounded domain: the unrestricted seminorm may \
                         be infinite; consider tilde or hat"
                            .into(),
                    );
                }
            }
        }
    }

    // --- quadrature and sampling ------------------------------------------
    let quad = QuadratureConfig {
        sphere_order: doc.get_usize("quad.sphere_order")?.unwrap_or(32),
        radial_nodes: doc.get_usize("quad.radial_nodes")?.unwrap_or(16),
    };
    quad.validate()
        .map_err(|e| ConfigError::new(format!("quad: {e}")))?;
    let config_seed = doc.get_u64("quad.seed")?.unwrap_or(0);
    let seed = seed_override.unwrap_or(config_seed);
    if command != Command::Constant {
        echo.insert("quad.sphere_order".into(), quad.sphere_order.to_string());
        echo.insert("quad.radial_nodes".into(), quad.radial_nodes.to_string());
        echo.insert("quad.seed".into(), seed.to_string());
    }

    let plan = if command == Command::Constant {
        SamplingPlan::grid(1)
    } else {
        parse_plan(&mut doc, &domain, &mut echo, &mut warnings)?
    };

    // --- verdict thresholds -------------------------------------------------
    let mut controls = StudyControls::default();
    if let Some(v) = doc.get_f64("controls.plateau_tol")? {
        controls.plateau_tol = v;
    }
    if let Some(v) = doc.get_f64("controls.divergence_factor")? {
        controls.divergence_factor = v;
    }
    if let Some(v) = doc.get_f64("controls.plateau_factor")? {
        controls.plateau_factor = v;
    }
    if let Some(v) = doc.get_f64("controls.pointwise_tol")? {
        controls.pointwise_tol = v;
    }
    if matches!(
        command,
        Command::Study | Command::Pointwise | Command::Detect | Command::DoubleLimit
            | Command::Embedding
    ) {
        echo.insert("controls.plateau_tol".into(), fmt_f64(controls.plateau_tol));
        echo.insert(
            "controls.divergence_factor".into(),
            fmt_f64(controls.divergence_factor),
        );
        echo.insert(
            "controls.plateau_factor".into(),
            fmt_f64(controls.plateau_factor),
        );
        echo.insert(
            "controls.pointwise_tol".into(),
            fmt_f64(controls.pointwise_tol),
        );
    }

    // --- command-specific blocks -------------------------------------------
    let points = if command == Command::Pointwise {
        let text = doc.require("pointwise.points")?;
        let line = doc.line("pointwise.points");
        let mut points = Vec::new();
        for part in text.split(';') {
            let coords = parse_coords(part.trim())
                .map_err(|e| ConfigError::new(format!("line {line}: pointwise.points: {e}")))?;
            let point = Point::new(&coords).map_err(|e| {
                ConfigError::new(format!("line {line}: pointwise.points: {e}"))
            })?;
            points.push(point);
        }
        echo.insert(
            "pointwise.points".into(),
            points
                .iter()
                .map(|pt| fmt_coords(pt.coords()))
                .collect::<Vec<_>>()
                .join(";"),
        );
        points
    } else {
        Vec::new()
    };

    let tail_indices = if command == Command::Tails {
        let indices: Vec<u32> = match doc.get("tails.indices") {
            Some(text) => {
                let line = doc.line("tails.indices");
                text.split(',')
                    .map(|part| {
                        part.trim().parse::<u32>().map_err(|_| {
                            ConfigError::new(format!(
                                "line {line}: tails.indices: expected positive integers, got \
                                 '{part}'"
                            ))
                        })
                    })
                    .collect::<Result<_>>()?
            }
            None => vec![2, 4, 8, 16],
        };
        echo.insert(
            "tails.indices".into(),
            indices
                .iter()
                .map(|i| i.to_string())
                .collect::<Vec<_>>()
                .join(","),
        );
        indices
    } else {
        Vec::new()
    };

    let lambdas = if command == Command::DoubleLimit {
        let text = doc.require("double_limit.lambdas")?;
        let line = doc.line("double_limit.lambdas");
        let lambdas = parse_coords(&text)
            .map_err(|e| ConfigError::new(format!("line {line}: double_limit.lambdas: {e}")))?;
        echo.insert("double_limit.lambdas".into(), fmt_coords(&lambdas));
        lambdas
    } else {
        Vec::new()
    };

    // --- output ------------------------------------------------------------
    let formats = match doc.get("output.format").as_deref() {
        None => OutputFormats::Both,
        Some("csv") => OutputFormats::Csv,
        Some("json") => OutputFormats::Json,
        Some("both") => OutputFormats::Both,
        Some(other) => {
            return err(format!(
                "line {}: output.format: expected csv, json, or both, got '{other}'",
                doc.line("output.format")
            ))
        }
    };
    let verbosity = doc.get_u64("output.verbosity")?.unwrap_or(1);
    // Where reports land unless --out overrides it. Deliberately not echoed:
    // the echo describes the computation, which is independent of where its
    // artifacts are stored.
    let out_path = doc.get("output.path");
    echo.insert(
        "output.format".into(),
        match formats {
            OutputFormats::Csv => "csv",
            OutputFormats::Json => "json",
            OutputFormats::Both => "both",
        }
        .into(),
    );
    echo.insert("output.verbosity".into(), verbosity.to_string());

    doc.finish()?;

    let spec = SpecConfig {
        p,
        q,
        tau,
        r_cap,
        variant,
        s: single_s,
        s_values,
    };

    Ok(RunConfig {
        command,
        domain,
        dim,
        function,
        spec,
        quad,
        plan,
        controls,
        seed,
        points,
        tail_indices,
        lambdas,
        verbosity,
        formats,
        out_path,
        warnings,
        echo,
    })
}

fn parse_s_sequence(text: &str) -> std::result::Result<Vec<f64>, String> {
    if let Some(rest) = text.strip_prefix("dyadic:") {
        let n: usize = rest
            .trim()
            .parse()
            .map_err(|_| format!("expected dyadic:<count>, got '{text}'"))?;
        if n == 0 {
            return Err("dyadic count must be at least 1".into());
        }
        return Ok(default_s_sequence(n));
    }
    parse_coords(text)
}

fn parse_domain(doc: &mut Doc, echo: &mut BTreeMap<String, String>) -> Result<(Domain, String)> {
    let kind = doc.require("domain.kind")?;
    let map_err = |e: fracnorm::Error| ConfigError::new(format!("domain: {e}"));
    match kind.as_str() {
        "unit_ball" => {
            let dim = doc.get_usize("domain.dim")?.unwrap_or(2);
            echo.insert("domain.dim".into(), dim.to_string());
            Ok((Domain::unit_ball(dim).map_err(map_err)?, kind))
        }
        "ball" => {
            let center = doc.require_point("domain.center")?;
            let radius = doc.require_f64("domain.radius")?;
            echo.insert("domain.center".into(), fmt_coords(center.coords()));
            echo.insert("domain.radius".into(), fmt_f64(radius));
            Ok((Domain::ball(center, radius).map_err(map_err)?, kind))
        }
        "box" => {
            let lo = doc.require_point("domain.lo")?;
            let hi = doc.require_point("domain.hi")?;
            echo.insert("domain.lo".into(), fmt_coords(lo.coords()));
            echo.insert("domain.hi".into(), fmt_coords(hi.coords()));
            Ok((Domain::axis_box(lo, hi).map_err(map_err)?, kind))
        }
        "half_space" => {
            let normal = doc.require_point("domain.normal")?;
            let offset = doc.get_f64("domain.offset")?.unwrap_or(0.0);
            echo.insert("domain.normal".into(), fmt_coords(normal.coords()));
            echo.insert("domain.offset".into(), fmt_f64(offset));
            Ok((Domain::half_space(normal, offset).map_err(map_err)?, kind))
        }
        "strip" => {
            let dim = doc.get_usize("domain.dim")?.unwrap_or(2);
            let axis = doc.get_usize("domain.axis")?.unwrap_or(dim - 1);
            let half_width = doc.get_f64("domain.half_width")?.unwrap_or(1.0);
            echo.insert("domain.dim".into(), dim.to_string());
            echo.insert("domain.axis".into(), axis.to_string());
            echo.insert("domain.half_width".into(), fmt_f64(half_width));
            Ok((Domain::strip(dim, axis, half_width).map_err(map_err)?, kind))
        }
        "slit_disk" => {
            let radius = doc.get_f64("domain.radius")?.unwrap_or(1.0);
            let slit_angle = doc.get_f64("domain.slit_angle")?.unwrap_or(0.0);
            echo.insert("domain.radius".into(), fmt_f64(radius));
            echo.insert("domain.slit_angle".into(), fmt_f64(slit_angle));
            Ok((Domain::slit_disk(radius, slit_angle).map_err(map_err)?, kind))
        }
        "lattice_complement" => {
            let dim = doc.get_usize("domain.dim")?.unwrap_or(2);
            let spacing = doc.require_f64("domain.spacing")?;
            echo.insert("domain.dim".into(), dim.to_string());
            echo.insert("domain.spacing".into(), fmt_f64(spacing));
            Ok((
                Domain::lattice_complement(dim, spacing).map_err(map_err)?,
                kind,
            ))
        }
        "polygon" => {
            let text = doc.require("domain.vertices")?;
            let line = doc.line("domain.vertices");
            let mut vertices: Vec<[f64; 2]> = Vec::new();
            for part in text.split(';') {
                let coords = parse_coords(part.trim()).map_err(|e| {
                    ConfigError::new(format!("line {line}: domain.vertices: {e}"))
                })?;
                if coords.len() != 2 {
                    return err(format!(
                        "line {line}: domain.vertices: each vertex needs exactly 2 coordinates"
                    ));
                }
                vertices.push([coords[0], coords[1]]);
            }
            echo.insert(
                "domain.vertices".into(),
                vertices
                    .iter()
                    .map(|v| fmt_coords(v))
                    .collect::<Vec<_>>()
                    .join(";"),
            );
            Ok((Domain::polygon2d(vertices).map_err(map_err)?, kind))
        }
        other => err(format!(
            "line {}: domain.kind: unknown kind '{other}' (expected unit_ball, ball, box, \
             half_space, strip, slit_disk, lattice_complement, or polygon)",
            doc.line("domain.kind")
        )),
    }
}

fn parse_function(doc: &mut Doc, echo: &mut BTreeMap<String, String>) -> Result<TestFunction> {
    let name = doc.require("function.name")?;
    echo.insert("function.name".into(), name.clone());
    match name.as_str() {
        "linear" => {
            let coeffs = doc.require_point("function.coeffs")?;
            let offset = doc.get_f64("function.offset")?.unwrap_or(0.0);
            echo.insert("function.coeffs".into(), fmt_coords(coeffs.coords()));
            echo.insert("function.offset".into(), fmt_f64(offset));
            Ok(TestFunction::Linear { coeffs, offset })
        }
        "gaussian_bump" => {
            let center = doc.require_point("function.center")?;
            let width = doc.get_f64("function.width")?.unwrap_or(0.5);
            echo.insert("function.center".into(), fmt_coords(center.coords()));
            echo.insert("function.width".into(), fmt_f64(width));
            Ok(TestFunction::GaussianBump { center, width })
        }
        "coord_poly" => Ok(TestFunction::CoordPoly),
        "distance_squared" => Ok(TestFunction::DistanceSquared),
        "abs_coord" => {
            let axis = doc.get_usize("function.axis")?.unwrap_or(0);
            echo.insert("function.axis".into(), axis.to_string());
            Ok(TestFunction::AbsCoord { axis })
        }
        "half_space_indicator" => {
            let axis = doc.get_usize("function.axis")?.unwrap_or(0);
            let threshold = doc.get_f64("function.threshold")?.unwrap_or(0.0);
            echo.insert("function.axis".into(), axis.to_string());
            echo.insert("function.threshold".into(), fmt_f64(threshold));
            Ok(TestFunction::HalfSpaceIndicator { axis, threshold })
        }
        "ball_indicator" => {
            let center = doc.require_point("function.center")?;
            let radius = doc.require_f64("function.radius")?;
            echo.insert("function.center".into(), fmt_coords(center.coords()));
            echo.insert("function.radius".into(), fmt_f64(radius));
            Ok(TestFunction::BallIndicator { center, radius })
        }
        "lacunary" => {
            let amplitude_decay = doc.get_f64("function.amplitude_decay")?.unwrap_or(0.7);
            let octaves = doc.get_usize("function.octaves")?.unwrap_or(12) as u32;
            let base_freq = doc.get_f64("function.base_freq")?.unwrap_or(3.0);
            echo.insert(
                "function.amplitude_decay".into(),
                fmt_f64(amplitude_decay),
            );
            echo.insert("function.octaves".into(), octaves.to_string());
            echo.insert("function.base_freq".into(), fmt_f64(base_freq));
            Ok(TestFunction::Lacunary {
                amplitude_decay,
                octaves,
                base_freq,
            })
        }
        other => err(format!(
            "function.name: unknown function '{other}' (expected linear, gaussian_bump, \
             coord_poly, distance_squared, abs_coord, half_space_indicator, ball_indicator, \
             or lacunary)"
        )),
    }
}

fn parse_plan(
    doc: &mut Doc,
    domain: &Option<Domain>,
    echo: &mut BTreeMap<String, String>,
    warnings: &mut Vec<String>,
) -> Result<SamplingPlan> {
    let kind = doc.get("plan.kind").unwrap_or_else(|| "grid".to_string());
    echo.insert("plan.kind".into(), kind.clone());
    let mut plan = match kind.as_str() {
        "grid" => {
            let resolution = doc.get_usize("plan.resolution")?.unwrap_or(32);
            echo.insert("plan.resolution".into(), resolution.to_string());
            SamplingPlan::grid(resolution)
        }
        "monte_carlo" => {
            let samples = doc.get_usize("plan.samples")?.unwrap_or(4096);
            echo.insert("plan.samples".into(), samples.to_string());
            SamplingPlan::monte_carlo(samples)
        }
        other => {
            return err(format!(
                "line {}: plan.kind: expected grid or monte_carlo, got '{other}'",
                doc.line("plan.kind")
            ))
        }
    };
    if let Some(text) = doc.get("plan.truncation") {
        let line = doc.line("plan.truncation");
        let truncation = if let Some(rest) = text.strip_prefix("index:") {
            let i: u32 = rest.trim().parse().map_err(|_| {
                ConfigError::new(format!(
                    "line {line}: plan.truncation: expected index:<integer>, got '{text}'"
                ))
            })?;
            Truncation::Index(i)
        } else if let Some(rest) = text.strip_prefix("lambda:") {
            let l: f64 = parse_f64(rest.trim()).map_err(|e| {
                ConfigError::new(format!("line {line}: plan.truncation: {e}"))
            })?;
            Truncation::Lambda(l)
        } else {
            return err(format!(
                "line {line}: plan.truncation: expected index:<i> or lambda:<l>, got '{text}'"
            ));
        };
        echo.insert("plan.truncation".into(), text);
        plan = plan.with_truncation(truncation);
    } else if let Some(d) = domain {
        if !d.is_bounded() {
            warnings.push(
                "unbounded domain sampled without plan.truncation: outer integration runs \
                 over the truncation-free sampler, which requires a bounded domain; set \
                 plan.truncation (e.g. index:4)"
                    .into(),
            );
        }
    }
    Ok(plan)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_constant_document() {
        let cfg = parse_config("command = constant\nN = 2\np = 2\nq = 2\n", None).unwrap();
        assert_eq!(cfg.command, Command::Constant);
        assert_eq!(cfg.dim, 2);
        assert_eq!(cfg.spec.p, 2.0);
        assert_eq!(cfg.echo.get("command").unwrap(), "constant");
    }

    #[test]
    fn unknown_keys_are_rejected_with_their_line() {
        let text = "command = constant\nN = 2\np = 2\nq = 2\nbogus.key = 1\n";
        let e = parse_config(text, None).unwrap_err();
        assert!(e.message.contains("bogus.key"), "{e}");
        assert!(e.message.contains("line 5"), "{e}");
    }

    #[test]
    fn out_of_range_tau_names_the_constraint() {
        let text = "command = seminorm\ndomain.kind = unit_ball\ndomain.dim = 2\n\
                    function.name = coord_poly\np = 2\nq = 2\ns = 0.9\ntau = 1.5\n";
        let cfg = parse_config(text, None).unwrap();
        let e = cfg.spec.seminorm_spec(0.9).unwrap_err();
        assert!(e.to_string().contains("(0, 1)"), "{e}");
    }

    #[test]
    fn study_fills_the_dyadic_default() {
        let text = "command = study\ndomain.kind = unit_ball\nfunction.name = coord_poly\n\
                    p = 2\nq = 2\n";
        let cfg = parse_config(text, None).unwrap();
        assert_eq!(cfg.spec.s_values.len(), 10);
        assert_eq!(cfg.spec.s_values[0], 0.5);
        assert!(cfg.echo.contains_key("spec.s_sequence"));
    }

    #[test]
    fn duplicate_and_alias_collisions_are_rejected() {
        let dup = "command = constant\nN = 2\nN = 3\np = 2\nq = 2\n";
        assert!(parse_config(dup, None).unwrap_err().message.contains("duplicate"));
        let alias = "command = constant\nN = 2\ndomain.dim = 2\np = 2\nq = 2\n";
        assert!(parse_config(alias, None).unwrap_err().message.contains("alias"));
    }

    #[test]
    fn seed_flag_beats_config_seed() {
        let text = "command = constant\nN = 2\np = 2\nq = 2\nquad.seed = 7\n";
        assert_eq!(parse_config(text, None).unwrap().seed, 7);
        assert_eq!(parse_config(text, Some(11)).unwrap().seed, 11);
    }

    #[test]
    fn r_cap_accepts_inf() {
        let text = "command = seminorm\ndomain.kind = unit_ball\nfunction.name = coord_poly\n\
                    p = 2\nq = 2\ns = 0.9\nspec.r_cap = inf\n";
        let cfg = parse_config(text, None).unwrap();
        assert!(cfg.spec.r_cap.is_infinite());
    }
}
