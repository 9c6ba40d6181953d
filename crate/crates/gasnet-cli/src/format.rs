//! The network file format: a line-oriented key-value text with nested
//! braces. All physical parameters are plain SI numbers; a value carrying a
//! unit suffix ("5bar", "300K") is rejected.
//!
//! ```text
//! gas { r_s 518.3  t_0 293.15  z_0 0.9  c_p 2225.3  c_v 1707.0  g 9.81 }
//!
//! component p1 {
//!   type pipe
//!   area 0.196  length 3000  diameter 0.5  lambda 0.011  elevation 0
//!   nominal_p_left 5.0e6  nominal_q 20
//! }
//!
//! connect p1.p_r -> p2.p_l
//! inputs p1.p_l p2.q_r
//! outputs p2.p_r p1.q_l
//!
//! analysis freq { from 1e-4 to 1e1 points 20 }
//! ```

use std::fmt::Write as _;

use gasnet::label::SignalId;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: unknown component type `{ty}`")]
    UnknownComponentType { line: usize, ty: String },
    #[error("line {line}: `{reference}` does not name a declared component signal")]
    UnknownSignal { line: usize, reference: String },
    #[error("line {line}: value `{token}` carries unit suffix `{suffix}`; parameters are plain SI numbers")]
    Unit {
        line: usize,
        token: String,
        suffix: String,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GasDecl {
    pub r_s: f64,
    pub t_0: f64,
    pub z_0: f64,
    pub c_p: f64,
    pub c_v: f64,
    pub g: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ComponentDecl {
    Pipe {
        id: String,
        area: f64,
        length: f64,
        diameter: f64,
        lambda: f64,
        elevation: f64,
        nominal_p_left: f64,
        nominal_q: f64,
    },
    StaticValve {
        id: String,
        gain: f64,
    },
    StaticCompressor {
        id: String,
        gain: f64,
    },
    DynamicValve {
        id: String,
        c_d: f64,
        d0: f64,
        d1: f64,
        a_o_max: f64,
        tau: f64,
        nominal_a_o: f64,
        nominal_p_left: f64,
        nominal_p_right: f64,
    },
    IsothermalTank {
        id: String,
        volume: f64,
        inlets: usize,
        outlets: usize,
        nominal_p: f64,
        nominal_t: f64,
    },
    Joint {
        id: String,
        inflows: Vec<String>,
        outflow: String,
    },
    Branch {
        id: String,
        trunk: String,
        branches: Vec<String>,
    },
    Star {
        id: String,
        inflows: Vec<String>,
        outflows: Vec<String>,
    },
}

impl ComponentDecl {
    pub fn id(&self) -> &str {
        match self {
            ComponentDecl::Pipe { id, .. }
            | ComponentDecl::StaticValve { id, .. }
            | ComponentDecl::StaticCompressor { id, .. }
            | ComponentDecl::DynamicValve { id, .. }
            | ComponentDecl::IsothermalTank { id, .. }
            | ComponentDecl::Joint { id, .. }
            | ComponentDecl::Branch { id, .. }
            | ComponentDecl::Star { id, .. } => id,
        }
    }

    /// Pipe components consumed by this junction, if any.
    pub fn referenced_pipes(&self) -> Vec<&str> {
        match self {
            ComponentDecl::Joint {
                inflows, outflow, ..
            } => {
                let mut v: Vec<&str> = inflows.iter().map(|s| s.as_str()).collect();
                v.push(outflow);
                v
            }
            ComponentDecl::Branch {
                trunk, branches, ..
            } => {
                let mut v = vec![trunk.as_str()];
                v.extend(branches.iter().map(|s| s.as_str()));
                v
            }
            ComponentDecl::Star {
                inflows, outflows, ..
            } => inflows.iter().chain(outflows).map(|s| s.as_str()).collect(),
            _ => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AnalysisDecl {
    MassCheck {
        tol: f64,
    },
    DcGain,
    Freq {
        omega_min: f64,
        omega_max: f64,
        points: usize,
    },
    Sim {
        t0: f64,
        t1: f64,
        dt: f64,
        /// Piecewise-constant input tables: (signal, (time, value) pairs).
        inputs: Vec<(SignalId, Vec<(f64, f64)>)>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkFile {
    pub gas: GasDecl,
    pub components: Vec<ComponentDecl>,
    pub connections: Vec<(SignalId, SignalId)>,
    pub inputs: Vec<SignalId>,
    pub outputs: Vec<SignalId>,
    pub analyses: Vec<AnalysisDecl>,
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Word(String),
    LBrace,
    RBrace,
    Arrow,
}

struct Tokens {
    items: Vec<(Token, usize)>,
    pos: usize,
}

fn tokenize(text: &str) -> Vec<(Token, usize)> {
    let mut out = Vec::new();
    for (line_idx, line) in text.lines().enumerate() {
        let line_no = line_idx + 1;
        let body = line.split('#').next().unwrap_or("");
        for raw in body.split_whitespace() {
            // Braces may abut words in hand-written files.
            let mut rest = raw;
            while !rest.is_empty() {
                if let Some(stripped) = rest.strip_prefix('{') {
                    out.push((Token::LBrace, line_no));
                    rest = stripped;
                } else if let Some(stripped) = rest.strip_prefix('}') {
                    out.push((Token::RBrace, line_no));
                    rest = stripped;
                } else {
                    let cut = rest.find(['{', '}']).unwrap_or(rest.len());
                    let (word, tail) = rest.split_at(cut);
                    match word {
                        "->" => out.push((Token::Arrow, line_no)),
                        _ => out.push((Token::Word(word.to_string()), line_no)),
                    }
                    rest = tail;
                }
            }
        }
    }
    out
}

impl Tokens {
    fn peek(&self) -> Option<&(Token, usize)> {
        self.items.get(self.pos)
    }

    fn next(&mut self) -> Option<(Token, usize)> {
        let item = self.items.get(self.pos).cloned();
        if item.is_some() {
            self.pos += 1;
        }
        item
    }

    fn last_line(&self) -> usize {
        self.items.last().map(|(_, l)| *l).unwrap_or(0)
    }

    fn expect_word(&mut self, what: &str) -> Result<(String, usize), FormatError> {
        match self.next() {
            Some((Token::Word(w), line)) => Ok((w, line)),
            Some((other, line)) => Err(FormatError::Parse {
                line,
                message: format!("expected {what}, found {other:?}"),
            }),
            None => Err(FormatError::Parse {
                line: self.last_line(),
                message: format!("expected {what}, found end of file"),
            }),
        }
    }

    fn expect(&mut self, token: Token, what: &str) -> Result<usize, FormatError> {
        match self.next() {
            Some((t, line)) if t == token => Ok(line),
            Some((other, line)) => Err(FormatError::Parse {
                line,
                message: format!("expected {what}, found {other:?}"),
            }),
            None => Err(FormatError::Parse {
                line: self.last_line(),
                message: format!("expected {what}, found end of file"),
            }),
        }
    }
}

fn parse_number(word: &str, line: usize) -> Result<f64, FormatError> {
    if let Ok(v) = word.parse::<f64>() {
        return Ok(v);
    }
    // Longest numeric prefix followed by an alphabetic tail reads as a
    // unit-suffixed quantity and is rejected explicitly.
    for cut in (1..word.len()).rev() {
        if !word.is_char_boundary(cut) {
            continue;
        }
        let (head, tail) = word.split_at(cut);
        if head.parse::<f64>().is_ok() && tail.chars().next().is_some_and(|c| c.is_alphabetic()) {
            return Err(FormatError::Unit {
                line,
                token: word.to_string(),
                suffix: tail.to_string(),
            });
        }
    }
    Err(FormatError::Parse {
        line,
        message: format!("expected a number, found `{word}`"),
    })
}

fn parse_signal_ref(word: &str, line: usize) -> Result<SignalId, FormatError> {
    SignalId::parse(word).ok_or_else(|| FormatError::Parse {
        line,
        message: format!("expected `component.signal`, found `{word}`"),
    })
}

/// Key-value pairs inside a brace block, where values are numbers or
/// identifier lists (a list extends until the next known key or brace).
struct Block {
    entries: Vec<(String, usize, Vec<String>)>,
    open_line: usize,
}

fn parse_block(tokens: &mut Tokens, keys: &[&str]) -> Result<Block, FormatError> {
    let open_line = tokens.expect(Token::LBrace, "`{`")?;
    let mut entries: Vec<(String, usize, Vec<String>)> = Vec::new();
    loop {
        match tokens.peek() {
            Some((Token::RBrace, _)) => {
                tokens.next();
                break;
            }
            Some((Token::Word(_), _)) => {
                let (key, line) = tokens.expect_word("a field name")?;
                if !keys.contains(&key.as_str()) {
                    return Err(FormatError::Parse {
                        line,
                        message: format!(
                            "unknown field `{key}`; expected one of {}",
                            keys.join(", ")
                        ),
                    });
                }
                let mut values = Vec::new();
                while let Some((Token::Word(w), _)) = tokens.peek() {
                    if keys.contains(&w.as_str()) {
                        break;
                    }
                    values.push(tokens.expect_word("a value")?.0);
                }
                if values.is_empty() {
                    return Err(FormatError::Parse {
                        line,
                        message: format!("field `{key}` has no value"),
                    });
                }
                entries.push((key, line, values));
            }
            Some((other, line)) => {
                return Err(FormatError::Parse {
                    line: *line,
                    message: format!("unexpected {other:?} inside block"),
                })
            }
            None => {
                return Err(FormatError::Parse {
                    line: tokens.last_line(),
                    message: "unterminated block".to_string(),
                })
            }
        }
    }
    Ok(Block { entries, open_line })
}

impl Block {
    fn number(&self, key: &str) -> Result<f64, FormatError> {
        let (_, line, values) =
            self.entries
                .iter()
                .find(|(k, _, _)| k == key)
                .ok_or(FormatError::Parse {
                    line: self.open_line,
                    message: format!("missing required field `{key}`"),
                })?;
        if values.len() != 1 {
            return Err(FormatError::Parse {
                line: *line,
                message: format!("field `{key}` expects exactly one number"),
            });
        }
        parse_number(&values[0], *line)
    }

    fn number_or(&self, key: &str, default: f64) -> Result<f64, FormatError> {
        if self.entries.iter().any(|(k, _, _)| k == key) {
            self.number(key)
        } else {
            Ok(default)
        }
    }

    fn count(&self, key: &str) -> Result<usize, FormatError> {
        let value = self.number(key)?;
        if value < 1.0 || value.fract() != 0.0 {
            let line = self
                .entries
                .iter()
                .find(|(k, _, _)| k == key)
                .map(|(_, l, _)| *l)
                .unwrap_or(self.open_line);
            return Err(FormatError::Parse {
                line,
                message: format!("field `{key}` expects a positive integer"),
            });
        }
        Ok(value as usize)
    }

    fn idents(&self, key: &str) -> Result<Vec<String>, FormatError> {
        let (_, _, values) =
            self.entries
                .iter()
                .find(|(k, _, _)| k == key)
                .ok_or(FormatError::Parse {
                    line: self.open_line,
                    message: format!("missing required field `{key}`"),
                })?;
        Ok(values.clone())
    }

    fn ident(&self, key: &str) -> Result<String, FormatError> {
        let values = self.idents(key)?;
        if values.len() != 1 {
            return Err(FormatError::Parse {
                line: self.open_line,
                message: format!("field `{key}` expects exactly one identifier"),
            });
        }
        Ok(values[0].clone())
    }
}

const PIPE_KEYS: &[&str] = &[
    "type",
    "area",
    "length",
    "diameter",
    "lambda",
    "elevation",
    "nominal_p_left",
    "nominal_q",
];
const GAIN_KEYS: &[&str] = &["type", "gain"];
const DYN_VALVE_KEYS: &[&str] = &[
    "type",
    "c_d",
    "d0",
    "d1",
    "a_o_max",
    "tau",
    "nominal_a_o",
    "nominal_p_left",
    "nominal_p_right",
];
const TANK_KEYS: &[&str] = &[
    "type",
    "volume",
    "inlets",
    "outlets",
    "nominal_p",
    "nominal_t",
];
const JOINT_KEYS: &[&str] = &["type", "inflows", "outflow"];
const BRANCH_KEYS: &[&str] = &["type", "trunk", "branches"];
const STAR_KEYS: &[&str] = &["type", "inflows", "outflows"];
const GAS_KEYS: &[&str] = &["r_s", "t_0", "z_0", "c_p", "c_v", "g"];

fn parse_component(tokens: &mut Tokens) -> Result<ComponentDecl, FormatError> {
    let (id, id_line) = tokens.expect_word("a component id")?;
    // Components are keyed by a `type` field, so peek at the block to decide
    // which keys are admissible: scan ahead for the type first.
    let save = tokens.pos;
    let probe = parse_block(
        tokens,
        // A permissive union for the probing pass.
        &[
            "type",
            "area",
            "length",
            "diameter",
            "lambda",
            "elevation",
            "nominal_p_left",
            "nominal_q",
            "gain",
            "c_d",
            "d0",
            "d1",
            "a_o_max",
            "tau",
            "nominal_a_o",
            "nominal_p_right",
            "volume",
            "inlets",
            "outlets",
            "nominal_p",
            "nominal_t",
            "inflows",
            "outflow",
            "trunk",
            "branches",
            "outflows",
        ],
    )?;
    let ty = probe.ident("type").map_err(|_| FormatError::Parse {
        line: id_line,
        message: format!("component `{id}` is missing the `type` field"),
    })?;
    tokens.pos = save;

    let decl = match ty.as_str() {
        "pipe" => {
            let b = parse_block(tokens, PIPE_KEYS)?;
            ComponentDecl::Pipe {
                id,
                area: b.number("area")?,
                length: b.number("length")?,
                diameter: b.number("diameter")?,
                lambda: b.number("lambda")?,
                elevation: b.number_or("elevation", 0.0)?,
                nominal_p_left: b.number("nominal_p_left")?,
                nominal_q: b.number("nominal_q")?,
            }
        }
        "valve_static" => {
            let b = parse_block(tokens, GAIN_KEYS)?;
            ComponentDecl::StaticValve {
                id,
                gain: b.number("gain")?,
            }
        }
        "compressor_static" => {
            let b = parse_block(tokens, GAIN_KEYS)?;
            ComponentDecl::StaticCompressor {
                id,
                gain: b.number("gain")?,
            }
        }
        "valve_dynamic" => {
            let b = parse_block(tokens, DYN_VALVE_KEYS)?;
            ComponentDecl::DynamicValve {
                id,
                c_d: b.number("c_d")?,
                d0: b.number("d0")?,
                d1: b.number("d1")?,
                a_o_max: b.number("a_o_max")?,
                tau: b.number("tau")?,
                nominal_a_o: b.number("nominal_a_o")?,
                nominal_p_left: b.number("nominal_p_left")?,
                nominal_p_right: b.number("nominal_p_right")?,
            }
        }
        "tank_iso" => {
            let b = parse_block(tokens, TANK_KEYS)?;
            ComponentDecl::IsothermalTank {
                id,
                volume: b.number("volume")?,
                inlets: b.count("inlets")?,
                outlets: b.count("outlets")?,
                nominal_p: b.number("nominal_p")?,
                nominal_t: b.number("nominal_t")?,
            }
        }
        "joint" => {
            let b = parse_block(tokens, JOINT_KEYS)?;
            ComponentDecl::Joint {
                id,
                inflows: b.idents("inflows")?,
                outflow: b.ident("outflow")?,
            }
        }
        "branch" => {
            let b = parse_block(tokens, BRANCH_KEYS)?;
            ComponentDecl::Branch {
                id,
                trunk: b.ident("trunk")?,
                branches: b.idents("branches")?,
            }
        }
        "star" => {
            let b = parse_block(tokens, STAR_KEYS)?;
            ComponentDecl::Star {
                id,
                inflows: b.idents("inflows")?,
                outflows: b.idents("outflows")?,
            }
        }
        other => {
            return Err(FormatError::UnknownComponentType {
                line: id_line,
                ty: other.to_string(),
            })
        }
    };
    Ok(decl)
}

fn parse_analysis(tokens: &mut Tokens) -> Result<AnalysisDecl, FormatError> {
    let (kind, line) = tokens.expect_word("an analysis kind")?;
    match kind.as_str() {
        "mass_check" => {
            let b = parse_block(tokens, &["tol"])?;
            Ok(AnalysisDecl::MassCheck {
                tol: b.number_or("tol", 1e-9)?,
            })
        }
        "dcgain" => {
            tokens.expect(Token::LBrace, "`{`")?;
            tokens.expect(Token::RBrace, "`}`")?;
            Ok(AnalysisDecl::DcGain)
        }
        "freq" => {
            let b = parse_block(tokens, &["from", "to", "points"])?;
            Ok(AnalysisDecl::Freq {
                omega_min: b.number("from")?,
                omega_max: b.number("to")?,
                points: b.count("points")?,
            })
        }
        "sim" => parse_sim_analysis(tokens),
        other => Err(FormatError::Parse {
            line,
            message: format!(
                "unknown analysis `{other}`; expected mass_check, dcgain, freq or sim"
            ),
        }),
    }
}

fn parse_sim_analysis(tokens: &mut Tokens) -> Result<AnalysisDecl, FormatError> {
    let open_line = tokens.expect(Token::LBrace, "`{`")?;
    let (mut t0, mut t1, mut dt) = (None, None, None);
    let mut inputs = Vec::new();
    loop {
        match tokens.next() {
            Some((Token::RBrace, _)) => break,
            Some((Token::Word(key), line)) => match key.as_str() {
                "t0" | "t1" | "dt" => {
                    let (value, vline) = tokens.expect_word("a number")?;
                    let v = parse_number(&value, vline)?;
                    match key.as_str() {
                        "t0" => t0 = Some(v),
                        "t1" => t1 = Some(v),
                        _ => dt = Some(v),
                    }
                }
                "input" => {
                    let (sig, sline) = tokens.expect_word("a signal reference")?;
                    let id = parse_signal_ref(&sig, sline)?;
                    tokens.expect(Token::LBrace, "`{`")?;
                    let mut raw = Vec::new();
                    loop {
                        match tokens.next() {
                            Some((Token::RBrace, _)) => break,
                            Some((Token::Word(w), wline)) => raw.push(parse_number(&w, wline)?),
                            Some((other, oline)) => {
                                return Err(FormatError::Parse {
                                    line: oline,
                                    message: format!("unexpected {other:?} in input table"),
                                })
                            }
                            None => {
                                return Err(FormatError::Parse {
                                    line: sline,
                                    message: "unterminated input table".to_string(),
                                })
                            }
                        }
                    }
                    if raw.len() % 2 != 0 || raw.is_empty() {
                        return Err(FormatError::Parse {
                            line: sline,
                            message: "input tables list (time, value) pairs".to_string(),
                        });
                    }
                    let pairs: Vec<(f64, f64)> = raw.chunks(2).map(|c| (c[0], c[1])).collect();
                    if pairs.windows(2).any(|w| w[1].0 <= w[0].0) {
                        return Err(FormatError::Parse {
                            line: sline,
                            message: "input table times must increase strictly".to_string(),
                        });
                    }
                    inputs.push((id, pairs));
                }
                other => {
                    return Err(FormatError::Parse {
                        line,
                        message: format!("unknown sim field `{other}`"),
                    })
                }
            },
            Some((other, line)) => {
                return Err(FormatError::Parse {
                    line,
                    message: format!("unexpected {other:?} inside sim block"),
                })
            }
            None => {
                return Err(FormatError::Parse {
                    line: open_line,
                    message: "unterminated sim block".to_string(),
                })
            }
        }
    }
    let need = |v: Option<f64>, name: &str| {
        v.ok_or(FormatError::Parse {
            line: open_line,
            message: format!("sim analysis is missing `{name}`"),
        })
    };
    Ok(AnalysisDecl::Sim {
        t0: need(t0, "t0")?,
        t1: need(t1, "t1")?,
        dt: need(dt, "dt")?,
        inputs,
    })
}

/// Parses and validates a network file: unique component ids, resolvable
/// connection/external references and a complete gas block.
pub fn parse_network(text: &str) -> Result<NetworkFile, FormatError> {
    let mut tokens = Tokens {
        items: tokenize(text),
        pos: 0,
    };

    let mut gas = None;
    let mut components: Vec<ComponentDecl> = Vec::new();
    let mut connections: Vec<(SignalId, SignalId, usize)> = Vec::new();
    let mut inputs: Vec<(SignalId, usize)> = Vec::new();
    let mut outputs: Vec<(SignalId, usize)> = Vec::new();
    let mut analyses = Vec::new();

    while let Some((token, line)) = tokens.next() {
        let word = match token {
            Token::Word(w) => w,
            other => {
                return Err(FormatError::Parse {
                    line,
                    message: format!("expected a top-level keyword, found {other:?}"),
                })
            }
        };
        match word.as_str() {
            "gas" => {
                let b = parse_block(&mut tokens, GAS_KEYS)?;
                gas = Some(GasDecl {
                    r_s: b.number("r_s")?,
                    t_0: b.number("t_0")?,
                    z_0: b.number("z_0")?,
                    c_p: b.number("c_p")?,
                    c_v: b.number("c_v")?,
                    g: b.number("g")?,
                });
            }
            "component" => {
                let decl = parse_component(&mut tokens)?;
                if components.iter().any(|c| c.id() == decl.id()) {
                    return Err(FormatError::Parse {
                        line,
                        message: format!("duplicate component id `{}`", decl.id()),
                    });
                }
                components.push(decl);
            }
            "connect" => {
                let (from, fline) = tokens.expect_word("a signal reference")?;
                tokens.expect(Token::Arrow, "`->`")?;
                let (to, tline) = tokens.expect_word("a signal reference")?;
                connections.push((
                    parse_signal_ref(&from, fline)?,
                    parse_signal_ref(&to, tline)?,
                    fline,
                ));
            }
            "inputs" | "outputs" => {
                let mut refs = Vec::new();
                while let Some((Token::Word(w), wline)) = tokens.peek().cloned() {
                    if matches!(
                        w.as_str(),
                        "gas" | "component" | "connect" | "inputs" | "outputs" | "analysis"
                    ) {
                        break;
                    }
                    tokens.next();
                    refs.push((parse_signal_ref(&w, wline)?, wline));
                }
                if word == "inputs" {
                    inputs.extend(refs);
                } else {
                    outputs.extend(refs);
                }
            }
            "analysis" => analyses.push(parse_analysis(&mut tokens)?),
            other => {
                return Err(FormatError::Parse {
                    line,
                    message: format!("unknown top-level keyword `{other}`"),
                })
            }
        }
    }

    let gas = gas.ok_or(FormatError::Parse {
        line: tokens.last_line(),
        message: "missing `gas { ... }` block".to_string(),
    })?;

    // Every signal reference must name a declared component.
    let known = |id: &SignalId| components.iter().any(|c| c.id() == id.owner);
    for (from, to, line) in &connections {
        for reference in [from, to] {
            if !known(reference) {
                return Err(FormatError::UnknownSignal {
                    line: *line,
                    reference: reference.to_string(),
                });
            }
        }
    }
    for (reference, line) in inputs.iter().chain(&outputs) {
        if !known(reference) {
            return Err(FormatError::UnknownSignal {
                line: *line,
                reference: reference.to_string(),
            });
        }
    }

    Ok(NetworkFile {
        gas,
        components,
        connections: connections.into_iter().map(|(f, t, _)| (f, t)).collect(),
        inputs: inputs.into_iter().map(|(r, _)| r).collect(),
        outputs: outputs.into_iter().map(|(r, _)| r).collect(),
        analyses,
    })
}

/// Canonical text form; `parse_network(serialize_network(f))` reproduces the
/// same semantic content.
pub fn serialize_network(file: &NetworkFile) -> String {
    let mut out = String::new();
    let g = &file.gas;
    let _ = writeln!(
        out,
        "gas {{ r_s {}  t_0 {}  z_0 {}  c_p {}  c_v {}  g {} }}",
        g.r_s, g.t_0, g.z_0, g.c_p, g.c_v, g.g
    );
    for c in &file.components {
        let _ = writeln!(out);
        match c {
            ComponentDecl::Pipe {
                id,
                area,
                length,
                diameter,
                lambda,
                elevation,
                nominal_p_left,
                nominal_q,
            } => {
                let _ = writeln!(out, "component {id} {{");
                let _ = writeln!(out, "  type pipe");
                let _ = writeln!(
                    out,
                    "  area {area}  length {length}  diameter {diameter}  lambda {lambda}  elevation {elevation}"
                );
                let _ = writeln!(
                    out,
                    "  nominal_p_left {nominal_p_left}  nominal_q {nominal_q}"
                );
                let _ = writeln!(out, "}}");
            }
            ComponentDecl::StaticValve { id, gain } => {
                let _ = writeln!(out, "component {id} {{ type valve_static  gain {gain} }}");
            }
            ComponentDecl::StaticCompressor { id, gain } => {
                let _ = writeln!(
                    out,
                    "component {id} {{ type compressor_static  gain {gain} }}"
                );
            }
            ComponentDecl::DynamicValve {
                id,
                c_d,
                d0,
                d1,
                a_o_max,
                tau,
                nominal_a_o,
                nominal_p_left,
                nominal_p_right,
            } => {
                let _ = writeln!(out, "component {id} {{");
                let _ = writeln!(out, "  type valve_dynamic");
                let _ = writeln!(
                    out,
                    "  c_d {c_d}  d0 {d0}  d1 {d1}  a_o_max {a_o_max}  tau {tau}"
                );
                let _ = writeln!(
                    out,
                    "  nominal_a_o {nominal_a_o}  nominal_p_left {nominal_p_left}  nominal_p_right {nominal_p_right}"
                );
                let _ = writeln!(out, "}}");
            }
            ComponentDecl::IsothermalTank {
                id,
                volume,
                inlets,
                outlets,
                nominal_p,
                nominal_t,
            } => {
                let _ = writeln!(out, "component {id} {{");
                let _ = writeln!(out, "  type tank_iso");
                let _ = writeln!(
                    out,
                    "  volume {volume}  inlets {inlets}  outlets {outlets}  nominal_p {nominal_p}  nominal_t {nominal_t}"
                );
                let _ = writeln!(out, "}}");
            }
            ComponentDecl::Joint {
                id,
                inflows,
                outflow,
            } => {
                let _ = writeln!(
                    out,
                    "component {id} {{ type joint  inflows {}  outflow {outflow} }}",
                    inflows.join(" ")
                );
            }
            ComponentDecl::Branch {
                id,
                trunk,
                branches,
            } => {
                let _ = writeln!(
                    out,
                    "component {id} {{ type branch  trunk {trunk}  branches {} }}",
                    branches.join(" ")
                );
            }
            ComponentDecl::Star {
                id,
                inflows,
                outflows,
            } => {
                let _ = writeln!(
                    out,
                    "component {id} {{ type star  inflows {}  outflows {} }}",
                    inflows.join(" "),
                    outflows.join(" ")
                );
            }
        }
    }
    if !file.connections.is_empty() {
        let _ = writeln!(out);
        for (from, to) in &file.connections {
            let _ = writeln!(out, "connect {from} -> {to}");
        }
    }
    if !file.inputs.is_empty() {
        let refs: Vec<String> = file.inputs.iter().map(|r| r.to_string()).collect();
        let _ = writeln!(out, "inputs {}", refs.join(" "));
    }
    if !file.outputs.is_empty() {
        let refs: Vec<String> = file.outputs.iter().map(|r| r.to_string()).collect();
        let _ = writeln!(out, "outputs {}", refs.join(" "));
    }
    for a in &file.analyses {
        let _ = writeln!(out);
        match a {
            AnalysisDecl::MassCheck { tol } => {
                let _ = writeln!(out, "analysis mass_check {{ tol {tol} }}");
            }
            AnalysisDecl::DcGain => {
                let _ = writeln!(out, "analysis dcgain {{ }}");
            }
            AnalysisDecl::Freq {
                omega_min,
                omega_max,
                points,
            } => {
                let _ = writeln!(
                    out,
                    "analysis freq {{ from {omega_min} to {omega_max} points {points} }}"
                );
            }
            AnalysisDecl::Sim { t0, t1, dt, inputs } => {
                let _ = writeln!(out, "analysis sim {{");
                let _ = writeln!(out, "  t0 {t0}  t1 {t1}  dt {dt}");
                for (id, pairs) in inputs {
                    let table: Vec<String> =
                        pairs.iter().map(|(t, v)| format!("{t} {v}")).collect();
                    let _ = writeln!(out, "  input {id} {{ {} }}", table.join("  "));
                }
                let _ = writeln!(out, "}}");
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
# minimal two-pipe network
gas { r_s 518.3  t_0 293.15  z_0 0.9  c_p 2225.3  c_v 1707.0  g 9.81 }

component p1 {
  type pipe
  area 0.196  length 3000  diameter 0.5  lambda 0.011  elevation 0
  nominal_p_left 5.0e6  nominal_q 20
}
component p2 {
  type pipe
  area 0.196  length 2000  diameter 0.5  lambda 0.011
  nominal_p_left 4.9e6  nominal_q 20
}

connect p1.p_r -> p2.p_l
connect p2.q_l -> p1.q_r
inputs p1.p_l p2.q_r
outputs p2.p_r p1.q_l

analysis mass_check { tol 1e-9 }
analysis freq { from 1e-4 to 1e1 points 20 }
analysis sim {
  t0 0  t1 100  dt 0.1
  input p1.p_l { 0 0  10 1000 }
}
"#;

    #[test]
    fn parses_sample() {
        let file = parse_network(SAMPLE).unwrap();
        assert_eq!(file.components.len(), 2);
        assert_eq!(file.connections.len(), 2);
        assert_eq!(file.inputs.len(), 2);
        assert_eq!(file.analyses.len(), 3);
        match &file.analyses[2] {
            AnalysisDecl::Sim { inputs, .. } => {
                assert_eq!(inputs[0].1, vec![(0.0, 0.0), (10.0, 1000.0)]);
            }
            other => panic!("expected sim analysis, got {other:?}"),
        }
    }

    #[test]
    fn roundtrip_is_semantic_identity() {
        let file = parse_network(SAMPLE).unwrap();
        let text = serialize_network(&file);
        let again = parse_network(&text).unwrap();
        assert_eq!(file, again);
    }

    #[test]
    fn unit_suffix_is_rejected() {
        let bad = SAMPLE.replace("nominal_p_left 5.0e6", "nominal_p_left 50bar");
        match parse_network(&bad) {
            Err(FormatError::Unit { suffix, .. }) => assert_eq!(suffix, "bar"),
            other => panic!("expected unit error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_component_type_is_rejected() {
        let bad = SAMPLE.replace("type pipe", "type pump");
        assert!(matches!(
            parse_network(&bad),
            Err(FormatError::UnknownComponentType { .. })
        ));
    }

    #[test]
    fn dangling_reference_is_rejected() {
        let bad = SAMPLE.replace("connect p1.p_r -> p2.p_l", "connect p9.p_r -> p2.p_l");
        match parse_network(&bad) {
            Err(FormatError::UnknownSignal { reference, .. }) => {
                assert_eq!(reference, "p9.p_r")
            }
            other => panic!("expected unknown-signal error, got {other:?}"),
        }
    }

    #[test]
    fn missing_field_names_the_field() {
        let bad = SAMPLE.replace("  area 0.196  length 3000", "  length 3000");
        match parse_network(&bad) {
            Err(FormatError::Parse { message, .. }) => assert!(message.contains("area")),
            other => panic!("expected parse error, got {other:?}"),
        }
    }
}
