//! Prompt templates with `{column}` placeholders; `{{` and `}}` are literal
//! braces. The outcome and anything derived from it can never be rendered.

use ess_core::Dataset;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
enum Piece {
    Text(String),
    Field(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Template {
    pieces: Vec<Piece>,
}

impl Template {
    pub fn parse(text: &str) -> Result<Template, CliError> {
        let mut pieces = Vec::new();
        let mut buf = String::new();
        let mut chars = text.chars().peekable();
        while let Some(c) = chars.next() {
            match c {
                '{' if chars.peek() == Some(&'{') => {
                    chars.next();
                    buf.push('{');
                }
                '}' if chars.peek() == Some(&'}') => {
                    chars.next();
                    buf.push('}');
                }
                '{' => {
                    let mut name = String::new();
                    loop {
                        match chars.next() {
                            Some('}') => break,
                            Some('{') | None => {
                                return Err(CliError::Usage(format!("unterminated placeholder '{{{name}'")));
                            }
                            Some(ch) => name.push(ch),
                        }
                    }
                    let name = name.trim().to_string();
                    if name.is_empty() {
                        return Err(CliError::Usage("empty placeholder '{}'".into()));
                    }
                    if !buf.is_empty() {
                        pieces.push(Piece::Text(std::mem::take(&mut buf)));
                    }
                    pieces.push(Piece::Field(name));
                }
                '}' => return Err(CliError::Usage("unmatched '}' in template".into())),
                _ => buf.push(c),
            }
        }
        if !buf.is_empty() {
            pieces.push(Piece::Text(buf));
        }
        Ok(Template { pieces })
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn placeholders(&self) -> impl Iterator<Item = &str> {
        self.pieces.iter().filter_map(|p| match p {
            Piece::Field(f) => Some(f.as_str()),
            Piece::Text(_) => None,
        })
    }

    /// Checks every placeholder before rendering any row.
    pub fn check(&self, data: &Dataset) -> Result<(), CliError> {
        let mut guarded = vec![data.outcome_name().to_string()];
        guarded.extend(data.prediction_name().map(str::to_string));
        for (name, role) in data.schema() {
            use ess_core::Role::*;
            if matches!(role, Outcome | FixedRulePrediction | CatePrediction | TransformedOutcome) {
                guarded.push(name);
            }
        }
        for p in self.placeholders() {
            if guarded.iter().any(|g| g == p) {
                return Err(CliError::Usage(format!(
                    "placeholder {{{p}}} refers to the prediction target or a prediction and cannot be rendered"
                )));
            }
            if data.n() > 0 && data.render_value(p, 0).is_none() {
                return Err(CliError::Usage(format!("placeholder {{{p}}} does not match any schema column")));
            }
        }
        Ok(())
    }

    pub fn render(&self, data: &Dataset, row: usize) -> String {
        let mut out = String::new();
        for p in &self.pieces {
            match p {
                Piece::Text(t) => out.push_str(t),
                Piece::Field(f) => out.push_str(&data.render_value(f, row).expect("checked placeholders")),
            }
        }
        out
    }
}

/// Tabs, newlines and backslashes are escaped so each prompt stays on one line.
pub fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            _ => out.push(c),
        }
    }
    out
}

/// One `id<TAB>prompt` line per row.
pub fn render_prompts(data: &Dataset, template: &Template) -> Result<String, CliError> {
    template.check(data)?;
    if template.is_empty() {
        eprintln!("warning: template is empty; every prompt will be empty");
    }
    let mut out = String::new();
    for (row, id) in data.ids().iter().enumerate() {
        out.push_str(id);
        out.push('\t');
        out.push_str(&escape(&template.render(data, row)));
        out.push('\n');
    }
    Ok(out)
}
